// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/config.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <string>

#include "oldm/errors.hpp"
#include "oldm/io.hpp"
#include "oldm/rng.hpp"

namespace oldm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
    cfg.values_[full] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  return parse(io::read_text_file(path));
}

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + it->second + "'");
  }
  if (used != it->second.size())
    throw ConfigError("config key '" + key + "': trailing characters in '" + it->second + "'");
  return v;
}

std::size_t ConfigFile::get_size(const std::string& key, std::size_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + s + "'");
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': out of range: '" + s + "'");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false/1/0, got '" + it->second + "'");
}

NoiseSchedule AppConfig::schedule() const { return make_schedule(t_steps, beta_start, beta_end); }

AppConfig make_app_config(const ConfigFile& file) {
  static const std::set<std::string> known = {
      "sensor.height", "sensor.width", "sensor.fov_up_deg", "sensor.fov_down_deg", "sensor.r_max",
      "diffusion.t_steps", "diffusion.beta_start", "diffusion.beta_end",
      "object.voxels", "object.patch", "object.n_points", "object.token_dim", "object.blocks",
      "object.scale_logits",
      "scene.base_width", "scene.depth",
      "train.steps", "train.batch", "train.lr", "train.checkpoint_every", "train.lambda_osa",
      "world.extent", "world.ground_z", "world.objects_per_scene", "world.synth_objects",
      "world.synth_scenes", "world.object_range_min", "world.object_range_max",
      "eval.bev_grid", "eval.bev_extent",
  };
  for (const auto& [key, value] : file.values())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  AppConfig cfg;
  cfg.sensor.height = file.get_size("sensor.height", cfg.sensor.height);
  cfg.sensor.width = file.get_size("sensor.width", cfg.sensor.width);
  const double deg = SensorConfig::kPi / 180.0;
  cfg.sensor.fov_up = file.get_double("sensor.fov_up_deg", cfg.sensor.fov_up / deg) * deg;
  cfg.sensor.fov_down = file.get_double("sensor.fov_down_deg", cfg.sensor.fov_down / deg) * deg;
  cfg.sensor.r_max = file.get_double("sensor.r_max", cfg.sensor.r_max);
  cfg.sensor.validate();

  cfg.t_steps = file.get_size("diffusion.t_steps", cfg.t_steps);
  cfg.beta_start = file.get_double("diffusion.beta_start", cfg.beta_start);
  cfg.beta_end = file.get_double("diffusion.beta_end", cfg.beta_end);

  cfg.object.voxels = file.get_size("object.voxels", cfg.object.voxels);
  cfg.object.patch = file.get_size("object.patch", cfg.object.patch);
  cfg.object.n_points = file.get_size("object.n_points", cfg.object.n_points);
  cfg.object.token_dim = file.get_size("object.token_dim", cfg.object.token_dim);
  cfg.object.blocks = file.get_size("object.blocks", cfg.object.blocks);
  cfg.object.scale_logits = file.get_bool("object.scale_logits", cfg.object.scale_logits);

  cfg.scene.base_width = file.get_size("scene.base_width", cfg.scene.base_width);
  cfg.scene.depth = file.get_size("scene.depth", cfg.scene.depth);

  cfg.train.steps = file.get_size("train.steps", cfg.train.steps);
  cfg.train.batch = file.get_size("train.batch", cfg.train.batch);
  cfg.train.lr = file.get_double("train.lr", cfg.train.lr);
  cfg.train.checkpoint_every = file.get_size("train.checkpoint_every", cfg.train.checkpoint_every);
  cfg.train.lambda_osa = file.get_double("train.lambda_osa", cfg.train.lambda_osa);

  cfg.place.extent = file.get_double("world.extent", cfg.place.extent);
  cfg.place.ground_z = file.get_double("world.ground_z", cfg.place.ground_z);
  cfg.objects_per_scene = file.get_size("world.objects_per_scene", cfg.objects_per_scene);
  cfg.synth_objects = file.get_size("world.synth_objects", cfg.synth_objects);
  cfg.synth_scenes = file.get_size("world.synth_scenes", cfg.synth_scenes);
  cfg.object_range_min = file.get_double("world.object_range_min", cfg.object_range_min);
  cfg.object_range_max = file.get_double("world.object_range_max", cfg.object_range_max);
  if (!(cfg.object_range_min > 0.0) || !(cfg.object_range_max >= cfg.object_range_min))
    throw ConfigError("world.object_range_min/max must satisfy 0 < min <= max");

  cfg.bev_grid = file.get_size("eval.bev_grid", cfg.bev_grid);
  cfg.bev_extent = file.get_double("eval.bev_extent", cfg.bev_extent);
  if (cfg.bev_grid < 1 || !(cfg.bev_extent > 0.0))
    throw ConfigError("eval.bev_grid and eval.bev_extent must be positive");
  return cfg;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string describe(const AppConfig& c) {
  std::ostringstream out;
  out << "sensor.height = " << c.sensor.height << "\n"
      << "sensor.width = " << c.sensor.width << "\n"
      << "sensor.fov_up = " << num(c.sensor.fov_up) << "\n"
      << "sensor.fov_down = " << num(c.sensor.fov_down) << "\n"
      << "sensor.r_max = " << num(c.sensor.r_max) << "\n"
      << "diffusion.t_steps = " << c.t_steps << "\n"
      << "diffusion.beta_start = " << num(c.beta_start) << "\n"
      << "diffusion.beta_end = " << num(c.beta_end) << "\n"
      << "object.voxels = " << c.object.voxels << "\n"
      << "object.patch = " << c.object.patch << "\n"
      << "object.n_points = " << c.object.n_points << "\n"
      << "object.token_dim = " << c.object.token_dim << "\n"
      << "object.blocks = " << c.object.blocks << "\n"
      << "object.scale_logits = " << (c.object.scale_logits ? "true" : "false") << "\n"
      << "scene.base_width = " << c.scene.base_width << "\n"
      << "scene.depth = " << c.scene.depth << "\n"
      << "train.steps = " << c.train.steps << "\n"
      << "train.batch = " << c.train.batch << "\n"
      << "train.lr = " << num(c.train.lr) << "\n"
      << "train.checkpoint_every = " << c.train.checkpoint_every << "\n"
      << "train.lambda_osa = " << num(c.train.lambda_osa) << "\n"
      << "world.extent = " << num(c.place.extent) << "\n"
      << "world.ground_z = " << num(c.place.ground_z) << "\n"
      << "world.objects_per_scene = " << c.objects_per_scene << "\n"
      << "world.synth_objects = " << c.synth_objects << "\n"
      << "world.synth_scenes = " << c.synth_scenes << "\n"
      << "world.object_range_min = " << num(c.object_range_min) << "\n"
      << "world.object_range_max = " << num(c.object_range_max) << "\n"
      << "eval.bev_grid = " << c.bev_grid << "\n"
      << "eval.bev_extent = " << num(c.bev_extent) << "\n";
  return out.str();
}

std::string config_digest(const AppConfig& cfg) {
  const std::string dump = describe(cfg);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
  return buf;
}

}  // namespace oldm
