// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "oldm/networks.hpp"
#include "oldm/pipeline.hpp"
#include "oldm/types.hpp"

namespace oldm {

// Sectioned `key = value` text. Keys flatten to "section.key"; lines whose
// first non-blank character is '#' or ';' are comments.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Effective settings for every tool run. Field defaults are the module
// defaults; make_app_config overlays a ConfigFile and rejects unknown keys.
struct AppConfig {
  SensorConfig sensor;
  std::size_t t_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  ObjectDenoiserConfig object;
  SceneDenoiserConfig scene;
  TrainConfig train;
  PlacementConfig place;
  std::size_t synth_objects = 64;
  std::size_t synth_scenes = 16;
  std::size_t objects_per_scene = 5;
  double object_range_min = 8.0;   // synth object box distance band, meters
  double object_range_max = 30.0;
  std::size_t bev_grid = 100;
  double bev_extent = 50.0;

  NoiseSchedule schedule() const;
};

AppConfig make_app_config(const ConfigFile& file);

// Canonical plain-text dump of the effective settings; equal configurations
// dump to equal bytes.
std::string describe(const AppConfig& cfg);

// FNV-1a digest of describe(cfg), hex-encoded; recorded in run manifests.
std::string config_digest(const AppConfig& cfg);

}  // namespace oldm
