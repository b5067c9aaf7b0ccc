// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "oldm/config.hpp"
#include "oldm/datagen.hpp"
#include "oldm/errors.hpp"
#include "oldm/io.hpp"
#include "oldm/metrics.hpp"
#include "oldm/pipeline.hpp"

namespace oldm::cli {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::size_t threads = 1;
};

void add_globals(CLI::App* sub, Globals& g) {
  sub->add_option("--config", g.config_path, "configuration file (sectioned key = value)");
  sub->add_option("--seed", g.seed, "run seed");
  sub->add_option("--out", g.out, "output directory");
  sub->add_option("--threads", g.threads, "worker thread cap")->check(CLI::PositiveNumber);
}

AppConfig load_config(const Globals& g) {
  ConfigFile file;
  if (!g.config_path.empty()) file = ConfigFile::load(g.config_path);
  return make_app_config(file);
}

std::string indexed_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04zu%s", stem, i, ext);
  return buf;
}

// Provenance record: config digest, seed, input and output digests. Paths
// are stored relative to the run directory so identical reruns into
// different directories still produce identical bytes.
class Manifest {
 public:
  Manifest(std::string command, const AppConfig& cfg, std::uint64_t seed)
      : command_(std::move(command)), config_(config_digest(cfg)), seed_(seed) {}

  void add_input(const fs::path& file) {
    inputs_.emplace_back(io::file_digest(file), file.filename().string());
  }
  void add_output(const fs::path& dir, const fs::path& file) {
    outputs_.emplace_back(io::file_digest(file), fs::relative(file, dir).generic_string());
  }

  void write(const fs::path& dir) const {
    std::ostringstream out;
    out << "command: " << command_ << "\n";
    out << "config: " << config_ << "\n";
    out << "seed: " << seed_ << "\n";
    for (const auto& [digest, name] : inputs_) out << "input: " << digest << " " << name << "\n";
    for (const auto& [digest, name] : outputs_) out << "output: " << digest << " " << name << "\n";
    io::write_text_file(dir / "manifest.txt", out.str());
  }

 private:
  std::string command_;
  std::string config_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

// Names of the periodic checkpoints train_object/train_scene leave behind.
std::vector<std::string> periodic_checkpoints(const TrainConfig& tc) {
  std::vector<std::string> names;
  if (tc.checkpoint_every == 0) return names;
  for (std::size_t k = tc.checkpoint_every; k <= tc.steps; k += tc.checkpoint_every)
    if (k != tc.steps) names.push_back("checkpoint_" + std::to_string(k) + ".oldm");
  return names;
}

TrainConfig train_config(const AppConfig& cfg, const Globals& g) {
  TrainConfig tc = cfg.train;
  tc.seed = g.seed;
  tc.threads = g.threads;
  tc.out_dir = g.out;
  return tc;
}

void report_training(const TrainResult& result) {
  if (result.losses.empty()) return;
  std::cout << "steps: " << result.losses.size() << "\n";
  std::cout << "initial loss: " << result.losses.front() << "\n";
  std::cout << "final loss: " << result.losses.back() << "\n";
  std::cout << "checkpoint: " << result.final_checkpoint.string() << "\n";
}

void manifest_training(Manifest& m, const fs::path& out, const TrainConfig& tc,
                       const TrainResult& result) {
  for (const std::string& name : periodic_checkpoints(tc)) m.add_output(out, fs::path(out) / name);
  m.add_output(out, result.final_checkpoint);
  m.add_output(out, fs::path(out) / "loss_log.txt");
}

// Scenario + per-entry cloud files as written by `synth` and `gen-objects`.
struct ObjectSet {
  std::vector<io::ScenarioEntry> entries;
  std::vector<PointCloud> clouds;
  fs::path scenario;
};

ObjectSet read_object_set(const fs::path& dir) {
  ObjectSet set;
  set.scenario = dir / "objects.scenario";
  set.entries = io::read_scenario(set.scenario);
  set.clouds.reserve(set.entries.size());
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    set.clouds.push_back(io::read_point_cloud(dir / indexed_name("object", i, ".bin")));
  return set;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// ---- synth ----------------------------------------------------------------

io::ScenarioEntry draw_object_entry(const AppConfig& cfg, Rng& rng) {
  const auto& cats = default_categories();
  const CategorySpec& cat = cats[rng.below(cats.size())];
  io::ScenarioEntry e;
  e.category = cat.name;
  e.description = cat.descriptions[rng.below(cat.descriptions.size())];
  const double range =
      cfg.object_range_min + (cfg.object_range_max - cfg.object_range_min) * rng.uniform01();
  const double azimuth = SensorConfig::kPi * (1.0 - 2.0 * rng.uniform01());
  e.box.w = cat.w_lo + (cat.w_hi - cat.w_lo) * rng.uniform01();
  e.box.l = cat.l_lo + (cat.l_hi - cat.l_lo) * rng.uniform01();
  e.box.h = cat.h_lo + (cat.h_hi - cat.h_lo) * rng.uniform01();
  e.box.x_c = range * std::cos(azimuth);
  e.box.y_c = range * std::sin(azimuth);
  e.box.z_c = cfg.place.ground_z + e.box.h * 0.5;
  e.box.r = SensorConfig::kPi * (1.0 - 2.0 * rng.uniform01());
  return e;
}

int cmd_synth(const Globals& g) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  const fs::path obj_dir = out / "objects";
  const fs::path scene_dir = out / "scenes";
  fs::create_directories(obj_dir);
  fs::create_directories(scene_dir);
  Manifest manifest("synth", cfg, g.seed);

  Rng obj_rng(g.seed, 2);
  std::vector<io::ScenarioEntry> entries;
  for (std::size_t i = 0; i < cfg.synth_objects; ++i) {
    PointCloud cloud;
    io::ScenarioEntry entry;
    std::size_t attempt = 0;
    // Redraw boxes that yield no returns (too far or too low for the grid).
    for (; attempt < 100; ++attempt) {
      entry = draw_object_entry(cfg, obj_rng);
      cloud = synth_object(entry.category, entry.box, cfg.sensor, obj_rng);
      if (!cloud.empty()) break;
    }
    if (cloud.empty())
      throw CapacityError("synth: no visible box found for object " + std::to_string(i), i);
    entries.push_back(entry);
    const fs::path file = obj_dir / indexed_name("object", i, ".bin");
    io::write_point_cloud(file, cloud);
    manifest.add_output(out, file);
  }
  io::write_scenario(obj_dir / "objects.scenario", entries);
  manifest.add_output(out, obj_dir / "objects.scenario");

  Rng scene_rng(g.seed, 3);
  const auto& cats = default_categories();
  for (std::size_t i = 0; i < cfg.synth_scenes; ++i) {
    const auto layout =
        place_objects_uniform(cfg.objects_per_scene, cfg.place, cats, scene_rng);
    const SynthScene scene =
        synth_scene(cfg.sensor, layout, cfg.place.ground_z, scene_rng, category_names());
    std::vector<io::ScenarioEntry> scenario;
    for (const auto& [box, category] : layout) {
      const CategorySpec& cat = category_spec(category);
      scenario.push_back(
          {category, box, cat.descriptions[scene_rng.below(cat.descriptions.size())]});
    }
    const fs::path bin = scene_dir / indexed_name("scene", i, ".bin");
    const fs::path ri = scene_dir / indexed_name("scene", i, ".ri");
    const fs::path sc = scene_dir / indexed_name("scene", i, ".scenario");
    io::write_point_cloud(bin, scene.cloud);
    io::write_range_image(ri, project_to_range(scene.cloud, cfg.sensor));
    io::write_scenario(sc, scenario);
    manifest.add_output(out, bin);
    manifest.add_output(out, ri);
    manifest.add_output(out, sc);
  }

  manifest.write(out);
  std::cout << "wrote " << cfg.synth_objects << " objects and " << cfg.synth_scenes
            << " scenes under " << out.string() << "\n";
  return 0;
}

// ---- training -------------------------------------------------------------

int cmd_train_object(const Globals& g, const std::string& data) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  fs::create_directories(out);
  const ObjectSet set = read_object_set(data);

  HashTextEncoder enc(cfg.object.text_dim);
  std::vector<ObjectSample> samples;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    if (set.clouds[i].empty()) {
      std::cerr << "skipping empty object cloud " << i << "\n";
      continue;
    }
    const auto& e = set.entries[i];
    samples.push_back(make_object_sample(set.clouds[i], e.box, e.category, e.description, enc,
                                         cfg.object.n_points));
  }
  if (samples.empty()) throw ValidationError("train-object: no usable training objects");

  ParamStore ps;
  ObjectDenoiser den(cfg.object, ps);
  Rng init_rng(g.seed, 0);
  ps.init_all(init_rng);

  const TrainConfig tc = train_config(cfg, g);
  const TrainResult result = train_object(den, ps, samples, cfg.schedule(), tc);

  Manifest manifest("train-object", cfg, g.seed);
  manifest.add_input(set.scenario);
  manifest_training(manifest, out, tc, result);
  manifest.write(out);
  report_training(result);
  return 0;
}

int cmd_train_scene(const Globals& g, const std::string& data, std::optional<double> osa_lambda) {
  AppConfig cfg = load_config(g);
  if (osa_lambda) cfg.train.lambda_osa = *osa_lambda;
  const fs::path out = g.out;
  fs::create_directories(out);

  const std::vector<fs::path> bins = list_files(data, ".bin");
  if (bins.empty()) throw ValidationError("train-scene: no scene files under " + std::string(data));
  const std::vector<std::string> cats = category_names();
  std::vector<SceneSample> samples;
  std::vector<fs::path> scenario_files;
  for (const fs::path& bin : bins) {
    fs::path sc = bin;
    sc.replace_extension(".scenario");
    const PointCloud cloud = io::read_point_cloud(bin);
    const auto entries = io::read_scenario(sc);
    std::vector<std::pair<ObjectBox, std::string>> boxes;
    for (const auto& e : entries) boxes.emplace_back(e.box, e.category);
    const MaskStack masks = rasterize_boxes(boxes, cloud, cfg.sensor, cats);
    samples.push_back(make_scene_sample(cloud, masks, cfg.sensor));
    scenario_files.push_back(sc);
  }

  ParamStore ps;
  SceneDenoiser den(cfg.scene, ps);
  Controller ctrl(cfg.scene, ps);
  Rng init_rng(g.seed, 0);
  ps.init_all(init_rng);

  const TrainConfig tc = train_config(cfg, g);
  const TrainResult result = train_scene(den, ctrl, ps, samples, cfg.schedule(), tc);

  Manifest manifest("train-scene", cfg, g.seed);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    manifest.add_input(bins[i]);
    manifest.add_input(scenario_files[i]);
  }
  manifest_training(manifest, out, tc, result);
  manifest.write(out);
  report_training(result);
  return 0;
}

// ---- generation -----------------------------------------------------------

int cmd_gen_objects(const Globals& g, const std::string& scenario_path,
                    const std::string& checkpoint) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  fs::create_directories(out);
  const auto entries = io::read_scenario(scenario_path);

  ParamStore ps;
  ObjectDenoiser den(cfg.object, ps);
  ps.load(checkpoint);

  HashTextEncoder enc(cfg.object.text_dim);
  std::vector<std::pair<TextPrompt, ObjectBox>> conds;
  for (const auto& e : entries)
    conds.emplace_back(format_prompt(e.category, e.description), e.box);
  const std::vector<PointCloud> clouds =
      generate_objects(den, conds, enc, cfg.schedule(), g.seed);

  Manifest manifest("gen-objects", cfg, g.seed);
  manifest.add_input(scenario_path);
  manifest.add_input(checkpoint);
  io::write_scenario(out / "objects.scenario", entries);
  manifest.add_output(out, out / "objects.scenario");
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const fs::path file = out / indexed_name("object", i, ".bin");
    io::write_point_cloud(file, clouds[i]);
    manifest.add_output(out, file);
  }
  manifest.write(out);
  std::cout << "generated " << clouds.size() << " objects under " << out.string() << "\n";
  return 0;
}

int cmd_gen_scene(const Globals& g, const std::string& objects_dir,
                  const std::string& checkpoint) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  fs::create_directories(out);
  const ObjectSet set = read_object_set(objects_dir);

  std::vector<PlacedObject> placed;
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    placed.push_back({set.clouds[i], set.entries[i].box, set.entries[i].category});
  const ComposedObjects composed = compose_object_image(placed, cfg.sensor, category_names());

  ParamStore ps;
  SceneDenoiser den(cfg.scene, ps);
  Controller ctrl(cfg.scene, ps);
  ps.load(checkpoint);

  Rng rng(g.seed, 0);
  const GeneratedScene scene =
      generate_scene(den, ctrl, composed.image, cfg.schedule(), cfg.sensor, rng);

  Manifest manifest("gen-scene", cfg, g.seed);
  manifest.add_input(set.scenario);
  manifest.add_input(checkpoint);
  io::write_range_image(out / "obj_image.ri", composed.image);
  io::write_range_image(out / "gen_scene.ri", scene.image);
  io::write_point_cloud(out / "gen_scene.bin", scene.cloud);
  manifest.add_output(out, out / "obj_image.ri");
  manifest.add_output(out, out / "gen_scene.ri");
  manifest.add_output(out, out / "gen_scene.bin");
  manifest.write(out);
  std::cout << "generated scene with " << scene.cloud.size() << " points under " << out.string()
            << "\n";
  return 0;
}

// ---- completion -----------------------------------------------------------

int cmd_complete(const Globals& g, const std::string& input, const std::string& mode,
                 const std::string& mask_path, const std::string& checkpoint) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  fs::create_directories(out);
  RangeImage img = io::read_range_image(input);
  if (img.height != cfg.sensor.height || img.width != cfg.sensor.width)
    throw ValidationError("complete: input image does not match the configured sensor grid");

  ParamStore ps;
  SceneDenoiser den(cfg.scene, ps);
  Controller ctrl(cfg.scene, ps);  // registered so scene checkpoints load whole
  ps.load(checkpoint);

  Rng rng(g.seed, 0);
  RangeImage completed;
  std::ostringstream report;
  report << "mode: " << mode << "\n";
  if (mode == "sparse2dense") {
    // Keep every 4th row, blank the rest, then repaint the blanks.
    RangeImage sparse = img;
    for (std::size_t v = 0; v < sparse.height; ++v) {
      if (v % 4 == 0) continue;
      for (std::size_t u = 0; u < sparse.width; ++u) {
        sparse.depth(v, u) = 0.0f;
        sparse.intensity(v, u) = 0.0f;
      }
    }
    completed = sparse_to_dense(sparse, den, cfg.schedule(), rng);
    report << "conditioning rows: " << sparse.height / 4 << "\n";
  } else if (mode == "partial") {
    if (mask_path.empty()) throw ValidationError("complete: --mask is required for partial mode");
    std::size_t mh = 0, mw = 0;
    const std::vector<std::uint8_t> mask = io::read_mask(mask_path, mh, mw);
    if (mh != img.height || mw != img.width)
      throw ValidationError("complete: mask dimensions do not match the input image");
    completed = partial_completion(img, mask, den, cfg.schedule(), rng);
    std::size_t known = 0;
    for (const auto m : mask) known += m;
    report << "known pixels: " << known << "\n";
  } else {
    throw ValidationError("complete: mode must be sparse2dense or partial");
  }

  Manifest manifest("complete", cfg, g.seed);
  manifest.add_input(fs::path(input));
  if (!mask_path.empty() && mode == "partial") manifest.add_input(fs::path(mask_path));
  manifest.add_input(checkpoint);
  io::write_range_image(out / "completed.ri", completed);
  io::write_point_cloud(out / "completed.bin", unproject_range(completed, cfg.sensor));
  io::write_text_file(out / "report.txt", report.str());
  manifest.add_output(out, out / "completed.ri");
  manifest.add_output(out, out / "completed.bin");
  manifest.add_output(out, out / "report.txt");
  manifest.write(out);
  std::cout << report.str();
  return 0;
}

// ---- augmentation ---------------------------------------------------------

int cmd_augment(const Globals& g, const std::string& scene_path, const std::string& scenario) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  fs::create_directories(out);
  const PointCloud scene = io::read_point_cloud(scene_path);
  const fs::path scenario_file = scenario;
  const ObjectSet set = read_object_set(scenario_file.parent_path());

  std::vector<std::pair<PointCloud, ObjectBox>> inserts;
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    inserts.emplace_back(set.clouds[i], set.entries[i].box);
  const PointCloud augmented = augment_scene(scene, inserts);

  Manifest manifest("augment", cfg, g.seed);
  manifest.add_input(fs::path(scene_path));
  manifest.add_input(set.scenario);
  io::write_point_cloud(out / "augmented.bin", augmented);
  manifest.add_output(out, out / "augmented.bin");
  manifest.write(out);
  std::cout << "augmented scene: " << scene.size() << " -> " << augmented.size() << " points\n";
  return 0;
}

// ---- evaluation -----------------------------------------------------------

std::vector<PointCloud> read_cloud_dir(const fs::path& dir) {
  std::vector<PointCloud> clouds;
  for (const fs::path& file : list_files(dir, ".bin"))
    clouds.push_back(io::read_point_cloud(file));
  if (clouds.empty()) throw ValidationError("eval: no .bin clouds under " + dir.string());
  return clouds;
}

int cmd_eval(const Globals& g, const std::string& gen_dir, const std::string& ref_dir,
             const std::string& metric_list, bool paper_scale) {
  const AppConfig cfg = load_config(g);
  const fs::path out = g.out;
  fs::create_directories(out);

  std::vector<std::string> wanted;
  std::stringstream ss(metric_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item != "cd" && item != "jsd" && item != "mmd" && item != "fpd" && item != "ss")
      throw ValidationError("eval: unknown metric '" + item + "'");
    wanted.push_back(item);
  }
  if (wanted.empty()) throw ValidationError("eval: empty metric list");

  const std::vector<PointCloud> gen = read_cloud_dir(gen_dir);
  const std::vector<PointCloud> ref = read_cloud_dir(ref_dir);
  const std::size_t pairs = std::min(gen.size(), ref.size());

  MetricEntries entries;
  for (const std::string& name : wanted) {
    if (name == "cd") {
      double total = 0.0;
      for (std::size_t i = 0; i < pairs; ++i) total += chamfer_distance(gen[i], ref[i]);
      entries.emplace_back("cd", total / static_cast<double>(pairs));
    } else if (name == "jsd") {
      PointCloud gen_all, ref_all;
      for (const auto& c : gen)
        gen_all.points.insert(gen_all.points.end(), c.points.begin(), c.points.end());
      for (const auto& c : ref)
        ref_all.points.insert(ref_all.points.end(), c.points.begin(), c.points.end());
      entries.emplace_back("jsd", jsd(bev_histogram(gen_all, cfg.bev_grid, cfg.bev_extent),
                                      bev_histogram(ref_all, cfg.bev_grid, cfg.bev_extent)));
    } else if (name == "mmd") {
      std::vector<BevHistogram> hg, hr;
      for (const auto& c : gen) hg.push_back(bev_histogram(c, cfg.bev_grid, cfg.bev_extent));
      for (const auto& c : ref) hr.push_back(bev_histogram(c, cfg.bev_grid, cfg.bev_extent));
      entries.emplace_back("mmd", mmd(hg, hr));
    } else if (name == "fpd") {
      std::vector<FeatureVector> fg, fr;
      for (const auto& c : gen) fg.push_back(extract_features(c));
      for (const auto& c : ref) fr.push_back(extract_features(c));
      entries.emplace_back("fpd", frechet_distance(fr, fg));
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < pairs; ++i)
        total += semantic_similarity(extract_features(gen[i]), extract_features(ref[i]));
      entries.emplace_back("ss", total / static_cast<double>(pairs));
    }
  }
  if (paper_scale) apply_paper_scale(entries);

  const std::string table = format_table(entries);
  io::write_text_file(out / "report.txt", table);
  Manifest manifest("eval", cfg, g.seed);
  for (const fs::path& f : list_files(gen_dir, ".bin")) manifest.add_input(f);
  for (const fs::path& f : list_files(ref_dir, ".bin")) manifest.add_input(f);
  manifest.add_output(out, out / "report.txt");
  manifest.write(out);
  std::cout << table;
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"oldm"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& a : full) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"object-aware LiDAR diffusion tool"};
  app.require_subcommand(1);
  Globals g;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_globals(synth, g);

  auto* train_obj = app.add_subcommand("train-object", "train the object-stage denoiser");
  add_globals(train_obj, g);
  std::string obj_data;
  train_obj->add_option("--data", obj_data, "objects directory from synth")->required();

  auto* train_sc = app.add_subcommand("train-scene", "train the scene denoiser and controller");
  add_globals(train_sc, g);
  std::string scene_data;
  double osa_lambda_value = 0.0;
  train_sc->add_option("--data", scene_data, "scenes directory from synth")->required();
  auto* osa_opt = train_sc->add_option("--osa-lambda", osa_lambda_value,
                                       "weight of the object semantic alignment loss");

  auto* gen_obj = app.add_subcommand("gen-objects", "sample object clouds for a scenario");
  add_globals(gen_obj, g);
  std::string scenario_path, obj_ckpt;
  gen_obj->add_option("--scenario", scenario_path, "scenario file")->required();
  gen_obj->add_option("--checkpoint", obj_ckpt, "object-stage checkpoint")->required();

  auto* gen_sc = app.add_subcommand("gen-scene", "sample a scene guided by composed objects");
  add_globals(gen_sc, g);
  std::string objects_dir, scene_ckpt;
  gen_sc->add_option("--objects", objects_dir, "directory from gen-objects")->required();
  gen_sc->add_option("--checkpoint", scene_ckpt, "scene-stage checkpoint")->required();

  auto* complete = app.add_subcommand("complete", "repaint-based range image completion");
  add_globals(complete, g);
  std::string comp_input, comp_mode, comp_mask, comp_ckpt;
  complete->add_option("--input", comp_input, "range image (.ri)")->required();
  complete->add_option("--mode", comp_mode, "sparse2dense or partial")->required();
  complete->add_option("--mask", comp_mask, "known-pixel mask (.ri, one channel)");
  complete->add_option("--checkpoint", comp_ckpt, "scene-stage checkpoint")->required();

  auto* augment = app.add_subcommand("augment", "paste object clouds into a scene");
  add_globals(augment, g);
  std::string aug_scene, aug_scenario;
  augment->add_option("--scene", aug_scene, "scene point cloud (.bin)")->required();
  augment->add_option("--scenario", aug_scenario, "objects.scenario next to object clouds")
      ->required();

  auto* eval = app.add_subcommand("eval", "compare generated clouds against references");
  add_globals(eval, g);
  std::string gen_dir, ref_dir, metric_list = "cd,jsd,mmd,fpd,ss";
  bool paper_scale = false;
  eval->add_option("--gen", gen_dir, "directory of generated .bin clouds")->required();
  eval->add_option("--ref", ref_dir, "directory of reference .bin clouds")->required();
  eval->add_option("--metrics", metric_list, "comma list from cd,jsd,mmd,fpd,ss");
  eval->add_flag("--paper-scale", paper_scale, "rescale jsd by 10 and mmd by 1e4");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(g);
    if (train_obj->parsed()) return cmd_train_object(g, obj_data);
    if (train_sc->parsed()) {
      std::optional<double> lambda;
      if (osa_opt->count() > 0) lambda = osa_lambda_value;
      return cmd_train_scene(g, scene_data, lambda);
    }
    if (gen_obj->parsed()) return cmd_gen_objects(g, scenario_path, obj_ckpt);
    if (gen_sc->parsed()) return cmd_gen_scene(g, objects_dir, scene_ckpt);
    if (complete->parsed()) return cmd_complete(g, comp_input, comp_mode, comp_mask, comp_ckpt);
    if (augment->parsed()) return cmd_augment(g, aug_scene, aug_scenario);
    if (eval->parsed()) return cmd_eval(g, gen_dir, ref_dir, metric_list, paper_scale);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace oldm::cli
