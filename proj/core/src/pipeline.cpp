// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "oldm/errors.hpp"

namespace oldm {

const std::vector<CategorySpec>& default_categories() {
  static const std::vector<CategorySpec> cats = {
      {"car",
       1.6, 2.0, 3.5, 4.5, 1.4, 1.8,
       {"a parked sedan", "a car waiting at a junction", "a slowly moving car"}},
      {"pedestrian",
       0.5, 0.8, 0.5, 0.8, 1.6, 1.9,
       {"a person walking along the road", "a person standing still"}},
      {"cyclist",
       0.5, 0.8, 1.5, 2.0, 1.4, 1.8,
       {"a cyclist riding in the lane", "a cyclist waiting to cross"}},
  };
  return cats;
}

const CategorySpec& category_spec(const std::string& name) {
  for (const auto& c : default_categories())
    if (c.name == name) return c;
  throw ConfigError("unknown object category '" + name + "'");
}

std::vector<std::string> category_names() {
  std::vector<std::string> names;
  for (const auto& c : default_categories()) names.push_back(c.name);
  return names;
}

Tensor canonical_rows(const PointCloud& normalized, std::size_t n) {
  const std::size_t k = normalized.size();
  if (k == 0) throw ValidationError("canonical_rows: empty cloud");
  if (n == 0) throw ValidationError("canonical_rows: zero target size");
  std::vector<Point> sorted = normalized.points;
  std::sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) {
    return std::tie(a.x, a.y, a.z, a.intensity) < std::tie(b.x, b.y, b.z, b.intensity);
  });
  Tensor rows({n, 4});
  for (std::size_t j = 0; j < n; ++j) {
    const Point& p = sorted[j * k / n];
    rows.at2(j, 0) = p.x;
    rows.at2(j, 1) = p.y;
    rows.at2(j, 2) = p.z;
    rows.at2(j, 3) = p.intensity;
  }
  return rows;
}

ObjectSample make_object_sample(const PointCloud& cloud, const ObjectBox& box,
                                const std::string& category, const std::string& description,
                                const TextEncoder& enc, std::size_t n_points,
                                const BoxNormalization& norm) {
  const CategoryScale scale = category_spec(category).scale();
  ObjectSample s;
  s.x0 = canonical_rows(normalize_object(cloud, box, scale), n_points);
  s.f_b = fourier_embed(box, norm);
  s.f_t = enc.encode(format_prompt(category, description));
  return s;
}

SceneSample make_scene_sample(const PointCloud& cloud, const MaskStack& masks,
                              const SensorConfig& cfg) {
  if (masks.height != cfg.height || masks.width != cfg.width)
    throw ValidationError("make_scene_sample: mask dimensions do not match the sensor grid");
  SceneSample s;
  s.img0 = image_to_tensor(project_to_range(cloud, cfg));
  s.obj_img = Tensor::zeros({2, cfg.height, cfg.width});
  for (std::size_t v = 0; v < cfg.height; ++v)
    for (std::size_t u = 0; u < cfg.width; ++u) {
      bool hit = false;
      for (std::size_t c = 0; c < masks.categories() && !hit; ++c) hit = masks.at(c, v, u) != 0;
      if (hit) {
        s.obj_img.at3(0, v, u) = s.img0.at3(0, v, u);
        s.obj_img.at3(1, v, u) = s.img0.at3(1, v, u);
      }
    }
  s.masks = masks;
  return s;
}

namespace {

PointCloud cloud_from_rows(const Tensor& rows) {
  PointCloud cloud;
  cloud.points.resize(rows.dim(0));
  for (std::size_t i = 0; i < rows.dim(0); ++i)
    cloud.points[i] = {rows.at2(i, 0), rows.at2(i, 1), rows.at2(i, 2), rows.at2(i, 3)};
  return cloud;
}

}  // namespace

std::vector<PointCloud> generate_objects(const ObjectDenoiser& den,
                                         const std::vector<std::pair<TextPrompt, ObjectBox>>& conds,
                                         const TextEncoder& enc, const NoiseSchedule& sched,
                                         std::uint64_t seed, const BoxNormalization& norm) {
  const ObjectDenoiserConfig& cfg = den.config();
  std::vector<PointCloud> out;
  out.reserve(conds.size());
  for (std::size_t i = 0; i < conds.size(); ++i) {
    const auto& [prompt, box] = conds[i];
    const CategoryScale scale = category_spec(prompt.category).scale();
    const std::vector<double> cond =
        den.combine(fourier_embed(box, norm, cfg.fourier_freqs), enc.encode(prompt));
    Rng rng(seed, i);
    Tensor x = sample_loop(
        {cfg.n_points, 4},
        [&](const Tensor& x_t, std::size_t t) {
          return den.infer(voxelize(cloud_from_rows(x_t), cfg.voxels), t, cond);
        },
        sched, rng);
    for (double& v : x.data) v = std::clamp(v, -1.0, 1.0);
    out.push_back(denormalize_object(cloud_from_rows(x), box, scale));
  }
  return out;
}

ComposedObjects compose_object_image(const std::vector<PlacedObject>& objects,
                                     const SensorConfig& cfg,
                                     const std::vector<std::string>& categories) {
  std::vector<std::size_t> channel(objects.size());
  for (std::size_t j = 0; j < objects.size(); ++j) {
    const auto it = std::find(categories.begin(), categories.end(), objects[j].category);
    if (it == categories.end())
      throw ConfigError("compose_object_image: category '" + objects[j].category +
                        "' missing from the mask channel list");
    channel[j] = static_cast<std::size_t>(it - categories.begin());
  }

  PointCloud all;
  std::vector<std::size_t> owner;  // object index per point
  for (std::size_t j = 0; j < objects.size(); ++j)
    for (const Point& p : objects[j].cloud.points) {
      all.points.push_back(p);
      owner.push_back(j);
    }

  const Projection proj = project_with_winners(all, cfg);
  ComposedObjects out;
  out.image = proj.image;
  out.masks = MaskStack(cfg.height, cfg.width, categories);
  for (std::size_t v = 0; v < cfg.height; ++v)
    for (std::size_t u = 0; u < cfg.width; ++u) {
      const std::int32_t w = proj.winner[v * cfg.width + u];
      if (w >= 0) out.masks.at(channel[owner[static_cast<std::size_t>(w)]], v, u) = 1;
    }
  return out;
}

GeneratedScene generate_scene(const SceneDenoiser& den, const Controller& ctrl,
                              const RangeImage& obj_img, const NoiseSchedule& sched,
                              const SensorConfig& cfg, Rng& rng) {
  if (obj_img.height != cfg.height || obj_img.width != cfg.width || obj_img.channels != 2)
    throw ValidationError("generate_scene: object image does not match the sensor grid");
  const Tensor obj = image_to_tensor(obj_img);
  Tensor x = sample_loop(
      {2, cfg.height, cfg.width},
      [&](const Tensor& x_t, std::size_t t) {
        const ControlFeatures control = ctrl.infer(obj, x_t, t);
        return den.infer(x_t, t, &control);
      },
      sched, rng);
  for (double& v : x.data) v = std::clamp(v, 0.0, 1.0);
  GeneratedScene out;
  out.image = tensor_to_image(x);
  out.cloud = unproject_range(out.image, cfg);
  return out;
}

namespace {

RangeImage repaint_image(const RangeImage& input, const Tensor& mask, const SceneDenoiser& den,
                         const NoiseSchedule& sched, Rng& rng) {
  Tensor x = conditional_sample_loop(
      image_to_tensor(input), mask,
      [&](const Tensor& x_t, std::size_t t) { return den.infer(x_t, t, nullptr); }, sched, rng);
  for (double& v : x.data) v = std::clamp(v, 0.0, 1.0);
  return tensor_to_image(x);
}

}  // namespace

RangeImage sparse_to_dense(const RangeImage& sparse, const SceneDenoiser& den,
                           const NoiseSchedule& sched, Rng& rng) {
  if (sparse.channels != 2) throw ValidationError("sparse_to_dense: image must have 2 channels");
  if (sparse.height == 0 || sparse.height % 4 != 0)
    throw ValidationError("sparse_to_dense: height must be a positive multiple of 4");
  Tensor mask = Tensor::zeros({2, sparse.height, sparse.width});
  for (std::size_t v = 0; v < sparse.height; v += 4)
    for (std::size_t u = 0; u < sparse.width; ++u) {
      mask.at3(0, v, u) = 1.0;
      mask.at3(1, v, u) = 1.0;
    }
  return repaint_image(sparse, mask, den, sched, rng);
}

RangeImage partial_completion(const RangeImage& partial, const std::vector<std::uint8_t>& known,
                              const SceneDenoiser& den, const NoiseSchedule& sched, Rng& rng) {
  if (partial.channels != 2)
    throw ValidationError("partial_completion: image must have 2 channels");
  if (known.size() != partial.height * partial.width)
    throw ValidationError("partial_completion: mask shape mismatch");
  Tensor mask = Tensor::zeros({2, partial.height, partial.width});
  for (std::size_t i = 0; i < known.size(); ++i) {
    if (known[i] > 1) throw ValidationError("partial_completion: mask must be binary");
    if (known[i]) {
      mask.data[i] = 1.0;
      mask.data[known.size() + i] = 1.0;
    }
  }
  return repaint_image(partial, mask, den, sched, rng);
}

namespace {

// 2D separating-axis test data: center, two unit axes, half extents.
struct BevRect {
  double cx, cy;
  double ax[2], ay[2];  // axis 0 along heading (length), axis 1 to its left
  double half[2];
};

BevRect bev_rect(const ObjectBox& b) {
  const double cr = std::cos(b.r), sr = std::sin(b.r);
  return {b.x_c, b.y_c, {cr, -sr}, {sr, cr}, {b.l * 0.5, b.w * 0.5}};
}

}  // namespace

bool bev_overlap(const ObjectBox& a, const ObjectBox& b) {
  const BevRect ra = bev_rect(a), rb = bev_rect(b);
  const double dx = rb.cx - ra.cx, dy = rb.cy - ra.cy;
  const BevRect* rects[2] = {&ra, &rb};
  for (const BevRect* r : rects)
    for (int axis = 0; axis < 2; ++axis) {
      const double sx = r->ax[axis], sy = r->ay[axis];
      const double pa = ra.half[0] * std::abs(ra.ax[0] * sx + ra.ay[0] * sy) +
                        ra.half[1] * std::abs(ra.ax[1] * sx + ra.ay[1] * sy);
      const double pb = rb.half[0] * std::abs(rb.ax[0] * sx + rb.ay[0] * sy) +
                        rb.half[1] * std::abs(rb.ax[1] * sx + rb.ay[1] * sy);
      if (std::abs(dx * sx + dy * sy) >= pa + pb) return false;
    }
  return true;
}

std::vector<std::pair<ObjectBox, std::string>> place_objects_uniform(
    std::size_t n, const PlacementConfig& pc, const std::vector<CategorySpec>& cats, Rng& rng) {
  if (cats.empty() && n > 0)
    throw ConfigError("place_objects_uniform: no categories to draw from");
  std::vector<std::pair<ObjectBox, std::string>> placed;
  placed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = false;
    for (std::size_t attempt = 0; attempt < pc.max_attempts && !ok; ++attempt) {
      const CategorySpec& cat = cats[rng.below(cats.size())];
      ObjectBox box;
      box.x_c = pc.extent * (2.0 * rng.uniform01() - 1.0);
      box.y_c = pc.extent * (2.0 * rng.uniform01() - 1.0);
      box.w = cat.w_lo + (cat.w_hi - cat.w_lo) * rng.uniform01();
      box.l = cat.l_lo + (cat.l_hi - cat.l_lo) * rng.uniform01();
      box.h = cat.h_lo + (cat.h_hi - cat.h_lo) * rng.uniform01();
      box.z_c = pc.ground_z + box.h * 0.5;
      box.r = SensorConfig::kPi * (1.0 - 2.0 * rng.uniform01());
      bool clash = false;
      for (const auto& [other, name] : placed)
        if (bev_overlap(box, other)) {
          clash = true;
          break;
        }
      if (!clash) {
        placed.emplace_back(box, cat.name);
        ok = true;
      }
    }
    if (!ok)
      throw CapacityError("place_objects_uniform: placed " + std::to_string(placed.size()) +
                              " of " + std::to_string(n) + " boxes before running out of attempts",
                          placed.size());
  }
  return placed;
}

PointCloud augment_scene(const PointCloud& scene,
                         const std::vector<std::pair<PointCloud, ObjectBox>>& inserts) {
  PointCloud out;
  for (const Point& p : scene.points) {
    bool inside = false;
    for (const auto& [cloud, box] : inserts)
      if (box.contains(p)) {
        inside = true;
        break;
      }
    if (!inside) out.points.push_back(p);
  }
  for (const auto& [cloud, box] : inserts)
    out.points.insert(out.points.end(), cloud.points.begin(), cloud.points.end());
  return out;
}

}  // namespace oldm
