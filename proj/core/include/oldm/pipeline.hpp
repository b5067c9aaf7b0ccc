// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "oldm/conditioning.hpp"
#include "oldm/diffusion.hpp"
#include "oldm/geometry.hpp"
#include "oldm/networks.hpp"
#include "oldm/rng.hpp"
#include "oldm/types.hpp"

namespace oldm {

// Per-category box size range, canned prompt descriptions, and the matching
// normalization half-extents.
struct CategorySpec {
  std::string name;
  double w_lo = 0.5, w_hi = 1.0;
  double l_lo = 0.5, l_hi = 1.0;
  double h_lo = 0.5, h_hi = 1.0;
  std::vector<std::string> descriptions;

  // Upper-bound half extents, so normalized coordinates stay inside [-1,1]
  // without clamping for any box drawn from the range.
  CategoryScale scale() const { return {l_hi * 0.5, w_hi * 0.5, h_hi * 0.5}; }
};

const std::vector<CategorySpec>& default_categories();
const CategorySpec& category_spec(const std::string& name);  // ConfigError on unknown
std::vector<std::string> category_names();

// Sorted quantile resampling of a normalized cloud to exactly n rows of
// [x y z intensity]. The lexicographic sort gives each row index a stable
// spatial neighborhood across objects of a category, which is what lets the
// token head learn per-index templates.
Tensor canonical_rows(const PointCloud& normalized, std::size_t n);

ObjectSample make_object_sample(const PointCloud& cloud, const ObjectBox& box,
                                const std::string& category, const std::string& description,
                                const TextEncoder& enc, std::size_t n_points,
                                const BoxNormalization& norm = {});

// Projects the scene and masks the image down to box pixels for the
// controller input, so composed-image pixels and OSA masks agree.
SceneSample make_scene_sample(const PointCloud& cloud, const MaskStack& masks,
                              const SensorConfig& cfg);

// Object-stage generation: per condition, run the reverse process over [N,4]
// normalized points, revoxelizing the current state each step, then clamp to
// [-1,1] and denormalize through the box. Item i draws from stream i of
// `seed`, so results do not depend on batching or thread count.
std::vector<PointCloud> generate_objects(const ObjectDenoiser& den,
                                         const std::vector<std::pair<TextPrompt, ObjectBox>>& conds,
                                         const TextEncoder& enc, const NoiseSchedule& sched,
                                         std::uint64_t seed, const BoxNormalization& norm = {});

struct PlacedObject {
  PointCloud cloud;  // world frame
  ObjectBox box;
  std::string category;
};

struct ComposedObjects {
  RangeImage image;
  MaskStack masks;
};

// Projects all object points into one range image (nearest point wins across
// objects) and derives per-category masks from the winning points.
ComposedObjects compose_object_image(const std::vector<PlacedObject>& objects,
                                     const SensorConfig& cfg,
                                     const std::vector<std::string>& categories);

struct GeneratedScene {
  RangeImage image;
  PointCloud cloud;
};

// Scene-stage generation guided by the composed object image; the final
// sample is clamped to [0,1] before unprojection.
GeneratedScene generate_scene(const SceneDenoiser& den, const Controller& ctrl,
                              const RangeImage& obj_img, const NoiseSchedule& sched,
                              const SensorConfig& cfg, Rng& rng);

// Repaint completion with rows v % 4 == 0 as the known region; H must be
// divisible by 4. Known rows survive bitwise.
RangeImage sparse_to_dense(const RangeImage& sparse, const SceneDenoiser& den,
                           const NoiseSchedule& sched, Rng& rng);

// Repaint completion with an arbitrary binary pixel mask (height*width
// entries); both channels of a known pixel are preserved.
RangeImage partial_completion(const RangeImage& partial, const std::vector<std::uint8_t>& known,
                              const SceneDenoiser& den, const NoiseSchedule& sched, Rng& rng);

struct PlacementConfig {
  double extent = 40.0;  // (x_c, y_c) uniform over [-extent, extent)
  double ground_z = -2.0;
  std::size_t max_attempts = 100;
};

// Uniform box placement with BEV-rectangle rejection; each object gets at
// most max_attempts draws before a CapacityError reporting the achieved
// count.
std::vector<std::pair<ObjectBox, std::string>> place_objects_uniform(
    std::size_t n, const PlacementConfig& pc, const std::vector<CategorySpec>& cats, Rng& rng);

// True when the BEV rectangles of the two boxes overlap with positive area
// (separating-axis test; touching edges do not count).
bool bev_overlap(const ObjectBox& a, const ObjectBox& b);

// GT-Aug: removes scene points inside any insert box, then appends the
// insert points in list order.
PointCloud augment_scene(const PointCloud& scene,
                         const std::vector<std::pair<PointCloud, ObjectBox>>& inserts);

}  // namespace oldm
