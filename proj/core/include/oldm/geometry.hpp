// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "oldm/types.hpp"

namespace oldm {

// Bookkeeping for a projection pass.
struct ProjectionStats {
  std::size_t input_points = 0;
  std::size_t dropped_out_of_fov = 0;  // includes r == 0 points
  std::size_t occluded = 0;            // lost a pixel collision
  std::size_t winning_points = 0;      // valid pixels in the image
};

// Full projection result. `winner` maps each pixel to the index of the cloud
// point that owns it (-1 for no return); rasterize_boxes and the object-image
// composer key off it.
struct Projection {
  RangeImage image;
  std::vector<std::int32_t> winner;  // height * width
  ProjectionStats stats;
};

// Spherical projection of a cloud onto the sensor grid.
//
// Per point: r = sqrt(x^2+y^2+z^2), theta = atan2(y, x), phi = asin(z/r);
//   u_f = 0.5 * (1 - theta/pi) * W,  v_f = (1 - (phi - fov_down)/fov) * H,
// floored to pixel indices. Values landing within half a pixel outside the
// grid are clamped onto the edge; anything farther out is dropped, as are
// r == 0 points. Depth is min(r/r_max, 1); collisions keep the nearest point.
Projection project_with_winners(const PointCloud& cloud, const SensorConfig& cfg);

// The plain image-and-stats view of the above.
RangeImage project_to_range(const PointCloud& cloud, const SensorConfig& cfg,
                            ProjectionStats* stats = nullptr);

// Inverse projection from pixel centers. No-return pixels emit nothing.
PointCloud unproject_range(const RangeImage& img, const SensorConfig& cfg);

// Worst-case distance between a point at range r and its reconstruction
// through project/unproject under cfg.
double unproject_bound(double r, const SensorConfig& cfg);

// G x G occupancy histogram over x, y in [-extent, extent), normalized by the
// number of in-extent points.
BevHistogram bev_histogram(const PointCloud& cloud, std::size_t grid, double extent);

// Count-normalized occupancy / mean-intensity voxelization of a cloud whose
// coordinates already live in [-1, 1]^3. Cell index is
// floor((coord + 1) / 2 * V) clamped to [0, V-1]; occupancy is cell count
// divided by the maximum cell count.
VoxelGrid voxelize(const PointCloud& cloud, std::size_t resolution);

// Per-category half-extents used to scale object clouds into [-1, 1]^3.
struct CategoryScale {
  double sx = 1.0, sy = 1.0, sz = 1.0;

  void validate() const {
    if (!(sx > 0.0) || !(sy > 0.0) || !(sz > 0.0))
      throw ConfigError("category scale must be componentwise positive");
  }
};

// Moves a cloud into the box frame (translate by -center, rotate by -yaw),
// divides by the category half-extents, clamps coordinates to [-1, 1] and
// maps intensity from [0, 1] to [-1, 1].
PointCloud normalize_object(const PointCloud& cloud, const ObjectBox& box,
                            const CategoryScale& scale);

// Exact inverse of normalize_object wherever no clamp fired.
PointCloud denormalize_object(const PointCloud& cloud, const ObjectBox& box,
                              const CategoryScale& scale);

// Per-category pixel masks: M_i(v,u) = 1 iff the point owning pixel (v,u)
// lies inside a box of category i. A pixel gets at most one category; if its
// point sits in boxes of several categories, the earliest box in the list
// decides.
MaskStack rasterize_boxes(const std::vector<std::pair<ObjectBox, std::string>>& boxes,
                          const PointCloud& cloud, const SensorConfig& cfg,
                          const std::vector<std::string>& categories);

// Same, reusing an existing projection of `cloud` under the same config.
MaskStack rasterize_boxes(const std::vector<std::pair<ObjectBox, std::string>>& boxes,
                          const PointCloud& cloud, const Projection& proj,
                          const std::vector<std::string>& categories);

}  // namespace oldm
