// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "oldm/errors.hpp"

namespace oldm {

// One LiDAR return: cartesian position in meters plus a unitless intensity
// in [0, 1].
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
};

// Universal exchange format between the geometry, datagen, pipeline and
// metric layers. Objects and scenes are both plain clouds.
struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Spherical sensor model. Rows index elevation (fov_up at row 0 down to
// fov_down), columns index azimuth over the full circle.
struct SensorConfig {
  std::size_t height = 64;
  std::size_t width = 1024;
  double fov_up = 3.0 * kPi / 180.0;
  double fov_down = -25.0 * kPi / 180.0;
  double r_max = 80.0;

  static constexpr double kPi = 3.14159265358979323846;

  void validate() const {
    if (height < 2 || width < 2) throw ConfigError("sensor grid must be at least 2x2");
    if (!(fov_up > fov_down)) throw ConfigError("fov_up must exceed fov_down");
    if (!(r_max > 0.0)) throw ConfigError("r_max must be positive");
  }

  // nuScenes-like 32-beam variant.
  static SensorConfig beams32() {
    SensorConfig cfg;
    cfg.height = 32;
    return cfg;
  }
};

// H x W x 2 spherical projection: channel 0 holds depth normalized by r_max,
// channel 1 intensity. No-return pixels hold (0, 0); a pixel is valid iff its
// depth is > 0. Stored row-major, channel-fastest, as 32-bit floats to match
// the on-disk format.
struct RangeImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 2;
  std::vector<float> data;  // row-major, channel-fastest

  RangeImage() = default;
  RangeImage(std::size_t h, std::size_t w, std::size_t c = 2)
      : height(h), width(w), channels(c), data(h * w * c, 0.0f) {}

  float& depth(std::size_t v, std::size_t u) { return data[(v * width + u) * channels]; }
  float depth(std::size_t v, std::size_t u) const { return data[(v * width + u) * channels]; }
  float& intensity(std::size_t v, std::size_t u) {
    return data[(v * width + u) * channels + 1];
  }
  float intensity(std::size_t v, std::size_t u) const {
    return data[(v * width + u) * channels + 1];
  }

  bool valid(std::size_t v, std::size_t u) const { return depth(v, u) > 0.0f; }
  bool same_dims(const RangeImage& o) const { return height == o.height && width == o.width; }
};

// Oriented 3D box: center, full extents and yaw about +z. The local x axis
// (length l) points along the heading, local y (width w) to its left.
// Yaw r is kept in (-pi, pi].
struct ObjectBox {
  double x_c = 0.0, y_c = 0.0, z_c = 0.0;
  double w = 1.0, l = 1.0, h = 1.0;
  double r = 0.0;

  void validate() const {
    if (!(w > 0.0) || !(l > 0.0) || !(h > 0.0)) throw ValidationError("box extents must be positive");
  }

  // Closed-interval containment test in the box frame (boundary counts as
  // inside).
  bool contains(const Point& p) const {
    const double cx = p.x - x_c, cy = p.y - y_c;
    const double cr = std::cos(r), sr = std::sin(r);
    const double lx = cr * cx + sr * cy;   // rotate by -r
    const double ly = -sr * cx + cr * cy;
    return std::abs(lx) <= l * 0.5 && std::abs(ly) <= w * 0.5 &&
           p.z >= z_c - h * 0.5 && p.z <= z_c + h * 0.5;
  }
};

// V x V x V grid of (occupancy, mean intensity) pairs, stored cell-major
// with the two channels adjacent: index = ((ix*V + iy)*V + iz)*2 + ch.
struct VoxelGrid {
  std::size_t resolution = 0;
  std::vector<double> data;

  VoxelGrid() = default;
  explicit VoxelGrid(std::size_t v) : resolution(v), data(v * v * v * 2, 0.0) {}

  double& occupancy(std::size_t ix, std::size_t iy, std::size_t iz) {
    return data[cell(ix, iy, iz) * 2];
  }
  double occupancy(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return data[cell(ix, iy, iz) * 2];
  }
  double& mean_intensity(std::size_t ix, std::size_t iy, std::size_t iz) {
    return data[cell(ix, iy, iz) * 2 + 1];
  }
  double mean_intensity(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return data[cell(ix, iy, iz) * 2 + 1];
  }

  std::size_t cell(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return (ix * resolution + iy) * resolution + iz;
  }
};

// Per-category binary pixel masks over a range image. Channels are disjoint:
// a pixel belongs to at most one category.
struct MaskStack {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::string> category_names;
  std::vector<std::uint8_t> data;  // category-major: [c][v][u]

  MaskStack() = default;
  MaskStack(std::size_t h, std::size_t w, std::vector<std::string> names)
      : height(h), width(w), category_names(std::move(names)) {
    data.assign(category_names.size() * h * w, 0);
  }

  std::size_t categories() const { return category_names.size(); }
  std::uint8_t& at(std::size_t c, std::size_t v, std::size_t u) {
    return data[(c * height + v) * width + u];
  }
  std::uint8_t at(std::size_t c, std::size_t v, std::size_t u) const {
    return data[(c * height + v) * width + u];
  }
  std::size_t count(std::size_t c) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < height * width; ++i) n += data[c * height * width + i];
    return n;
  }
};

// G x G bird's-eye-view occupancy histogram over x, y in [-extent, extent),
// normalized to sum to 1 (all-zero when no point fell inside the extent).
struct BevHistogram {
  std::size_t grid = 0;
  double extent = 0.0;
  std::vector<double> data;  // row-major [ix][iy]

  BevHistogram() = default;
  BevHistogram(std::size_t g, double ext) : grid(g), extent(ext), data(g * g, 0.0) {}

  double& at(std::size_t ix, std::size_t iy) { return data[ix * grid + iy]; }
  double at(std::size_t ix, std::size_t iy) const { return data[ix * grid + iy]; }
  double sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
  }
};

}  // namespace oldm
