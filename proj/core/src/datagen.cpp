// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "oldm/errors.hpp"

namespace oldm {
namespace {

struct Ray {
  double dx, dy, dz;  // unit direction from the origin
};

// Pixel-center ray: inverse of the projection formulas in geometry.cpp.
Ray pixel_ray(const SensorConfig& cfg, std::size_t v, std::size_t u) {
  const double pi = SensorConfig::kPi;
  const double theta = pi * (1.0 - 2.0 * (static_cast<double>(u) + 0.5) / cfg.width);
  const double fov = cfg.fov_up - cfg.fov_down;
  const double phi = cfg.fov_down + fov * (1.0 - (static_cast<double>(v) + 0.5) / cfg.height);
  const double cp = std::cos(phi);
  return {cp * std::cos(theta), cp * std::sin(theta), std::sin(phi)};
}

// Distance to the plane z = ground_z, or -1 for no forward hit.
double ray_ground(const Ray& d, double ground_z) {
  if (d.dz == 0.0) return -1.0;
  const double t = ground_z / d.dz;
  return t > 1e-9 ? t : -1.0;
}

// Slab test against a yaw-rotated cuboid; returns the entry distance or -1.
// A sensor inside the box yields no return.
double ray_box(const Ray& d, const ObjectBox& b) {
  const double cr = std::cos(b.r), sr = std::sin(b.r);
  // Origin and direction in the box frame (rotate by -r after translating).
  const double o[3] = {cr * -b.x_c + sr * -b.y_c, -sr * -b.x_c + cr * -b.y_c, -b.z_c};
  const double dir[3] = {cr * d.dx + sr * d.dy, -sr * d.dx + cr * d.dy, d.dz};
  const double half[3] = {b.l * 0.5, b.w * 0.5, b.h * 0.5};

  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (std::abs(o[a]) > half[a]) return -1.0;
      continue;
    }
    double ta = (-half[a] - o[a]) / dir[a];
    double tb = (half[a] - o[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return -1.0;
  }
  return t0 > 1e-9 ? t0 : -1.0;
}

double noisy_intensity(double base, Rng& rng) {
  const double v = base + (rng.uniform01() * 2.0 - 1.0) * kIntensityNoise;
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

SynthScene synth_scene(const SensorConfig& cfg,
                       const std::vector<std::pair<ObjectBox, std::string>>& layout,
                       double ground_z, Rng& rng,
                       const std::vector<std::string>& categories) {
  cfg.validate();
  for (const auto& [box, cat] : layout) box.validate();

  std::vector<std::string> names = categories;
  if (names.empty()) {
    for (const auto& [box, cat] : layout)
      if (std::find(names.begin(), names.end(), cat) == names.end()) names.push_back(cat);
  }
  std::vector<std::size_t> channel(layout.size());
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const auto it = std::find(names.begin(), names.end(), layout[j].second);
    if (it == names.end())
      throw ConfigError("synth_scene: category '" + layout[j].second +
                        "' missing from the mask channel list");
    channel[j] = static_cast<std::size_t>(it - names.begin());
  }

  SynthScene out;
  out.masks = MaskStack(cfg.height, cfg.width, names);
  for (std::size_t v = 0; v < cfg.height; ++v) {
    for (std::size_t u = 0; u < cfg.width; ++u) {
      const Ray d = pixel_ray(cfg, v, u);
      double best = std::numeric_limits<double>::infinity();
      std::ptrdiff_t hit = -1;  // -1 ground, else layout index
      const double tg = ray_ground(d, ground_z);
      if (tg > 0.0) best = tg;
      for (std::size_t j = 0; j < layout.size(); ++j) {
        const double tb = ray_box(d, layout[j].first);
        if (tb > 0.0 && tb < best) {
          best = tb;
          hit = static_cast<std::ptrdiff_t>(j);
        }
      }
      if (!(best <= cfg.r_max)) continue;
      const double base = hit < 0 ? kGroundIntensity : kBoxIntensity;
      out.cloud.points.push_back(
          {best * d.dx, best * d.dy, best * d.dz, noisy_intensity(base, rng)});
      if (hit >= 0) out.masks.at(channel[static_cast<std::size_t>(hit)], v, u) = 1;
    }
  }
  return out;
}

PointCloud synth_object(const std::string& category, const ObjectBox& box,
                        const SensorConfig& cfg, Rng& rng) {
  cfg.validate();
  box.validate();
  PointCloud cloud;
  for (std::size_t v = 0; v < cfg.height; ++v) {
    for (std::size_t u = 0; u < cfg.width; ++u) {
      const Ray d = pixel_ray(cfg, v, u);
      const double t = ray_box(d, box);
      if (t > 0.0 && t <= cfg.r_max)
        cloud.points.push_back(
            {t * d.dx, t * d.dy, t * d.dz, noisy_intensity(kBoxIntensity, rng)});
    }
  }
  if (cloud.empty())
    std::fprintf(stderr, "synth_object: no returns for a '%s' box (outside the field of view?)\n",
                 category.c_str());
  return cloud;
}

}  // namespace oldm
