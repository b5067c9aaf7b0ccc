// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "oldm/rng.hpp"
#include "oldm/types.hpp"

namespace oldm {

// Surface intensities before per-return noise.
inline constexpr double kGroundIntensity = 0.2;
inline constexpr double kBoxIntensity = 0.7;
inline constexpr double kIntensityNoise = 0.05;

struct SynthScene {
  PointCloud cloud;
  MaskStack masks;
};

// Casts one ray per pixel at pixel-center angles and keeps the nearest hit
// within r_max among the ground plane z = ground_z and the yaw-rotated
// cuboids. Ground returns carry intensity 0.2, box returns 0.7, both plus a
// uniform draw in [-0.05, 0.05] clamped to [0, 1]. The mask stack records
// which category's box won each pixel. `categories` pins the mask channel
// order; when empty the layout's first-appearance order is used. A layout
// category missing from a non-empty list is a configuration error.
SynthScene synth_scene(const SensorConfig& cfg,
                       const std::vector<std::pair<ObjectBox, std::string>>& layout,
                       double ground_z, Rng& rng,
                       const std::vector<std::string>& categories = {});

// Same rays against a single cuboid, keeping only box hits. Point count
// falls off with box distance since the angular grid is fixed. A box that
// no ray reaches yields an empty cloud and a stderr warning.
PointCloud synth_object(const std::string& category, const ObjectBox& box,
                        const SensorConfig& cfg, Rng& rng);

}  // namespace oldm
