// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oldm/types.hpp"

namespace oldm::io {

// Point cloud files: consecutive little-endian float32 (x, y, z, intensity)
// records, byte-compatible with KITTI .bin sweeps.
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_point_cloud(const std::filesystem::path& path);

// Range image files: magic "OLRI", u32 H, W, C (little-endian), then
// H*W*C float32 values, row-major, channel-fastest.
void write_range_image(const std::filesystem::path& path, const RangeImage& img);
RangeImage read_range_image(const std::filesystem::path& path);

// Single-channel pixel masks ride the same container with C = 1.
void write_mask(const std::filesystem::path& path, std::size_t height, std::size_t width,
                const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> read_mask(const std::filesystem::path& path, std::size_t& height,
                                    std::size_t& width);

// One object per line: category x_c y_c z_c w l h r "description".
struct ScenarioEntry {
  std::string category;
  ObjectBox box;
  std::string description;
};

void write_scenario(const std::filesystem::path& path, const std::vector<ScenarioEntry>& entries);
std::vector<ScenarioEntry> read_scenario(const std::filesystem::path& path);

// FNV-1a digest of a file's bytes, hex-encoded; used by run manifests.
std::string file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace oldm::io
