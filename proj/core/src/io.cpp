// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "oldm/errors.hpp"
#include "oldm/rng.hpp"

namespace oldm::io {
namespace {

// All formats are pinned little-endian; the build targets x86-64/aarch64 so
// native order matches and we can write raw buffers.
void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

}  // namespace

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  auto os = open_out(path, std::ios::binary);
  std::vector<float> buf(cloud.points.size() * 4);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    buf[i * 4 + 0] = static_cast<float>(p.x);
    buf[i * 4 + 1] = static_cast<float>(p.y);
    buf[i * 4 + 2] = static_cast<float>(p.z);
    buf[i * 4 + 3] = static_cast<float>(p.intensity);
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os) throw IoError("short write: " + path.string());
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary | std::ios::ate);
  const std::streamoff size = is.tellg();
  if (size % (4 * sizeof(float)) != 0)
    throw IoError("point cloud size not a multiple of 16 bytes: " + path.string());
  is.seekg(0);
  std::vector<float> buf(static_cast<std::size_t>(size) / sizeof(float));
  is.read(reinterpret_cast<char*>(buf.data()), size);
  if (!is) throw IoError("short read: " + path.string());
  PointCloud cloud;
  cloud.points.resize(buf.size() / 4);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    cloud.points[i] = Point{buf[i * 4 + 0], buf[i * 4 + 1], buf[i * 4 + 2], buf[i * 4 + 3]};
  }
  return cloud;
}

void write_range_image(const std::filesystem::path& path, const RangeImage& img) {
  auto os = open_out(path, std::ios::binary);
  os.write("OLRI", 4);
  put_u32(os, static_cast<std::uint32_t>(img.height));
  put_u32(os, static_cast<std::uint32_t>(img.width));
  put_u32(os, static_cast<std::uint32_t>(img.channels));
  os.write(reinterpret_cast<const char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (!os) throw IoError("short write: " + path.string());
}

RangeImage read_range_image(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "OLRI", 4) != 0)
    throw IoError("bad range image magic: " + path.string());
  const std::uint32_t h = get_u32(is);
  const std::uint32_t w = get_u32(is);
  const std::uint32_t c = get_u32(is);
  if (!is) throw IoError("truncated range image header: " + path.string());
  RangeImage img(h, w, c);
  is.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (!is) throw IoError("truncated range image payload: " + path.string());
  return img;
}

void write_mask(const std::filesystem::path& path, std::size_t height, std::size_t width,
                const std::vector<std::uint8_t>& mask) {
  if (mask.size() != height * width) throw ValidationError("mask size mismatch");
  RangeImage img(height, width, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.data[i] = mask[i] ? 1.0f : 0.0f;
  write_range_image(path, img);
}

std::vector<std::uint8_t> read_mask(const std::filesystem::path& path, std::size_t& height,
                                    std::size_t& width) {
  RangeImage img = read_range_image(path);
  if (img.channels != 1) throw IoError("mask must have one channel: " + path.string());
  height = img.height;
  width = img.width;
  std::vector<std::uint8_t> mask(img.data.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = img.data[i] != 0.0f ? 1 : 0;
  return mask;
}

void write_scenario(const std::filesystem::path& path, const std::vector<ScenarioEntry>& entries) {
  auto os = open_out(path, std::ios::out);
  os.precision(17);
  for (const ScenarioEntry& e : entries) {
    os << e.category << ' ' << e.box.x_c << ' ' << e.box.y_c << ' ' << e.box.z_c << ' ' << e.box.w
       << ' ' << e.box.l << ' ' << e.box.h << ' ' << e.box.r << " \"" << e.description << "\"\n";
  }
  if (!os) throw IoError("short write: " + path.string());
}

std::vector<ScenarioEntry> read_scenario(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::in);
  std::vector<ScenarioEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ScenarioEntry e;
    if (!(ls >> e.category >> e.box.x_c >> e.box.y_c >> e.box.z_c >> e.box.w >> e.box.l >>
          e.box.h >> e.box.r))
      throw ValidationError("scenario line " + std::to_string(lineno) + ": expected 8 fields");
    std::string rest;
    std::getline(ls, rest);
    const auto open = rest.find('"');
    const auto close = rest.rfind('"');
    if (open == std::string::npos || close == open)
      throw ValidationError("scenario line " + std::to_string(lineno) +
                            ": missing quoted description");
    e.description = rest.substr(open + 1, close - open - 1);
    if (e.box.w <= 0 || e.box.l <= 0 || e.box.h <= 0)
      throw ValidationError("scenario line " + std::to_string(lineno) +
                            ": box dimensions must be positive");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string file_digest(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
    if (is.eof()) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

std::string read_text_file(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  auto os = open_out(path, std::ios::binary);
  os << content;
  if (!os) throw IoError("short write: " + path.string());
}

}  // namespace oldm::io
