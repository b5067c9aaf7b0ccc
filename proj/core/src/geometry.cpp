// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace oldm {

namespace {

constexpr double kPi = SensorConfig::kPi;

// Floor-with-edge-snap shared by both axes: values within half a pixel
// outside [0, n) land on the edge, anything farther is rejected.
std::optional<std::size_t> snap_index(double value, std::size_t n) {
  const double f = std::floor(value);
  if (f >= 0.0 && f < static_cast<double>(n)) return static_cast<std::size_t>(f);
  if (value >= -0.5 && value < 0.0) return 0;
  if (value >= static_cast<double>(n) && value < static_cast<double>(n) + 0.5) return n - 1;
  return std::nullopt;
}

}  // namespace

Projection project_with_winners(const PointCloud& cloud, const SensorConfig& cfg) {
  cfg.validate();
  Projection out;
  out.image = RangeImage(cfg.height, cfg.width);
  out.winner.assign(cfg.height * cfg.width, -1);
  out.stats.input_points = cloud.size();

  const double fov = cfg.fov_up - cfg.fov_down;
  std::vector<double> best_r(cfg.height * cfg.width, 0.0);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    if (r <= 0.0) {
      ++out.stats.dropped_out_of_fov;
      continue;
    }
    const double theta = std::atan2(p.y, p.x);
    const double phi = std::asin(std::clamp(p.z / r, -1.0, 1.0));

    const double uf = 0.5 * (1.0 - theta / kPi) * static_cast<double>(cfg.width);
    const double vf = (1.0 - (phi - cfg.fov_down) / fov) * static_cast<double>(cfg.height);
    const auto u = snap_index(uf, cfg.width);
    const auto v = snap_index(vf, cfg.height);
    if (!u || !v) {
      ++out.stats.dropped_out_of_fov;
      continue;
    }

    const std::size_t pix = *v * cfg.width + *u;
    if (out.winner[pix] >= 0 && best_r[pix] <= r) {
      ++out.stats.occluded;
      continue;
    }
    if (out.winner[pix] >= 0) ++out.stats.occluded;  // previous owner loses
    best_r[pix] = r;
    out.winner[pix] = static_cast<std::int32_t>(i);
    out.image.depth(*v, *u) = static_cast<float>(std::min(r / cfg.r_max, 1.0));
    out.image.intensity(*v, *u) = static_cast<float>(std::clamp(p.intensity, 0.0, 1.0));
  }

  for (auto w : out.winner)
    if (w >= 0) ++out.stats.winning_points;
  return out;
}

RangeImage project_to_range(const PointCloud& cloud, const SensorConfig& cfg,
                            ProjectionStats* stats) {
  Projection proj = project_with_winners(cloud, cfg);
  if (stats) *stats = proj.stats;
  return std::move(proj.image);
}

PointCloud unproject_range(const RangeImage& img, const SensorConfig& cfg) {
  cfg.validate();
  if (img.height != cfg.height || img.width != cfg.width)
    throw ConfigError("range image dimensions do not match sensor config");

  const double fov = cfg.fov_up - cfg.fov_down;
  PointCloud cloud;
  for (std::size_t v = 0; v < img.height; ++v) {
    const double phi = cfg.fov_down +
                       (1.0 - (static_cast<double>(v) + 0.5) / static_cast<double>(img.height)) * fov;
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    for (std::size_t u = 0; u < img.width; ++u) {
      if (!img.valid(v, u)) continue;
      const double theta =
          kPi * (1.0 - 2.0 * (static_cast<double>(u) + 0.5) / static_cast<double>(img.width));
      const double r = static_cast<double>(img.depth(v, u)) * cfg.r_max;
      Point p;
      p.x = r * cphi * std::cos(theta);
      p.y = r * cphi * std::sin(theta);
      p.z = r * sphi;
      p.intensity = static_cast<double>(img.intensity(v, u));
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

double unproject_bound(double r, const SensorConfig& cfg) {
  const double fov = cfg.fov_up - cfg.fov_down;
  return r * std::max(kPi / static_cast<double>(cfg.width),
                      fov / static_cast<double>(cfg.height)) +
         cfg.r_max / 65536.0;
}

BevHistogram bev_histogram(const PointCloud& cloud, std::size_t grid, double extent) {
  if (grid < 1) throw ConfigError("bev grid must be at least 1");
  if (!(extent > 0.0)) throw ConfigError("bev extent must be positive");

  BevHistogram hist(grid, extent);
  std::size_t inside = 0;
  const double cell = 2.0 * extent / static_cast<double>(grid);
  for (const Point& p : cloud.points) {
    if (p.x < -extent || p.x >= extent || p.y < -extent || p.y >= extent) continue;
    const auto ix = static_cast<std::size_t>((p.x + extent) / cell);
    const auto iy = static_cast<std::size_t>((p.y + extent) / cell);
    hist.at(std::min(ix, grid - 1), std::min(iy, grid - 1)) += 1.0;
    ++inside;
  }
  if (inside > 0) {
    const double inv = 1.0 / static_cast<double>(inside);
    for (double& v : hist.data) v *= inv;
  }
  return hist;
}

VoxelGrid voxelize(const PointCloud& cloud, std::size_t resolution) {
  if (resolution < 2) throw ConfigError("voxel resolution must be at least 2");
  VoxelGrid grid(resolution);
  std::vector<std::size_t> counts(resolution * resolution * resolution, 0);
  std::vector<double> intensity_sum(counts.size(), 0.0);

  const auto to_cell = [&](double c) {
    const double f = std::floor((c + 1.0) * 0.5 * static_cast<double>(resolution));
    const double hi = static_cast<double>(resolution - 1);
    return static_cast<std::size_t>(std::clamp(f, 0.0, hi));
  };

  for (const Point& p : cloud.points) {
    const std::size_t idx = grid.cell(to_cell(p.x), to_cell(p.y), to_cell(p.z));
    ++counts[idx];
    intensity_sum[idx] += p.intensity;
  }

  std::size_t max_count = 0;
  for (auto c : counts) max_count = std::max(max_count, c);
  if (max_count == 0) return grid;

  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    grid.data[i * 2] = static_cast<double>(counts[i]) / static_cast<double>(max_count);
    grid.data[i * 2 + 1] = intensity_sum[i] / static_cast<double>(counts[i]);
  }
  return grid;
}

PointCloud normalize_object(const PointCloud& cloud, const ObjectBox& box,
                            const CategoryScale& scale) {
  scale.validate();
  const double cr = std::cos(box.r), sr = std::sin(box.r);
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    const double tx = p.x - box.x_c, ty = p.y - box.y_c, tz = p.z - box.z_c;
    Point q;
    q.x = std::clamp((cr * tx + sr * ty) / scale.sx, -1.0, 1.0);
    q.y = std::clamp((-sr * tx + cr * ty) / scale.sy, -1.0, 1.0);
    q.z = std::clamp(tz / scale.sz, -1.0, 1.0);
    q.intensity = 2.0 * p.intensity - 1.0;
    out.points.push_back(q);
  }
  return out;
}

PointCloud denormalize_object(const PointCloud& cloud, const ObjectBox& box,
                              const CategoryScale& scale) {
  scale.validate();
  const double cr = std::cos(box.r), sr = std::sin(box.r);
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    const double sx = p.x * scale.sx, sy = p.y * scale.sy, sz = p.z * scale.sz;
    Point q;
    q.x = cr * sx - sr * sy + box.x_c;
    q.y = sr * sx + cr * sy + box.y_c;
    q.z = sz + box.z_c;
    q.intensity = (p.intensity + 1.0) * 0.5;
    out.points.push_back(q);
  }
  return out;
}

MaskStack rasterize_boxes(const std::vector<std::pair<ObjectBox, std::string>>& boxes,
                          const PointCloud& cloud, const SensorConfig& cfg,
                          const std::vector<std::string>& categories) {
  const Projection proj = project_with_winners(cloud, cfg);
  return rasterize_boxes(boxes, cloud, proj, categories);
}

MaskStack rasterize_boxes(const std::vector<std::pair<ObjectBox, std::string>>& boxes,
                          const PointCloud& cloud, const Projection& proj,
                          const std::vector<std::string>& categories) {
  std::unordered_map<std::string, std::size_t> cat_index;
  for (std::size_t i = 0; i < categories.size(); ++i) cat_index[categories[i]] = i;
  for (const auto& [box, cat] : boxes) {
    box.validate();
    if (!cat_index.count(cat)) throw ConfigError("unknown box category: " + cat);
  }

  MaskStack masks(proj.image.height, proj.image.width, categories);
  for (std::size_t pix = 0; pix < proj.winner.size(); ++pix) {
    const std::int32_t w = proj.winner[pix];
    if (w < 0) continue;
    const Point& p = cloud.points[static_cast<std::size_t>(w)];
    for (const auto& [box, cat] : boxes) {
      if (box.contains(p)) {
        masks.data[cat_index[cat] * proj.winner.size() + pix] = 1;
        break;  // first matching box decides; channels stay disjoint
      }
    }
  }
  return masks;
}

}  // namespace oldm
