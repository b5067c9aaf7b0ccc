// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "oldm/errors.hpp"

namespace oldm {
namespace {

double sq_dist(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Exact nearest-neighbor kd-tree over point indices. Node i covers
// idx[lo:hi) split on `axis` at the median element.
class KdTree {
 public:
  explicit KdTree(const std::vector<Point>& pts) : pts_(pts), idx_(pts.size()) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    build(0, idx_.size(), 0);
  }

  double nearest_sq(const Point& query) const {
    double best = std::numeric_limits<double>::infinity();
    search(query, 0, idx_.size(), 0, best);
    return best;
  }

 private:
  static double coord(const Point& p, int axis) {
    return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
  }

  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(lo),
                     idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::size_t a, std::size_t b) {
                       return coord(pts_[a], axis) < coord(pts_[b], axis);
                     });
    build(lo, mid, (axis + 1) % 3);
    build(mid + 1, hi, (axis + 1) % 3);
  }

  void search(const Point& q, std::size_t lo, std::size_t hi, int axis, double& best) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Point& p = pts_[idx_[mid]];
    const double d = sq_dist(q, p);
    if (d < best) best = d;
    const double delta = coord(q, axis) - coord(p, axis);
    const std::size_t first_lo = delta < 0.0 ? lo : mid + 1;
    const std::size_t first_hi = delta < 0.0 ? mid : hi;
    const std::size_t second_lo = delta < 0.0 ? mid + 1 : lo;
    const std::size_t second_hi = delta < 0.0 ? hi : mid;
    search(q, first_lo, first_hi, (axis + 1) % 3, best);
    if (delta * delta < best) search(q, second_lo, second_hi, (axis + 1) % 3, best);
  }

  const std::vector<Point>& pts_;
  std::vector<std::size_t> idx_;
};

double directed_chamfer_kd(const std::vector<Point>& from, const KdTree& tree) {
  double acc = 0.0;
  for (const Point& p : from) acc += tree.nearest_sq(p);
  return acc / static_cast<double>(from.size());
}

double directed_chamfer_brute(const std::vector<Point>& from, const std::vector<Point>& to) {
  double acc = 0.0;
  for (const Point& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : to) {
      const double d = sq_dist(p, q);
      if (d < best) best = d;
    }
    acc += best;
  }
  return acc / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const PointCloud& p, const PointCloud& q) {
  if (p.points.empty() || q.points.empty())
    throw ValidationError("chamfer_distance: empty cloud");
  KdTree tp(p.points), tq(q.points);
  return directed_chamfer_kd(p.points, tq) + directed_chamfer_kd(q.points, tp);
}

double chamfer_distance_brute(const PointCloud& p, const PointCloud& q) {
  if (p.points.empty() || q.points.empty())
    throw ValidationError("chamfer_distance: empty cloud");
  return directed_chamfer_brute(p.points, q.points) +
         directed_chamfer_brute(q.points, p.points);
}

double jsd(const BevHistogram& p, const BevHistogram& q) {
  if (p.data.size() != q.data.size()) throw ValidationError("jsd: histogram sizes differ");
  const double sp = p.sum(), sq = q.sum();
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw ValidationError("jsd: histograms must sum to 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double pi = p.data[i], qi = q.data[i];
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) acc += 0.5 * pi * std::log(pi / mi);
    if (qi > 0.0) acc += 0.5 * qi * std::log(qi / mi);
  }
  return acc;
}

namespace {

double hist_sq_dist(const BevHistogram& a, const BevHistogram& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double mmd(const std::vector<BevHistogram>& a, const std::vector<BevHistogram>& b) {
  const std::size_t m = a.size(), n = b.size();
  if (m < 2 || n < 2) throw ValidationError("mmd: need at least two histograms per set");
  for (const BevHistogram& h : a)
    if (h.data.size() != a[0].data.size()) throw ValidationError("mmd: ragged histogram sizes");
  for (const BevHistogram& h : b)
    if (h.data.size() != a[0].data.size()) throw ValidationError("mmd: ragged histogram sizes");

  std::vector<const BevHistogram*> pool;
  pool.reserve(m + n);
  for (const BevHistogram& h : a) pool.push_back(&h);
  for (const BevHistogram& h : b) pool.push_back(&h);
  std::vector<double> dists;
  dists.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      dists.push_back(std::sqrt(hist_sq_dist(*pool[i], *pool[j])));
  std::sort(dists.begin(), dists.end());
  const double sigma = std::max(dists[(dists.size() - 1) / 2], 1e-12);
  const double denom = 2.0 * sigma * sigma;
  auto kernel = [&](const BevHistogram& x, const BevHistogram& y) {
    return std::exp(-hist_sq_dist(x, y) / denom);
  };

  double kaa = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) kaa += kernel(a[i], a[j]);
  kaa /= static_cast<double>(m * (m - 1));
  double kbb = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) kbb += kernel(b[i], b[j]);
  kbb /= static_cast<double>(n * (n - 1));
  double kab = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) kab += kernel(a[i], b[j]);
  kab /= static_cast<double>(m * n);
  return kaa + kbb - 2.0 * kab;
}

FeatureVector extract_features(const PointCloud& cloud) {
  if (cloud.points.empty()) throw ValidationError("extract_features: empty cloud");
  const std::size_t n = cloud.points.size();
  const double inv = 1.0 / static_cast<double>(n);
  FeatureVector f(kFeatureDim, 0.0);

  auto channel = [&](const Point& p, std::size_t c) {
    switch (c) {
      case 0: return p.x;
      case 1: return p.y;
      case 2: return p.z;
      default: return p.intensity;
    }
  };
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0;
    for (const Point& p : cloud.points) mean += channel(p, c);
    mean *= inv;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const Point& p : cloud.points) {
      const double d = channel(p, c) - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 *= inv;
    m3 *= inv;
    m4 *= inv;
    const double sd = std::sqrt(m2);
    f[0 * 4 + c] = mean;
    f[1 * 4 + c] = sd;
    f[2 * 4 + c] = sd > 0.0 ? m3 / (sd * sd * sd) : 0.0;
    f[3 * 4 + c] = sd > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  }

  // Radial histogram: 16 bins over [0, 120) m, overshoot clamped to the last.
  constexpr double kRadialMax = 120.0;
  for (const Point& p : cloud.points) {
    const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    std::size_t bin = static_cast<std::size_t>(std::floor(r / kRadialMax * 16.0));
    if (bin > 15) bin = 15;
    f[16 + bin] += inv;
  }
  return f;
}

namespace {

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_from_moments(const std::vector<double>& mu1, const std::vector<double>& cov1,
                            const std::vector<double>& mu2, const std::vector<double>& cov2) {
  const std::size_t d = mu1.size();
  if (mu2.size() != d || cov1.size() != d * d || cov2.size() != d * d)
    throw ValidationError("frechet_from_moments: dimension mismatch");
  Eigen::Map<const Eigen::MatrixXd> s1(cov1.data(), static_cast<Eigen::Index>(d),
                                       static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::MatrixXd> s2(cov2.data(), static_cast<Eigen::Index>(d),
                                       static_cast<Eigen::Index>(d));
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double dm = mu1[i] - mu2[i];
    mean_term += dm * dm;
  }
  // tr((s1^{1/2} s2 s1^{1/2})^{1/2}) is the nuclear norm of s2^{1/2} s1^{1/2};
  // the singular-value route keeps the self-comparison residual near zero even
  // when the covariances are rank deficient.
  const Eigen::MatrixXd root1 = matrix_sqrt_psd(s1);
  const Eigen::MatrixXd root2 = matrix_sqrt_psd(s2);
  const double cross = (root2 * root1).jacobiSvd().singularValues().sum();
  return mean_term + s1.trace() + s2.trace() - 2.0 * cross;
}

double frechet_distance(const std::vector<FeatureVector>& real,
                        const std::vector<FeatureVector>& gen) {
  if (real.size() < 2 || gen.size() < 2)
    throw ValidationError("frechet_distance: need at least two feature vectors per set");
  const std::size_t d = real[0].size();
  auto fit = [&](const std::vector<FeatureVector>& set, std::vector<double>& mu,
                 std::vector<double>& cov) {
    for (const FeatureVector& f : set)
      if (f.size() != d) throw ValidationError("frechet_distance: ragged feature vectors");
    mu.assign(d, 0.0);
    for (const FeatureVector& f : set)
      for (std::size_t i = 0; i < d; ++i) mu[i] += f[i];
    for (double& v : mu) v /= static_cast<double>(set.size());
    cov.assign(d * d, 0.0);
    for (const FeatureVector& f : set)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          cov[i * d + j] += (f[i] - mu[i]) * (f[j] - mu[j]);
    const double inv = 1.0 / static_cast<double>(set.size() - 1);
    for (double& v : cov) v *= inv;
    for (std::size_t i = 0; i < d; ++i) cov[i * d + i] += 1e-6;
  };
  std::vector<double> mu1, cov1, mu2, cov2;
  fit(real, mu1, cov1);
  fit(gen, mu2, cov2);
  return frechet_from_moments(mu1, cov1, mu2, cov2);
}

double semantic_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) throw ValidationError("semantic_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("semantic_similarity: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string format_table(const MetricEntries& entries) {
  std::size_t width = 0;
  for (const auto& [name, value] : entries) width = std::max(width, name.size());
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  for (const auto& [name, value] : entries) {
    os << name;
    for (std::size_t i = name.size(); i < width + 2; ++i) os << ' ';
    os << value << '\n';
  }
  return os.str();
}

std::string format_kv(const MetricEntries& entries) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [name, value] : entries) os << name << '=' << value << '\n';
  return os.str();
}

void apply_paper_scale(MetricEntries& entries) {
  for (auto& [name, value] : entries) {
    if (name == "jsd") value *= 10.0;
    if (name == "mmd") value *= 1e4;
  }
}

}  // namespace oldm
