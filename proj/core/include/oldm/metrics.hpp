// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "oldm/types.hpp"

namespace oldm {

inline constexpr std::size_t kFeatureDim = 32;

// 32-dim point-cloud descriptor: mean, std, skew, excess kurtosis of each of
// x, y, z, intensity (stat-major), then a 16-bin radial histogram.
using FeatureVector = std::vector<double>;

// Squared-distance Chamfer over xyz, averaged per direction and summed.
// The kd-tree path performs the same per-pair arithmetic as the brute-force
// oracle, so the two agree exactly.
double chamfer_distance(const PointCloud& p, const PointCloud& q);
double chamfer_distance_brute(const PointCloud& p, const PointCloud& q);

// Jensen-Shannon divergence in nats between normalized BEV histograms.
double jsd(const BevHistogram& p, const BevHistogram& q);

// Unbiased MMD^2 estimator, Gaussian kernel, median-heuristic bandwidth over
// the pooled sets (lower median, floored at 1e-12).
double mmd(const std::vector<BevHistogram>& a, const std::vector<BevHistogram>& b);

FeatureVector extract_features(const PointCloud& cloud);

// Frechet distance between Gaussian fits of two feature-vector sets
// (unbiased covariance plus 1e-6 diagonal jitter).
double frechet_distance(const std::vector<FeatureVector>& real,
                        const std::vector<FeatureVector>& gen);

// Parameter-level entry: moments given directly, no jitter applied.
double frechet_from_moments(const std::vector<double>& mu1, const std::vector<double>& cov1,
                            const std::vector<double>& mu2, const std::vector<double>& cov2);

double semantic_similarity(const FeatureVector& a, const FeatureVector& b);

// Report plumbing shared by the eval command.
using MetricEntries = std::vector<std::pair<std::string, double>>;

std::string format_table(const MetricEntries& entries);
std::string format_kv(const MetricEntries& entries);
// Table-1 presentation scaling: jsd x10, mmd x1e4.
void apply_paper_scale(MetricEntries& entries);

}  // namespace oldm
