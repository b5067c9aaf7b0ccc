// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "oldm/rng.hpp"
#include "oldm/tensor.hpp"

namespace oldm {

// Linear-beta DDPM schedule. Arrays are indexed 1..t_steps; index 0 is kept
// so alpha_bar[0] = 1 falls out naturally for the posterior at t = 1.
struct NoiseSchedule {
  std::size_t t_steps = 0;
  std::vector<double> beta;       // beta[0] unused
  std::vector<double> alpha;      // 1 - beta[t]
  std::vector<double> alpha_bar;  // running product, alpha_bar[0] = 1
};

NoiseSchedule make_schedule(std::size_t t_steps = 1000, double beta_start = 1e-4,
                            double beta_end = 0.02);

// x_t = sqrt(alpha_bar[t]) x0 + sqrt(1 - alpha_bar[t]) eps
Tensor forward_sample(const Tensor& x0, std::size_t t, const Tensor& eps,
                      const NoiseSchedule& sched);

// One DDPM posterior step; at t = 1 returns the mean with no noise.
Tensor reverse_step(const Tensor& x_t, const Tensor& eps_hat, std::size_t t,
                    const NoiseSchedule& sched, Rng& rng);

using Denoiser = std::function<Tensor(const Tensor& x_t, std::size_t t)>;

Tensor sample_loop(const std::vector<std::size_t>& shape, const Denoiser& denoiser,
                   const NoiseSchedule& sched, Rng& rng);

// Repaint conditioning: after the free reverse step to t-1, the known region
// is overwritten with a forward-noised copy of the ground truth (the exact
// ground truth once t-1 = 0).
Tensor repaint_step(const Tensor& x_t_minus1_free, const Tensor& x0_known,
                    const Tensor& known_mask, std::size_t t, const NoiseSchedule& sched, Rng& rng);

Tensor conditional_sample_loop(const Tensor& x0_known, const Tensor& known_mask,
                               const Denoiser& denoiser, const NoiseSchedule& sched, Rng& rng);

}  // namespace oldm
