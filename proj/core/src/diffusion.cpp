// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/diffusion.hpp"

#include <cmath>

#include "oldm/errors.hpp"

namespace oldm {

NoiseSchedule make_schedule(std::size_t t_steps, double beta_start, double beta_end) {
  if (t_steps < 1) throw ConfigError("make_schedule: T_steps must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw ConfigError("make_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.t_steps = t_steps;
  s.beta.assign(t_steps + 1, 0.0);
  s.alpha.assign(t_steps + 1, 1.0);
  s.alpha_bar.assign(t_steps + 1, 1.0);
  for (std::size_t t = 1; t <= t_steps; ++t) {
    const double frac =
        t_steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(t_steps - 1);
    s.beta[t] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  return s;
}

namespace {

void check_t(std::size_t t, const NoiseSchedule& sched, const char* who) {
  if (t < 1 || t > sched.t_steps)
    throw ValidationError(std::string(who) + ": t out of range");
}

}  // namespace

Tensor forward_sample(const Tensor& x0, std::size_t t, const Tensor& eps,
                      const NoiseSchedule& sched) {
  check_t(t, sched, "forward_sample");
  if (!x0.same_shape(eps)) throw ValidationError("forward_sample: eps shape mismatch");
  const double a = std::sqrt(sched.alpha_bar[t]);
  const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
  Tensor out = x0;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x0.data[i] + b * eps.data[i];
  return out;
}

Tensor reverse_step(const Tensor& x_t, const Tensor& eps_hat, std::size_t t,
                    const NoiseSchedule& sched, Rng& rng) {
  check_t(t, sched, "reverse_step");
  if (!x_t.same_shape(eps_hat)) throw ValidationError("reverse_step: eps_hat shape mismatch");
  const double beta = sched.beta[t];
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha[t]);
  const double noise_coef = beta / std::sqrt(1.0 - sched.alpha_bar[t]);
  Tensor out = x_t;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = inv_sqrt_alpha * (x_t.data[i] - noise_coef * eps_hat.data[i]);
  if (t > 1) {
    const double var = beta * (1.0 - sched.alpha_bar[t - 1]) / (1.0 - sched.alpha_bar[t]);
    const double sigma = std::sqrt(var);
    for (double& v : out.data) v += sigma * rng.normal();
  }
  return out;
}

Tensor sample_loop(const std::vector<std::size_t>& shape, const Denoiser& denoiser,
                   const NoiseSchedule& sched, Rng& rng) {
  Tensor x = Tensor::zeros(shape);
  for (double& v : x.data) v = rng.normal();
  for (std::size_t t = sched.t_steps; t >= 1; --t) {
    Tensor eps_hat = denoiser(x, t);
    if (!eps_hat.same_shape(x)) throw ValidationError("sample_loop: denoiser changed shape");
    x = reverse_step(x, eps_hat, t, sched, rng);
  }
  return x;
}

Tensor repaint_step(const Tensor& x_t_minus1_free, const Tensor& x0_known,
                    const Tensor& known_mask, std::size_t t, const NoiseSchedule& sched,
                    Rng& rng) {
  check_t(t, sched, "repaint_step");
  if (!x_t_minus1_free.same_shape(x0_known) || !x_t_minus1_free.same_shape(known_mask))
    throw ValidationError("repaint_step: shape mismatch");
  bool any = false;
  for (double v : known_mask.data)
    if (v != 0.0) {
      any = true;
      break;
    }
  // With an all-zero mask no draws happen, so the loop stays bitwise equal
  // to unconditional sampling.
  Tensor known = x0_known;
  if (any && t - 1 >= 1) {
    Tensor eps = Tensor::zeros(x0_known.shape);
    for (double& v : eps.data) v = rng.normal();
    known = forward_sample(x0_known, t - 1, eps, sched);
  }
  Tensor out = x_t_minus1_free;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    // Exact copy where the mask is set so the known region survives bitwise.
    if (known_mask.data[i] != 0.0) out.data[i] = known.data[i];
  }
  return out;
}

Tensor conditional_sample_loop(const Tensor& x0_known, const Tensor& known_mask,
                               const Denoiser& denoiser, const NoiseSchedule& sched, Rng& rng) {
  if (!x0_known.same_shape(known_mask))
    throw ValidationError("conditional_sample_loop: mask shape mismatch");
  Tensor x = Tensor::zeros(x0_known.shape);
  for (double& v : x.data) v = rng.normal();
  for (std::size_t t = sched.t_steps; t >= 1; --t) {
    Tensor eps_hat = denoiser(x, t);
    if (!eps_hat.same_shape(x))
      throw ValidationError("conditional_sample_loop: denoiser changed shape");
    Tensor free = reverse_step(x, eps_hat, t, sched, rng);
    x = repaint_step(free, x0_known, known_mask, t, sched, rng);
  }
  return x;
}

}  // namespace oldm
