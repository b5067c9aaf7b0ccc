// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "oldm/diffusion.hpp"
#include "oldm/errors.hpp"
#include "oldm/rng.hpp"
#include "oldm/tensor.hpp"

using namespace oldm;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("single-step schedule has alpha_bar 0.99") {
  const NoiseSchedule s = make_schedule(1, 0.01, 0.01);
  CHECK(s.beta[1] == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(s.alpha_bar[1] == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(s.alpha_bar[0] == 1.0);
}

TEST_CASE("default schedule starts at alpha_bar 0.9999") {
  const NoiseSchedule s = make_schedule();
  CHECK(s.t_steps == 1000);
  CHECK(s.alpha_bar[1] == doctest::Approx(0.9999).epsilon(1e-12));
  CHECK(s.beta[1000] == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("alpha_bar equals an independent running product") {
  const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
  double prod = 1.0;
  for (std::size_t t = 1; t <= s.t_steps; ++t) {
    prod *= 1.0 - s.beta[t];
    CHECK(std::abs(s.alpha_bar[t] - prod) <= 1e-12);
    CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    CHECK(s.alpha_bar[t] > 0.0);
    CHECK(s.alpha_bar[t] < 1.0);
    CHECK(s.beta[t] > 0.0);
    CHECK(s.beta[t] < 1.0);
  }
}

TEST_CASE("schedule rejects invalid bounds") {
  CHECK_THROWS_AS(make_schedule(0, 1e-4, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 1e-4, 1.0), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.02, 1e-4), ConfigError);
}

TEST_CASE("forward sample with zero noise scales by sqrt(alpha_bar)") {
  const NoiseSchedule s = make_schedule(100, 1e-3, 0.05);
  Tensor x0 = Tensor::zeros({3});
  x0.data = {1.0, -2.0, 0.5};
  const Tensor eps = Tensor::zeros({3});
  const Tensor xt = forward_sample(x0, 40, eps, s);
  const double c = std::sqrt(s.alpha_bar[40]);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(xt.data[i] == doctest::Approx(c * x0.data[i]).epsilon(1e-15));
}

TEST_CASE("forward sample matches the scalar worked example") {
  // alpha_bar[1] = 0.25 comes from beta = 0.75.
  const NoiseSchedule s = make_schedule(1, 0.75, 0.75);
  Tensor x0 = Tensor::scalar(1.0);
  Tensor eps = Tensor::scalar(1.0);
  const Tensor xt = forward_sample(x0, 1, eps, s);
  CHECK(xt.data[0] == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-12));
  CHECK(xt.data[0] == doctest::Approx(1.3660).epsilon(1e-4));
}

TEST_CASE("forward sample statistics match the closed form") {
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  Rng rng(77);
  const double x0 = 0.8;
  Tensor x0t = Tensor::scalar(x0);
  for (std::size_t t : {std::size_t{1}, std::size_t{25}, std::size_t{50}}) {
    const int n = 10000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      Tensor eps = Tensor::scalar(rng.normal());
      const double v = forward_sample(x0t, t, eps, s).data[0];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double want_mean = std::sqrt(s.alpha_bar[t]) * x0;
    const double want_var = 1.0 - s.alpha_bar[t];
    CHECK(std::abs(mean - want_mean) <= 4.0 * std::sqrt(want_var / n));
    // Var of the sample variance of a normal is ~2 sigma^4 / n.
    CHECK(std::abs(var - want_var) <= 4.0 * want_var * std::sqrt(2.0 / n));
  }
}

TEST_CASE("forward sample rejects bad t and shape mismatch") {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.02);
  const Tensor x0 = Tensor::zeros({2});
  CHECK_THROWS_AS(forward_sample(x0, 0, Tensor::zeros({2}), s), ValidationError);
  CHECK_THROWS_AS(forward_sample(x0, 11, Tensor::zeros({2}), s), ValidationError);
  CHECK_THROWS_AS(forward_sample(x0, 5, Tensor::zeros({3}), s), ValidationError);
}

TEST_CASE("reverse step at t=1 is the posterior mean with no noise") {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.05);
  Tensor xt = Tensor::scalar(0.7);
  Tensor eh = Tensor::scalar(0.3);
  Rng a(1), b(2);  // different rngs must not matter at t = 1
  const Tensor r1 = reverse_step(xt, eh, 1, s, a);
  const Tensor r2 = reverse_step(xt, eh, 1, s, b);
  CHECK(bitwise_equal(r1, r2));
  const double mu =
      (0.7 - s.beta[1] / std::sqrt(1.0 - s.alpha_bar[1]) * 0.3) / std::sqrt(s.alpha[1]);
  CHECK(r1.data[0] == doctest::Approx(mu).epsilon(1e-15));
}

TEST_CASE("reverse step recovers the DDPM posterior mean oracle") {
  // With eps_hat equal to the true eps, mu must match the closed-form
  // posterior mean of q(x_{t-1} | x_t, x0) computed independently.
  const NoiseSchedule s = make_schedule(30, 1e-3, 0.04);
  Rng rng(5);
  for (std::size_t t : {std::size_t{2}, std::size_t{15}, std::size_t{30}}) {
    const double x0 = 1.2;
    const double eps = rng.normal();
    Tensor x0t = Tensor::scalar(x0);
    Tensor epst = Tensor::scalar(eps);
    const Tensor xt = forward_sample(x0t, t, epst, s);
    // Freeze the rng draw so mu can be extracted: run twice with cloned rngs.
    Rng r1(9, t), r2(9, t);
    const Tensor out = reverse_step(xt, epst, t, s, r1);
    const double z = r2.normal();
    const double ab = s.alpha_bar[t], abp = s.alpha_bar[t - 1], b = s.beta[t];
    const double sigma2 = b * (1.0 - abp) / (1.0 - ab);
    const double mu_oracle = std::sqrt(abp) * b / (1.0 - ab) * x0 +
                             std::sqrt(s.alpha[t]) * (1.0 - abp) / (1.0 - ab) * xt.data[0];
    CHECK(out.data[0] == doctest::Approx(mu_oracle + std::sqrt(sigma2) * z).epsilon(1e-9));
  }
}

TEST_CASE("sample loop with a zero denoiser and T=1 rescales the seed noise") {
  const NoiseSchedule s = make_schedule(1, 0.19, 0.19);
  const Denoiser zero = [](const Tensor& x, std::size_t) { return Tensor::zeros(x.shape); };
  Rng r1(21), r2(21);
  const Tensor out = sample_loop({5}, zero, s, r1);
  for (std::size_t i = 0; i < 5; ++i) {
    const double x1 = r2.normal();
    CHECK(out.data[i] == doctest::Approx(x1 / std::sqrt(s.alpha[1])).epsilon(1e-12));
  }
}

TEST_CASE("sample loop is deterministic and shape preserving") {
  const NoiseSchedule s = make_schedule(25, 1e-3, 0.05);
  const Denoiser half = [](const Tensor& x, std::size_t) {
    Tensor e = x;
    for (double& v : e.data) v *= 0.5;
    return e;
  };
  Rng r1(33), r2(33);
  const Tensor a = sample_loop({4, 4}, half, s, r1);
  const Tensor b = sample_loop({4, 4}, half, s, r2);
  CHECK(a.shape == std::vector<std::size_t>{4, 4});
  CHECK(bitwise_equal(a, b));
}

TEST_CASE("sample loop rejects shape-violating denoisers") {
  const NoiseSchedule s = make_schedule(5, 1e-3, 0.05);
  const Denoiser bad = [](const Tensor&, std::size_t) { return Tensor::zeros({1}); };
  Rng rng(1);
  CHECK_THROWS_AS(sample_loop({2, 2}, bad, s, rng), ValidationError);
}

TEST_CASE("repaint with a full mask forward-noises the known data") {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.05);
  Tensor x0 = Tensor::zeros({4});
  x0.data = {0.1, -0.2, 0.3, -0.4};
  Tensor mask = Tensor::zeros({4});
  for (double& v : mask.data) v = 1.0;
  Tensor free = Tensor::zeros({4});
  for (double& v : free.data) v = 99.0;
  Rng r1(3, 0), r2(3, 0);
  const Tensor out = repaint_step(free, x0, mask, 5, s, r1);
  Tensor eps = Tensor::zeros({4});
  for (double& v : eps.data) v = r2.normal();
  const Tensor want = forward_sample(x0, 4, eps, s);
  CHECK(bitwise_equal(out, want));
}

TEST_CASE("repaint at the last step copies the known region exactly") {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.05);
  Tensor x0 = Tensor::zeros({4});
  x0.data = {0.1, -0.2, 0.3, -0.4};
  Tensor mask = Tensor::zeros({4});
  mask.data = {1.0, 0.0, 1.0, 0.0};
  Tensor free = Tensor::zeros({4});
  free.data = {9.0, 8.0, 7.0, 6.0};
  Rng rng(4);
  const Tensor out = repaint_step(free, x0, mask, 1, s, rng);
  CHECK(out.data[0] == 0.1);
  CHECK(out.data[1] == 8.0);
  CHECK(out.data[2] == 0.3);
  CHECK(out.data[3] == 6.0);
}

TEST_CASE("repaint with an empty mask is a bitwise no-op on the rng too") {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.05);
  Tensor x0 = Tensor::zeros({3});
  Tensor mask = Tensor::zeros({3});
  Tensor free = Tensor::zeros({3});
  free.data = {1.0, 2.0, 3.0};
  Rng rng(6, 1);
  const std::uint64_t before = Rng(6, 1).next_u64();
  const Tensor out = repaint_step(free, x0, mask, 5, s, rng);
  CHECK(bitwise_equal(out, free));
  CHECK(rng.next_u64() == before);  // no draws consumed
}

TEST_CASE("conditioned loop pins the known region bitwise") {
  const NoiseSchedule s = make_schedule(50, 1e-3, 0.05);
  Tensor x0 = Tensor::zeros({6});
  x0.data = {0.5, -0.5, 0.25, 0.0, 1.0, -1.0};
  Tensor mask = Tensor::zeros({6});
  mask.data = {1.0, 1.0, 0.0, 0.0, 1.0, 0.0};
  const Denoiser half = [](const Tensor& x, std::size_t) {
    Tensor e = x;
    for (double& v : e.data) v *= 0.3;
    return e;
  };
  Rng rng(12);
  const Tensor out = conditional_sample_loop(x0, mask, half, s, rng);
  for (std::size_t i = 0; i < 6; ++i) {
    if (mask.data[i] == 1.0)
      CHECK(out.data[i] == x0.data[i]);
    else
      CHECK(out.data[i] != x0.data[i]);
  }
}

TEST_CASE("conditioned loop with an all-zero mask equals the free loop bitwise") {
  const NoiseSchedule s = make_schedule(20, 1e-3, 0.05);
  const Denoiser half = [](const Tensor& x, std::size_t) {
    Tensor e = x;
    for (double& v : e.data) v *= 0.4;
    return e;
  };
  Tensor x0 = Tensor::zeros({3, 3});
  Tensor mask = Tensor::zeros({3, 3});
  Rng r1(8), r2(8);
  const Tensor cond = conditional_sample_loop(x0, mask, half, s, r1);
  const Tensor free = sample_loop({3, 3}, half, s, r2);
  CHECK(bitwise_equal(cond, free));
}

TEST_CASE("repaint validates shapes") {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.05);
  Rng rng(1);
  Tensor x0 = Tensor::zeros({3});
  Tensor mask = Tensor::zeros({2});
  Tensor free = Tensor::zeros({3});
  CHECK_THROWS_AS(repaint_step(free, x0, mask, 5, s, rng), ValidationError);
  CHECK_THROWS_AS(conditional_sample_loop(x0, mask, nullptr, s, rng), ValidationError);
}
