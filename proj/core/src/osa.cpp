// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/osa.hpp"

#include <algorithm>
#include <iostream>

#include "oldm/errors.hpp"

namespace oldm {

MaskedRangeTensor build_masked_channels(const Tensor& img, const MaskStack& masks) {
  if (img.shape.size() != 3 || img.shape[0] != 2 || img.shape[1] != masks.height ||
      img.shape[2] != masks.width)
    throw ValidationError("build_masked_channels: dimension mismatch");
  const std::size_t h = masks.height, w = masks.width;
  MaskedRangeTensor out;
  out.masks = masks;
  out.groups.reserve(masks.categories());
  for (std::size_t c = 0; c < masks.categories(); ++c) {
    Tensor g = Tensor::zeros(img.shape);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        if (!masks.at(c, y, x)) continue;
        g.data[(0 * h + y) * w + x] = img.data[(0 * h + y) * w + x];
        g.data[(1 * h + y) * w + x] = img.data[(1 * h + y) * w + x];
      }
    out.groups.push_back(std::move(g));
  }
  return out;
}

MaskedRangeTensor build_masked_channels(const RangeImage& img, const MaskStack& masks) {
  return build_masked_channels(image_to_tensor(img), masks);
}

namespace {

// Pixel-mask weight broadcast over channels, scaled by 1/max(|M|,1).
Tensor group_weight(const MaskStack& masks, std::size_t c) {
  const std::size_t h = masks.height, w = masks.width;
  Tensor wt = Tensor::zeros({2, h, w});
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(masks.count(c), 1));
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (!masks.at(c, y, x)) continue;
      wt.data[(0 * h + y) * w + x] = inv;
      wt.data[(1 * h + y) * w + x] = inv;
    }
  return wt;
}

// Adds the per-group terms to the tape; returns the mean over nonempty
// groups, or an empty Var when every mask is empty.
Var osa_term(Tape& tape, const SceneDenoiser& den, const MaskedRangeTensor& masked, std::size_t t,
             const std::vector<Tensor>& eps_per_group, const NoiseSchedule& sched) {
  if (eps_per_group.size() != masked.groups.size())
    throw ValidationError("osa: need one noise array per group");
  Var sum;
  std::size_t nonempty = 0;
  for (std::size_t c = 0; c < masked.groups.size(); ++c) {
    if (masked.masks.count(c) == 0) continue;
    if (!eps_per_group[c].same_shape(masked.groups[c]))
      throw ValidationError("osa: eps shape mismatch");
    Tensor x_t = forward_sample(masked.groups[c], t, eps_per_group[c], sched);
    Var out = den.forward(tape, tape.constant(std::move(x_t)), t, nullptr);
    Var term = tape.weighted_sq_sum(out, tape.constant(eps_per_group[c]),
                                    tape.constant(group_weight(masked.masks, c)));
    sum = nonempty == 0 ? term : tape.add(sum, term);
    ++nonempty;
  }
  if (nonempty == 0) return Var{};
  return tape.scale(sum, 1.0 / static_cast<double>(nonempty));
}

}  // namespace

LossGraph osa_loss_graph(const SceneDenoiser& den, const MaskedRangeTensor& masked, std::size_t t,
                         const std::vector<Tensor>& eps_per_group, const NoiseSchedule& sched) {
  LossGraph g;
  g.tape = std::make_unique<Tape>();
  Var loss = osa_term(*g.tape, den, masked, t, eps_per_group, sched);
  if (loss.id == static_cast<std::size_t>(-1)) {
    std::cerr << "osa_loss: all masks empty, loss is 0\n";
    g.loss = 0.0;
    return g;
  }
  g.tape->backward(loss);
  g.loss = g.tape->val(loss).data[0];
  return g;
}

double osa_loss(const SceneDenoiser& den, const MaskedRangeTensor& masked, std::size_t t,
                const std::vector<Tensor>& eps_per_group, const NoiseSchedule& sched) {
  LossGraph g = osa_loss_graph(den, masked, t, eps_per_group, sched);
  if (g.tape) g.tape->add_param_grads(1.0);
  return g.loss;
}

LossGraph combined_scene_loss_graph(const SceneDenoiser& den, const Controller& ctrl,
                                    const Tensor& img0, const Tensor& obj_img,
                                    const MaskStack& masks, std::size_t t, const Tensor& eps,
                                    const std::vector<Tensor>& group_eps,
                                    const NoiseSchedule& sched, double lambda_osa) {
  if (lambda_osa < 0.0) throw ConfigError("combined_scene_loss: lambda_osa must be >= 0");
  if (!img0.same_shape(obj_img) || !img0.same_shape(eps))
    throw ValidationError("combined_scene_loss: shape mismatch");
  LossGraph g;
  g.tape = std::make_unique<Tape>();
  Tape& tape = *g.tape;

  Var xtv = tape.constant(forward_sample(img0, t, eps, sched));
  Var objv = tape.constant(obj_img);
  ControlVars control = ctrl.forward(tape, objv, xtv, t);
  Var out = den.forward(tape, xtv, t, &control);
  Var loss = tape.mse(out, tape.constant(eps));

  if (lambda_osa > 0.0) {
    MaskedRangeTensor masked = build_masked_channels(img0, masks);
    Var osa = osa_term(tape, den, masked, t, group_eps, sched);
    if (osa.id != static_cast<std::size_t>(-1))
      loss = tape.add_scaled(loss, osa, 1.0, lambda_osa);
  }
  tape.backward(loss);
  g.loss = tape.val(loss).data[0];
  return g;
}

double combined_scene_loss(const SceneDenoiser& den, const Controller& ctrl, const Tensor& img0,
                           const Tensor& obj_img, const MaskStack& masks, std::size_t t, Rng& rng,
                           const NoiseSchedule& sched, double lambda_osa) {
  Tensor eps = Tensor::zeros(img0.shape);
  for (double& v : eps.data) v = rng.normal();
  std::vector<Tensor> group_eps;
  if (lambda_osa > 0.0) {
    group_eps.reserve(masks.categories());
    for (std::size_t c = 0; c < masks.categories(); ++c) {
      Tensor ge = Tensor::zeros(img0.shape);
      for (double& v : ge.data) v = rng.normal();
      group_eps.push_back(std::move(ge));
    }
  }
  LossGraph g = combined_scene_loss_graph(den, ctrl, img0, obj_img, masks, t, eps, group_eps,
                                          sched, lambda_osa);
  g.tape->add_param_grads(1.0);
  return g.loss;
}

}  // namespace oldm
