// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "oldm/networks.hpp"
#include "oldm/types.hpp"

namespace oldm {

// Per-category masked copies of a scene image; group i is img * M_i with the
// mask broadcast over both channels, so groups are disjoint in support.
struct MaskedRangeTensor {
  std::vector<Tensor> groups;  // one [2,H,W] tensor per category
  MaskStack masks;
};

MaskedRangeTensor build_masked_channels(const RangeImage& img, const MaskStack& masks);
MaskedRangeTensor build_masked_channels(const Tensor& img, const MaskStack& masks);

// Semantic-alignment loss: each nonempty group is forward-noised with its own
// eps, denoised (shared weights, no controller), and scored by the
// mask-normalized squared error; the result is the mean over nonempty groups.
LossGraph osa_loss_graph(const SceneDenoiser& den, const MaskedRangeTensor& masked, std::size_t t,
                         const std::vector<Tensor>& eps_per_group, const NoiseSchedule& sched);

double osa_loss(const SceneDenoiser& den, const MaskedRangeTensor& masked, std::size_t t,
                const std::vector<Tensor>& eps_per_group, const NoiseSchedule& sched);

// scene_loss + lambda * osa_loss on a single tape. group_eps may be empty
// when lambda is zero; otherwise it holds one tensor per mask category.
LossGraph combined_scene_loss_graph(const SceneDenoiser& den, const Controller& ctrl,
                                    const Tensor& img0, const Tensor& obj_img,
                                    const MaskStack& masks, std::size_t t, const Tensor& eps,
                                    const std::vector<Tensor>& group_eps,
                                    const NoiseSchedule& sched, double lambda_osa);

// Draws the scene noise, then one noise per mask category, from rng and
// accumulates gradients into the ParamStore slots.
double combined_scene_loss(const SceneDenoiser& den, const Controller& ctrl, const Tensor& img0,
                           const Tensor& obj_img, const MaskStack& masks, std::size_t t, Rng& rng,
                           const NoiseSchedule& sched, double lambda_osa);

}  // namespace oldm
