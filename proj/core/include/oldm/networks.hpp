// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "oldm/autodiff.hpp"
#include "oldm/conditioning.hpp"
#include "oldm/diffusion.hpp"
#include "oldm/params.hpp"
#include "oldm/rng.hpp"
#include "oldm/tensor.hpp"
#include "oldm/types.hpp"

namespace oldm {

// Single-head cross-attention weights, W row-major [out,in].
struct AttentionWeights {
  const Tensor* wq;  // [d,d]
  const Tensor* bq;  // [d]
  const Tensor* wk;  // [d,cond]
  const Tensor* bk;  // [d]
  const Tensor* wv;  // [d,cond]
  const Tensor* bv;  // [d]
  bool scale_logits = true;
};

// tokens + softmax(q k^T / sqrt(d)) v with q from tokens and the single
// key/value from cond + t_emb. Plain (tape-free) evaluation.
Tensor cross_attention(const Tensor& tokens, const std::vector<double>& cond,
                       const std::vector<double>& t_emb, const AttentionWeights& w);

struct ObjectDenoiserConfig {
  std::size_t voxels = 16;      // V
  std::size_t patch = 4;        // p
  std::size_t n_points = 1024;  // N
  std::size_t token_dim = 64;   // d
  std::size_t blocks = 2;       // B
  std::size_t cond_dim = kConditionDim;
  std::size_t text_dim = kTextDim;
  std::size_t fourier_freqs = kFourierFreqs;
  bool scale_logits = true;

  std::size_t tokens() const;
  std::size_t token_in() const { return 2 * patch * patch * patch; }
};

// Voxel-token denoiser: patchified grid -> embedding + learned positions ->
// blocks of {cross-attention on the condition, GELU feed-forward} -> a
// zero-initialized linear head over the concatenated tokens to N x 4.
class ObjectDenoiser {
 public:
  ObjectDenoiser(const ObjectDenoiserConfig& cfg, ParamStore& ps);

  const ObjectDenoiserConfig& config() const { return cfg_; }

  // Condition built outside the graph (inference path).
  Var forward(Tape& tape, const VoxelGrid& grid, std::size_t t,
              const std::vector<double>& cond) const;
  // Condition built in-graph from box and text embeddings so the combiner
  // parameters receive gradients.
  Var forward(Tape& tape, const VoxelGrid& grid, std::size_t t, const std::vector<double>& f_b,
              const std::vector<double>& f_t) const;

  Tensor infer(const VoxelGrid& grid, std::size_t t, const std::vector<double>& cond) const;

  // c = W [f_B ; f_T] + b with this model's combiner parameters.
  std::vector<double> combine(const std::vector<double>& f_b,
                              const std::vector<double>& f_t) const;

 private:
  Var forward_tokens(Tape& tape, const VoxelGrid& grid, Var key_in) const;

  ObjectDenoiserConfig cfg_;
  ParamStore* ps_;
};

struct SceneDenoiserConfig {
  std::size_t base_width = 16;  // channels after the stem
  std::size_t depth = 3;        // number of downsamplings
  std::size_t cond_dim = kConditionDim;

  std::size_t width(std::size_t level) const { return base_width << level; }
};

// Control branch outputs: one map per encoder scale plus the bottleneck.
struct ControlVars {
  std::vector<Var> skips;
  Var mid;
};

struct ControlFeatures {
  std::vector<Tensor> skips;
  Tensor mid;
};

class SceneDenoiser {
 public:
  SceneDenoiser(const SceneDenoiserConfig& cfg, ParamStore& ps);

  const SceneDenoiserConfig& config() const { return cfg_; }

  Var forward(Tape& tape, Var img_t, std::size_t t, const ControlVars* control) const;
  Tensor infer(const Tensor& img_t, std::size_t t, const ControlFeatures* control) const;

 private:
  SceneDenoiserConfig cfg_;
  ParamStore* ps_;
};

// Zero-convolution controller: fuses the composed object image with the
// noisy scene state, runs a copy of the scene encoder, and emits per-scale
// maps through zero-initialized 1x1 convolutions.
class Controller {
 public:
  Controller(const SceneDenoiserConfig& cfg, ParamStore& ps);

  ControlVars forward(Tape& tape, Var obj_img, Var img_t, std::size_t t) const;
  ControlFeatures infer(const Tensor& obj_img, const Tensor& img_t, std::size_t t) const;

 private:
  SceneDenoiserConfig cfg_;
  ParamStore* ps_;
};

// [2,H,W] double tensor from a two-channel range image and back.
Tensor image_to_tensor(const RangeImage& img);
RangeImage tensor_to_image(const Tensor& t);

struct LossGraph {
  double loss = 0.0;
  std::unique_ptr<Tape> tape;
};

// Object diffusion loss: x_t = forward_sample(x0,t,eps), voxelize, denoise,
// MSE against eps. Gradients live on the returned tape.
LossGraph object_loss_graph(const ObjectDenoiser& den, const Tensor& x0, std::size_t t,
                            const Tensor& eps, const std::vector<double>& f_b,
                            const std::vector<double>& f_t, const NoiseSchedule& sched);

// Convenience wrapper: runs the graph and accumulates into ParamStore slots.
double object_loss(const ObjectDenoiser& den, const Tensor& x0, std::size_t t, const Tensor& eps,
                   const std::vector<double>& f_b, const std::vector<double>& f_t,
                   const NoiseSchedule& sched);

LossGraph scene_loss_graph(const SceneDenoiser& den, const Controller& ctrl, const Tensor& img0,
                           const Tensor& obj_img, std::size_t t, const Tensor& eps,
                           const NoiseSchedule& sched);

double scene_loss(const SceneDenoiser& den, const Controller& ctrl, const Tensor& img0,
                  const Tensor& obj_img, std::size_t t, const Tensor& eps,
                  const NoiseSchedule& sched);

struct TrainConfig {
  std::size_t steps = 500;
  std::size_t batch = 8;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::filesystem::path out_dir;     // empty: no files written
  double lambda_osa = 0.0;           // scene stage only
};

struct TrainResult {
  std::vector<double> losses;  // one entry per step (batch mean)
  std::filesystem::path final_checkpoint;
};

struct ObjectSample {
  Tensor x0;  // [N,4] normalized
  std::vector<double> f_b;
  std::vector<double> f_t;
};

struct SceneSample {
  Tensor img0;     // [2,H,W]
  Tensor obj_img;  // [2,H,W]
  MaskStack masks;
};

TrainResult train_object(const ObjectDenoiser& den, ParamStore& ps,
                         const std::vector<ObjectSample>& data, const NoiseSchedule& sched,
                         const TrainConfig& cfg);

TrainResult train_scene(const SceneDenoiser& den, const Controller& ctrl, ParamStore& ps,
                        const std::vector<SceneSample>& data, const NoiseSchedule& sched,
                        const TrainConfig& cfg);

// Adam with bias correction; shared by both trainers, exposed for tests.
class AdamOptimizer {
 public:
  AdamOptimizer(ParamStore& ps, double lr);
  void step();

 private:
  ParamStore* ps_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace oldm
