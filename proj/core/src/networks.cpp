// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/networks.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "oldm/errors.hpp"
#include "oldm/geometry.hpp"
#include "oldm/osa.hpp"

namespace oldm {
namespace {

std::string blk(const std::string& base, std::size_t i, const char* leaf) {
  return base + std::to_string(i) + leaf;
}

// vec [n] -> W [m,n] vec + b, as a tape op chain.
Var linear_vec(Tape& tape, Var vec, Var w, Var b) {
  const std::size_t n = tape.val(vec).data.size();
  const std::size_t m = tape.val(w).shape[0];
  Var row = tape.reshape(vec, {1, n});
  Var out = tape.add_row(tape.matmul_nt(row, w), b);
  return tape.reshape(out, {m});
}

// Two 3x3 convolutions with a timestep-embedding channel bias in between.
Var conv_block(Tape& tape, ParamStore& ps, const std::string& prefix, Var x, Var temb) {
  Var h = tape.conv2d(x, tape.param(ps.at(prefix + ".conv1.w")));
  h = tape.bias_ch(h, tape.param(ps.at(prefix + ".conv1.b")));
  Var tv = linear_vec(tape, temb, tape.param(ps.at(prefix + ".temb.w")),
                      tape.param(ps.at(prefix + ".temb.b")));
  h = tape.silu(tape.bias_ch(h, tv));
  h = tape.conv2d(h, tape.param(ps.at(prefix + ".conv2.w")));
  h = tape.bias_ch(h, tape.param(ps.at(prefix + ".conv2.b")));
  return tape.silu(h);
}

void add_conv_block_params(ParamStore& ps, const std::string& prefix, std::size_t channels,
                           std::size_t cond_dim) {
  ps.add(prefix + ".conv1.w", {channels, channels, 3, 3}, InitKind::kUniformFanIn, 9 * channels);
  ps.add(prefix + ".conv1.b", {channels}, InitKind::kZero);
  ps.add(prefix + ".temb.w", {channels, cond_dim}, InitKind::kUniformFanIn, cond_dim);
  ps.add(prefix + ".temb.b", {channels}, InitKind::kZero);
  ps.add(prefix + ".conv2.w", {channels, channels, 3, 3}, InitKind::kUniformFanIn, 9 * channels);
  ps.add(prefix + ".conv2.b", {channels}, InitKind::kZero);
}

Var zconv1x1(Tape& tape, ParamStore& ps, const std::string& prefix, Var x) {
  Var h = tape.conv2d(x, tape.param(ps.at(prefix + ".w")));
  return tape.bias_ch(h, tape.param(ps.at(prefix + ".b")));
}

}  // namespace

Tensor cross_attention(const Tensor& tokens, const std::vector<double>& cond,
                       const std::vector<double>& t_emb, const AttentionWeights& w) {
  if (tokens.shape.size() != 2) throw ConfigError("cross_attention: tokens must be [T,d]");
  const std::size_t n_tok = tokens.shape[0], d = tokens.shape[1];
  if (cond.size() != t_emb.size()) throw ConfigError("cross_attention: cond/t_emb dim mismatch");
  const std::size_t cd = cond.size();
  if (w.wq->shape != std::vector<std::size_t>{d, d} ||
      w.wk->shape != std::vector<std::size_t>{d, cd} ||
      w.wv->shape != std::vector<std::size_t>{d, cd})
    throw ConfigError("cross_attention: weight shapes mismatch");
  std::vector<double> u(cd);
  for (std::size_t i = 0; i < cd; ++i) u[i] = cond[i] + t_emb[i];
  std::vector<double> k(d), v(d);
  for (std::size_t i = 0; i < d; ++i) {
    double ka = w.bk->data[i], va = w.bv->data[i];
    for (std::size_t j = 0; j < cd; ++j) {
      ka += w.wk->data[i * cd + j] * u[j];
      va += w.wv->data[i * cd + j] * u[j];
    }
    k[i] = ka;
    v[i] = va;
  }
  Tensor out = tokens;
  for (std::size_t tok = 0; tok < n_tok; ++tok) {
    // Single key: the softmax weight is exactly 1 whatever q is, but q is
    // still computed so the parameterization matches the tape path.
    double logit = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double qi = w.bq->data[i];
      for (std::size_t j = 0; j < d; ++j) qi += w.wq->data[i * d + j] * tokens.data[tok * d + j];
      logit += qi * k[i];
    }
    if (w.scale_logits) logit /= std::sqrt(static_cast<double>(d));
    const double weight = std::exp(logit - logit);  // softmax of a singleton
    for (std::size_t i = 0; i < d; ++i) out.data[tok * d + i] += weight * v[i];
  }
  return out;
}

std::size_t ObjectDenoiserConfig::tokens() const {
  const std::size_t g = voxels / patch;
  return g * g * g;
}

ObjectDenoiser::ObjectDenoiser(const ObjectDenoiserConfig& cfg, ParamStore& ps)
    : cfg_(cfg), ps_(&ps) {
  if (cfg.patch == 0 || cfg.voxels % cfg.patch != 0)
    throw ConfigError("object denoiser: voxel grid not divisible into patches");
  const std::size_t d = cfg.token_dim, tin = cfg.token_in(), n_tok = cfg.tokens();
  const std::size_t box_dim = 14 * cfg.fourier_freqs;
  ps.add("obj.cond.w", {cfg.cond_dim, box_dim + cfg.text_dim}, InitKind::kUniformFanIn,
         box_dim + cfg.text_dim);
  ps.add("obj.cond.b", {cfg.cond_dim}, InitKind::kZero);
  ps.add("obj.embed.w", {d, tin}, InitKind::kUniformFanIn, tin);
  ps.add("obj.embed.b", {d}, InitKind::kZero);
  ps.add("obj.pos", {n_tok, d}, InitKind::kUniformFanIn, d);
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    const std::string base = "obj.blk";
    ps.add(blk(base, i, ".q.w"), {d, d}, InitKind::kUniformFanIn, d);
    ps.add(blk(base, i, ".q.b"), {d}, InitKind::kZero);
    ps.add(blk(base, i, ".k.w"), {d, cfg.cond_dim}, InitKind::kUniformFanIn, cfg.cond_dim);
    ps.add(blk(base, i, ".k.b"), {d}, InitKind::kZero);
    ps.add(blk(base, i, ".v.w"), {d, cfg.cond_dim}, InitKind::kUniformFanIn, cfg.cond_dim);
    ps.add(blk(base, i, ".v.b"), {d}, InitKind::kZero);
    ps.add(blk(base, i, ".ffn1.w"), {4 * d, d}, InitKind::kUniformFanIn, d);
    ps.add(blk(base, i, ".ffn1.b"), {4 * d}, InitKind::kZero);
    ps.add(blk(base, i, ".ffn2.w"), {d, 4 * d}, InitKind::kUniformFanIn, 4 * d);
    ps.add(blk(base, i, ".ffn2.b"), {d}, InitKind::kZero);
  }
  ps.add("obj.head.w", {cfg.n_points * 4, n_tok * d}, InitKind::kZero);
  ps.add("obj.head.b", {cfg.n_points * 4}, InitKind::kZero);
}

Var ObjectDenoiser::forward_tokens(Tape& tape, const VoxelGrid& grid, Var key_in) const {
  if (grid.resolution != cfg_.voxels)
    throw ConfigError("object denoiser: grid resolution mismatch");
  const std::size_t p = cfg_.patch, g = cfg_.voxels / p, d = cfg_.token_dim;
  const std::size_t n_tok = cfg_.tokens(), tin = cfg_.token_in();
  Tensor patches = Tensor::zeros({n_tok, tin});
  for (std::size_t gx = 0; gx < g; ++gx)
    for (std::size_t gy = 0; gy < g; ++gy)
      for (std::size_t gz = 0; gz < g; ++gz) {
        const std::size_t tok = (gx * g + gy) * g + gz;
        std::size_t f = 0;
        for (std::size_t ch = 0; ch < 2; ++ch)
          for (std::size_t lx = 0; lx < p; ++lx)
            for (std::size_t ly = 0; ly < p; ++ly)
              for (std::size_t lz = 0; lz < p; ++lz) {
                patches.data[tok * tin + f] =
                    grid.data[grid.cell(gx * p + lx, gy * p + ly, gz * p + lz) * 2 + ch];
                ++f;
              }
      }

  Var x = tape.add_row(tape.matmul_nt(tape.constant(std::move(patches)),
                                      tape.param(ps_->at("obj.embed.w"))),
                       tape.param(ps_->at("obj.embed.b")));
  x = tape.add(x, tape.param(ps_->at("obj.pos")));

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < cfg_.blocks; ++i) {
    const std::string base = "obj.blk";
    Var q = tape.add_row(tape.matmul_nt(x, tape.param(ps_->at(blk(base, i, ".q.w")))),
                         tape.param(ps_->at(blk(base, i, ".q.b"))));
    Var k = linear_vec(tape, key_in, tape.param(ps_->at(blk(base, i, ".k.w"))),
                       tape.param(ps_->at(blk(base, i, ".k.b"))));
    Var v = linear_vec(tape, key_in, tape.param(ps_->at(blk(base, i, ".v.w"))),
                       tape.param(ps_->at(blk(base, i, ".v.b"))));
    Var logits = tape.matmul_nt(q, tape.reshape(k, {1, d}));
    if (cfg_.scale_logits) logits = tape.scale(logits, inv_sqrt_d);
    Var attn = tape.softmax_rows(logits);
    x = tape.add(x, tape.matmul(attn, tape.reshape(v, {1, d})));

    Var h = tape.gelu(tape.add_row(tape.matmul_nt(x, tape.param(ps_->at(blk(base, i, ".ffn1.w")))),
                                   tape.param(ps_->at(blk(base, i, ".ffn1.b")))));
    Var y = tape.add_row(tape.matmul_nt(h, tape.param(ps_->at(blk(base, i, ".ffn2.w")))),
                         tape.param(ps_->at(blk(base, i, ".ffn2.b"))));
    x = tape.add(x, y);
  }

  Var flat = tape.reshape(x, {1, n_tok * d});
  Var out = tape.add_row(tape.matmul_nt(flat, tape.param(ps_->at("obj.head.w"))),
                         tape.param(ps_->at("obj.head.b")));
  return tape.reshape(out, {cfg_.n_points, 4});
}

Var ObjectDenoiser::forward(Tape& tape, const VoxelGrid& grid, std::size_t t,
                            const std::vector<double>& cond) const {
  if (cond.size() != cfg_.cond_dim) throw ConfigError("object denoiser: cond dim mismatch");
  Tensor c = Tensor::zeros({cfg_.cond_dim});
  c.data.assign(cond.begin(), cond.end());
  Tensor te = Tensor::zeros({cfg_.cond_dim});
  te.data = timestep_embedding(t, cfg_.cond_dim);
  Var key = tape.add(tape.constant(std::move(c)), tape.constant(std::move(te)));
  return forward_tokens(tape, grid, key);
}

Var ObjectDenoiser::forward(Tape& tape, const VoxelGrid& grid, std::size_t t,
                            const std::vector<double>& f_b,
                            const std::vector<double>& f_t) const {
  Tensor fb = Tensor::zeros({f_b.size()});
  fb.data = f_b;
  Tensor ft = Tensor::zeros({f_t.size()});
  ft.data = f_t;
  Var joined = tape.concat(tape.constant(std::move(fb)), tape.constant(std::move(ft)));
  Var c = linear_vec(tape, joined, tape.param(ps_->at("obj.cond.w")),
                     tape.param(ps_->at("obj.cond.b")));
  Tensor te = Tensor::zeros({cfg_.cond_dim});
  te.data = timestep_embedding(t, cfg_.cond_dim);
  Var key = tape.add(c, tape.constant(std::move(te)));
  return forward_tokens(tape, grid, key);
}

Tensor ObjectDenoiser::infer(const VoxelGrid& grid, std::size_t t,
                             const std::vector<double>& cond) const {
  Tape tape;
  Var out = forward(tape, grid, t, cond);
  return tape.val(out);
}

std::vector<double> ObjectDenoiser::combine(const std::vector<double>& f_b,
                                            const std::vector<double>& f_t) const {
  return combine_conditions(f_b, f_t, ps_->at("obj.cond.w").value, ps_->at("obj.cond.b").value);
}

SceneDenoiser::SceneDenoiser(const SceneDenoiserConfig& cfg, ParamStore& ps)
    : cfg_(cfg), ps_(&ps) {
  if (cfg.base_width == 0 || cfg.depth == 0) throw ConfigError("scene denoiser: bad config");
  const std::size_t w0 = cfg.width(0);
  ps.add("scene.stem.w", {w0, 2, 3, 3}, InitKind::kUniformFanIn, 2 * 9);
  ps.add("scene.stem.b", {w0}, InitKind::kZero);
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    add_conv_block_params(ps, "scene.enc" + std::to_string(i), cfg.width(i), cfg.cond_dim);
    ps.add(blk("scene.down", i, ".w"), {cfg.width(i + 1), cfg.width(i), 3, 3},
           InitKind::kUniformFanIn, 9 * cfg.width(i));
    ps.add(blk("scene.down", i, ".b"), {cfg.width(i + 1)}, InitKind::kZero);
  }
  add_conv_block_params(ps, "scene.mid", cfg.width(cfg.depth), cfg.cond_dim);
  for (std::size_t i = cfg.depth; i-- > 0;) {
    ps.add(blk("scene.up", i, ".w"), {cfg.width(i), cfg.width(i + 1), 3, 3},
           InitKind::kUniformFanIn, 9 * cfg.width(i + 1));
    ps.add(blk("scene.up", i, ".b"), {cfg.width(i)}, InitKind::kZero);
    ps.add(blk("scene.fuse", i, ".w"), {cfg.width(i), 2 * cfg.width(i), 3, 3},
           InitKind::kUniformFanIn, 9 * 2 * cfg.width(i));
    ps.add(blk("scene.fuse", i, ".b"), {cfg.width(i)}, InitKind::kZero);
    add_conv_block_params(ps, "scene.dec" + std::to_string(i), cfg.width(i), cfg.cond_dim);
  }
  ps.add("scene.head.w", {2, w0, 3, 3}, InitKind::kZero);
  ps.add("scene.head.b", {2}, InitKind::kZero);
}

Var SceneDenoiser::forward(Tape& tape, Var img_t, std::size_t t,
                           const ControlVars* control) const {
  const Tensor& xv = tape.val(img_t);
  if (xv.shape.size() != 3 || xv.shape[0] != 2)
    throw ConfigError("scene denoiser: input must be [2,H,W]");
  const std::size_t div = std::size_t{1} << cfg_.depth;
  if (xv.shape[1] % div != 0 || xv.shape[2] % div != 0)
    throw ConfigError("scene denoiser: H and W must be divisible by 2^depth");
  if (control && control->skips.size() != cfg_.depth)
    throw ValidationError("scene denoiser: control scale count mismatch");

  Tensor te = Tensor::zeros({cfg_.cond_dim});
  te.data = timestep_embedding(t, cfg_.cond_dim);
  Var temb = tape.constant(std::move(te));

  Var x = tape.silu(tape.bias_ch(tape.conv2d(img_t, tape.param(ps_->at("scene.stem.w"))),
                                 tape.param(ps_->at("scene.stem.b"))));
  std::vector<Var> skips;
  for (std::size_t i = 0; i < cfg_.depth; ++i) {
    Var s = conv_block(tape, *ps_, "scene.enc" + std::to_string(i), x, temb);
    skips.push_back(s);
    x = tape.silu(tape.bias_ch(tape.conv2d(s, tape.param(ps_->at(blk("scene.down", i, ".w"))), 2),
                               tape.param(ps_->at(blk("scene.down", i, ".b")))));
  }
  Var m = conv_block(tape, *ps_, "scene.mid", x, temb);
  if (control) m = tape.add(m, control->mid);
  for (std::size_t i = cfg_.depth; i-- > 0;) {
    Var u = tape.silu(
        tape.bias_ch(tape.conv2d(tape.upsample2(m), tape.param(ps_->at(blk("scene.up", i, ".w")))),
                     tape.param(ps_->at(blk("scene.up", i, ".b")))));
    Var skip = skips[i];
    if (control) skip = tape.add(skip, control->skips[i]);
    Var f = tape.silu(tape.bias_ch(
        tape.conv2d(tape.concat_ch(u, skip), tape.param(ps_->at(blk("scene.fuse", i, ".w")))),
        tape.param(ps_->at(blk("scene.fuse", i, ".b")))));
    m = conv_block(tape, *ps_, "scene.dec" + std::to_string(i), f, temb);
  }
  return tape.bias_ch(tape.conv2d(m, tape.param(ps_->at("scene.head.w"))),
                      tape.param(ps_->at("scene.head.b")));
}

Tensor SceneDenoiser::infer(const Tensor& img_t, std::size_t t,
                            const ControlFeatures* control) const {
  Tape tape;
  ControlVars cv;
  const ControlVars* cvp = nullptr;
  if (control) {
    for (const Tensor& s : control->skips) cv.skips.push_back(tape.constant(s));
    cv.mid = tape.constant(control->mid);
    cvp = &cv;
  }
  Var out = forward(tape, tape.constant(img_t), t, cvp);
  return tape.val(out);
}

Controller::Controller(const SceneDenoiserConfig& cfg, ParamStore& ps) : cfg_(cfg), ps_(&ps) {
  const std::size_t w0 = cfg.width(0);
  ps.add("ctrl.stem_obj.w", {w0, 2, 3, 3}, InitKind::kUniformFanIn, 2 * 9);
  ps.add("ctrl.stem_obj.b", {w0}, InitKind::kZero);
  ps.add("ctrl.stem_img.w", {w0, 2, 3, 3}, InitKind::kUniformFanIn, 2 * 9);
  ps.add("ctrl.stem_img.b", {w0}, InitKind::kZero);
  ps.add("ctrl.zin_obj.w", {w0, w0, 1, 1}, InitKind::kZero);
  ps.add("ctrl.zin_obj.b", {w0}, InitKind::kZero);
  ps.add("ctrl.zin_img.w", {w0, w0, 1, 1}, InitKind::kZero);
  ps.add("ctrl.zin_img.b", {w0}, InitKind::kZero);
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    add_conv_block_params(ps, "ctrl.enc" + std::to_string(i), cfg.width(i), cfg.cond_dim);
    ps.add(blk("ctrl.down", i, ".w"), {cfg.width(i + 1), cfg.width(i), 3, 3},
           InitKind::kUniformFanIn, 9 * cfg.width(i));
    ps.add(blk("ctrl.down", i, ".b"), {cfg.width(i + 1)}, InitKind::kZero);
    ps.add(blk("ctrl.zout", i, ".w"), {cfg.width(i), cfg.width(i), 1, 1}, InitKind::kZero);
    ps.add(blk("ctrl.zout", i, ".b"), {cfg.width(i)}, InitKind::kZero);
  }
  add_conv_block_params(ps, "ctrl.mid", cfg.width(cfg.depth), cfg.cond_dim);
  ps.add("ctrl.zmid.w", {cfg.width(cfg.depth), cfg.width(cfg.depth), 1, 1}, InitKind::kZero);
  ps.add("ctrl.zmid.b", {cfg.width(cfg.depth)}, InitKind::kZero);
}

ControlVars Controller::forward(Tape& tape, Var obj_img, Var img_t, std::size_t t) const {
  const Tensor& ov = tape.val(obj_img);
  const Tensor& iv = tape.val(img_t);
  if (!ov.same_shape(iv)) throw ValidationError("controller: image shapes differ");

  Tensor te = Tensor::zeros({cfg_.cond_dim});
  te.data = timestep_embedding(t, cfg_.cond_dim);
  Var temb = tape.constant(std::move(te));

  Var a = tape.silu(tape.bias_ch(tape.conv2d(obj_img, tape.param(ps_->at("ctrl.stem_obj.w"))),
                                 tape.param(ps_->at("ctrl.stem_obj.b"))));
  Var b = tape.silu(tape.bias_ch(tape.conv2d(img_t, tape.param(ps_->at("ctrl.stem_img.w"))),
                                 tape.param(ps_->at("ctrl.stem_img.b"))));
  Var h = tape.add(zconv1x1(tape, *ps_, "ctrl.zin_obj", a), zconv1x1(tape, *ps_, "ctrl.zin_img", b));

  ControlVars out;
  for (std::size_t i = 0; i < cfg_.depth; ++i) {
    Var s = conv_block(tape, *ps_, "ctrl.enc" + std::to_string(i), h, temb);
    out.skips.push_back(zconv1x1(tape, *ps_, "ctrl.zout" + std::to_string(i), s));
    h = tape.silu(tape.bias_ch(tape.conv2d(s, tape.param(ps_->at(blk("ctrl.down", i, ".w"))), 2),
                               tape.param(ps_->at(blk("ctrl.down", i, ".b")))));
  }
  Var m = conv_block(tape, *ps_, "ctrl.mid", h, temb);
  out.mid = zconv1x1(tape, *ps_, "ctrl.zmid", m);
  return out;
}

ControlFeatures Controller::infer(const Tensor& obj_img, const Tensor& img_t,
                                  std::size_t t) const {
  Tape tape;
  ControlVars cv = forward(tape, tape.constant(obj_img), tape.constant(img_t), t);
  ControlFeatures out;
  for (Var s : cv.skips) out.skips.push_back(tape.val(s));
  out.mid = tape.val(cv.mid);
  return out;
}

Tensor image_to_tensor(const RangeImage& img) {
  if (img.channels != 2) throw ValidationError("image_to_tensor: expected 2 channels");
  Tensor t = Tensor::zeros({2, img.height, img.width});
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 2; ++c)
        t.data[(c * img.height + y) * img.width + x] =
            static_cast<double>(img.data[(y * img.width + x) * 2 + c]);
  return t;
}

RangeImage tensor_to_image(const Tensor& t) {
  if (t.shape.size() != 3 || t.shape[0] != 2)
    throw ValidationError("tensor_to_image: expected [2,H,W]");
  RangeImage img(t.shape[1], t.shape[2], 2);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 2; ++c)
        img.data[(y * img.width + x) * 2 + c] =
            static_cast<float>(t.data[(c * img.height + y) * img.width + x]);
  return img;
}

LossGraph object_loss_graph(const ObjectDenoiser& den, const Tensor& x0, std::size_t t,
                            const Tensor& eps, const std::vector<double>& f_b,
                            const std::vector<double>& f_t, const NoiseSchedule& sched) {
  const auto& cfg = den.config();
  if (x0.shape != std::vector<std::size_t>{cfg.n_points, 4})
    throw ValidationError("object_loss: x0 must be [N,4]");
  Tensor x_t = forward_sample(x0, t, eps, sched);
  PointCloud pc;
  pc.points.resize(cfg.n_points);
  for (std::size_t i = 0; i < cfg.n_points; ++i)
    pc.points[i] = Point{x_t.data[i * 4 + 0], x_t.data[i * 4 + 1], x_t.data[i * 4 + 2],
                         x_t.data[i * 4 + 3]};
  VoxelGrid grid = voxelize(pc, cfg.voxels);
  LossGraph g;
  g.tape = std::make_unique<Tape>();
  Var out = den.forward(*g.tape, grid, t, f_b, f_t);
  Var loss = g.tape->mse(out, g.tape->constant(eps));
  g.tape->backward(loss);
  g.loss = g.tape->val(loss).data[0];
  return g;
}

double object_loss(const ObjectDenoiser& den, const Tensor& x0, std::size_t t, const Tensor& eps,
                   const std::vector<double>& f_b, const std::vector<double>& f_t,
                   const NoiseSchedule& sched) {
  LossGraph g = object_loss_graph(den, x0, t, eps, f_b, f_t, sched);
  g.tape->add_param_grads(1.0);
  return g.loss;
}

LossGraph scene_loss_graph(const SceneDenoiser& den, const Controller& ctrl, const Tensor& img0,
                           const Tensor& obj_img, std::size_t t, const Tensor& eps,
                           const NoiseSchedule& sched) {
  if (!img0.same_shape(obj_img) || !img0.same_shape(eps))
    throw ValidationError("scene_loss: shape mismatch");
  Tensor x_t = forward_sample(img0, t, eps, sched);
  LossGraph g;
  g.tape = std::make_unique<Tape>();
  Var xtv = g.tape->constant(std::move(x_t));
  Var objv = g.tape->constant(obj_img);
  ControlVars control = ctrl.forward(*g.tape, objv, xtv, t);
  Var out = den.forward(*g.tape, xtv, t, &control);
  Var loss = g.tape->mse(out, g.tape->constant(eps));
  g.tape->backward(loss);
  g.loss = g.tape->val(loss).data[0];
  return g;
}

double scene_loss(const SceneDenoiser& den, const Controller& ctrl, const Tensor& img0,
                  const Tensor& obj_img, std::size_t t, const Tensor& eps,
                  const NoiseSchedule& sched) {
  LossGraph g = scene_loss_graph(den, ctrl, img0, obj_img, t, eps, sched);
  g.tape->add_param_grads(1.0);
  return g.loss;
}

AdamOptimizer::AdamOptimizer(ParamStore& ps, double lr) : ps_(&ps), lr_(lr) {
  for (const Param& p : ps.entries()) {
    m_.push_back(Tensor::zeros(p.value.shape));
    v_.push_back(Tensor::zeros(p.value.shape));
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& entries = ps_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Param& p = entries[i];
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      const double g = p.grad.data[j];
      m_[i].data[j] = beta1_ * m_[i].data[j] + (1.0 - beta1_) * g;
      v_[i].data[j] = beta2_ * v_[i].data[j] + (1.0 - beta2_) * g * g;
      const double mh = m_[i].data[j] / bc1;
      const double vh = v_[i].data[j] / bc2;
      p.value.data[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

namespace {

void run_items(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t nt = std::max<std::size_t>(1, std::min(threads, count));
  if (nt == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < nt; ++k)
    pool.emplace_back([&, k] {
      for (std::size_t i = k; i < count; i += nt) fn(i);
    });
  for (std::size_t i = 0; i < count; i += nt) fn(i);
  for (std::thread& th : pool) th.join();
}

std::string first_bad_gradient(const ParamStore& ps) {
  for (const Param& p : ps.entries())
    for (double g : p.grad.data)
      if (!std::isfinite(g)) return p.name;
  return "(none)";
}

void finish_training(const TrainConfig& cfg, const ParamStore& ps,
                     const std::vector<double>& losses, TrainResult& result) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  result.final_checkpoint = cfg.out_dir / "checkpoint_final.oldm";
  ps.save(result.final_checkpoint);
  std::ofstream log(cfg.out_dir / "loss_log.txt");
  log.precision(17);
  for (std::size_t i = 0; i < losses.size(); ++i) log << (i + 1) << ' ' << losses[i] << '\n';
}

template <typename MakeGraph>
TrainResult train_common(ParamStore& ps, std::size_t dataset_size, const TrainConfig& cfg,
                         const MakeGraph& make_graph) {
  if (dataset_size == 0) throw ValidationError("train: empty dataset");
  if (cfg.batch == 0 || cfg.steps == 0) throw ConfigError("train: steps and batch must be > 0");
  TrainResult result;
  AdamOptimizer opt(ps, cfg.lr);
  Rng rng(cfg.seed, 1);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    // All random draws happen here, in item order, before any parallel work.
    std::vector<std::function<LossGraph()>> jobs;
    jobs.reserve(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b)
      jobs.push_back(make_graph(rng.below(dataset_size), rng));
    std::vector<LossGraph> graphs(cfg.batch);
    run_items(cfg.batch, cfg.threads, [&](std::size_t i) { graphs[i] = jobs[i](); });
    ps.zero_grads();
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      graphs[b].tape->add_param_grads(1.0 / static_cast<double>(cfg.batch));
      loss += graphs[b].loss;
    }
    loss /= static_cast<double>(cfg.batch);
    if (!std::isfinite(loss))
      throw TrainingError("non-finite loss at step " + std::to_string(step) +
                          ", first non-finite gradient: " + first_bad_gradient(ps));
    opt.step();
    result.losses.push_back(loss);
    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 &&
        step != cfg.steps) {
      std::filesystem::create_directories(cfg.out_dir);
      ps.save(cfg.out_dir / ("checkpoint_" + std::to_string(step) + ".oldm"));
    }
  }
  finish_training(cfg, ps, result.losses, result);
  return result;
}

}  // namespace

TrainResult train_object(const ObjectDenoiser& den, ParamStore& ps,
                         const std::vector<ObjectSample>& data, const NoiseSchedule& sched,
                         const TrainConfig& cfg) {
  const auto& dcfg = den.config();
  return train_common(ps, data.size(), cfg, [&](std::size_t idx, Rng& rng) {
    const std::size_t t = 1 + rng.below(sched.t_steps);
    Tensor eps = Tensor::zeros({dcfg.n_points, 4});
    for (double& v : eps.data) v = rng.normal();
    const ObjectSample* sample = &data[idx];
    return [&den, sample, t, eps = std::move(eps), &sched]() {
      return object_loss_graph(den, sample->x0, t, eps, sample->f_b, sample->f_t, sched);
    };
  });
}

TrainResult train_scene(const SceneDenoiser& den, const Controller& ctrl, ParamStore& ps,
                        const std::vector<SceneSample>& data, const NoiseSchedule& sched,
                        const TrainConfig& cfg) {
  if (cfg.lambda_osa < 0.0) throw ConfigError("train_scene: lambda_osa must be >= 0");
  return train_common(ps, data.size(), cfg, [&, lambda = cfg.lambda_osa](std::size_t idx,
                                                                         Rng& rng) {
    const SceneSample* sample = &data[idx];
    const std::size_t t = 1 + rng.below(sched.t_steps);
    Tensor eps = Tensor::zeros(sample->img0.shape);
    for (double& v : eps.data) v = rng.normal();
    std::vector<Tensor> group_eps;
    if (lambda > 0.0) {
      group_eps.reserve(sample->masks.category_names.size());
      for (std::size_t g = 0; g < sample->masks.category_names.size(); ++g) {
        Tensor ge = Tensor::zeros(sample->img0.shape);
        for (double& v : ge.data) v = rng.normal();
        group_eps.push_back(std::move(ge));
      }
    }
    return [&den, &ctrl, sample, t, eps = std::move(eps), group_eps = std::move(group_eps),
            &sched, lambda]() {
      return combined_scene_loss_graph(den, ctrl, sample->img0, sample->obj_img, sample->masks, t,
                                       eps, group_eps, sched, lambda);
    };
  });
}

}  // namespace oldm
