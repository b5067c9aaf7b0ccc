// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "oldm/params.hpp"
#include "oldm/tensor.hpp"

namespace oldm {

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode tape over dense double tensors. One tape per forward pass;
// ops record a backward closure and gradients flow in reverse creation
// order. A tape is single-threaded; parallel batch items each build their
// own tape against read-only parameters and the caller reduces gradients
// in a fixed order afterwards.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor v);
  // Leaf bound to a ParamStore entry; cached so repeated use of the same
  // parameter shares one node (and one gradient slot).
  Var param(Param& p);

  Var add(Var a, Var b);
  Var add_scaled(Var a, Var b, double ca, double cb);
  Var scale(Var a, double c);
  Var add_row(Var x, Var b);   // [m,n] + [n], broadcast over rows
  Var bias_ch(Var x, Var b);   // [c,h,w] + [c]
  Var concat(Var a, Var b);    // 1-D
  Var concat_ch(Var a, Var b); // [c1,h,w] ++ [c2,h,w]
  Var reshape(Var x, const std::vector<std::size_t>& shape);

  Var matmul(Var a, Var b);     // [m,k] x [k,n]
  Var matmul_nt(Var a, Var b);  // [m,k] x [n,k]^T -> [m,n]

  // 2-D convolution over [c,h,w] with kernel [co,ci,kh,kw], zero padding
  // kh/2 x kw/2. Stride 1 preserves spatial dims; stride 2 halves even dims.
  Var conv2d(Var x, Var w, std::size_t stride = 1);
  Var upsample2(Var x);  // nearest neighbor, [c,h,w] -> [c,2h,2w]

  Var silu(Var x);
  Var gelu(Var x);  // tanh approximation
  Var softmax_rows(Var x);

  Var mse(Var pred, Var target);                         // mean over entries
  Var weighted_sq_sum(Var pred, Var target, Var weight); // sum w (p-t)^2

  void backward(Var loss);

  const Tensor& val(Var v) const { return nodes_[v.id].val; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  // Adds each bound parameter node's gradient, times scale, into the
  // ParamStore gradient slots. Call after backward, from one thread.
  void add_param_grads(double scale = 1.0);

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
    Param* bound = nullptr;
    std::function<void()> back;
  };

  Var push(Tensor val, bool needs_grad, std::function<void()> back);
  bool wants(Var v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> param_cache_;
};

}  // namespace oldm
