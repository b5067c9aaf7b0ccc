// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/autodiff.hpp"

#include <cmath>

#include "oldm/errors.hpp"

namespace oldm {
namespace {

void expect(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

Var Tape::push(Tensor val, bool needs_grad, std::function<void()> back) {
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor v) { return push(std::move(v), false, nullptr); }

Var Tape::param(Param& p) {
  const auto it = param_cache_.find(&p);
  if (it != param_cache_.end()) return Var{it->second};
  Var v = push(p.value, true, nullptr);
  nodes_[v.id].bound = &p;
  param_cache_[&p] = v.id;
  return v;
}

Var Tape::add(Var a, Var b) { return add_scaled(a, b, 1.0, 1.0); }

Var Tape::add_scaled(Var a, Var b, double ca, double cb) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  expect(av.same_shape(bv), "add: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = ca * av.data[i] + cb * bv.data[i];
  const bool ng = wants(a) || wants(b);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, a, b, o, ca, cb] {
      const Tensor& g = nodes_[o.id].grad;
      if (wants(a)) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += ca * g.data[i];
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] += cb * g.data[i];
      }
    };
  }
  return o;
}

Var Tape::scale(Var a, double c) {
  Tensor out = val(a);
  for (double& v : out.data) v *= c;
  const bool ng = wants(a);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, a, o, c] {
      const Tensor& g = nodes_[o.id].grad;
      Tensor& ga = nodes_[a.id].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
    };
  }
  return o;
}

Var Tape::add_row(Var x, Var b) {
  const Tensor& xv = val(x);
  const Tensor& bv = val(b);
  expect(xv.shape.size() == 2 && bv.data.size() == xv.shape[1], "add_row: shape mismatch");
  const std::size_t m = xv.shape[0], n = xv.shape[1];
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += bv.data[j];
  const bool ng = wants(x) || wants(b);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, b, o, m, n] {
      const Tensor& g = nodes_[o.id].grad;
      if (wants(x)) {
        Tensor& gx = nodes_[x.id].grad;
        for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb.data[j] += g.data[i * n + j];
      }
    };
  }
  return o;
}

Var Tape::bias_ch(Var x, Var b) {
  const Tensor& xv = val(x);
  const Tensor& bv = val(b);
  expect(xv.shape.size() == 3 && bv.data.size() == xv.shape[0], "bias_ch: shape mismatch");
  const std::size_t c = xv.shape[0], hw = xv.shape[1] * xv.shape[2];
  Tensor out = xv;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double bchv = bv.data[ch];
    double* row = &out.data[ch * hw];
    for (std::size_t i = 0; i < hw; ++i) row[i] += bchv;
  }
  const bool ng = wants(x) || wants(b);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, b, o, c, hw] {
      const Tensor& g = nodes_[o.id].grad;
      if (wants(x)) {
        Tensor& gx = nodes_[x.id].grad;
        for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          const double* row = &g.data[ch * hw];
          for (std::size_t i = 0; i < hw; ++i) acc += row[i];
          gb.data[ch] += acc;
        }
      }
    };
  }
  return o;
}

Var Tape::concat(Var a, Var b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  expect(av.shape.size() == 1 && bv.shape.size() == 1, "concat: expects 1-D");
  Tensor out = Tensor::zeros({av.data.size() + bv.data.size()});
  std::copy(av.data.begin(), av.data.end(), out.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.data.size());
  const bool ng = wants(a) || wants(b);
  // Size must be read before push: push can grow nodes_ and invalidate av.
  const std::size_t na = av.data.size();
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, a, b, o, na] {
      const Tensor& g = nodes_[o.id].grad;
      if (wants(a)) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[na + i];
      }
    };
  }
  return o;
}

Var Tape::concat_ch(Var a, Var b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  expect(av.shape.size() == 3 && bv.shape.size() == 3 && av.shape[1] == bv.shape[1] &&
             av.shape[2] == bv.shape[2],
         "concat_ch: spatial dims differ");
  Tensor out = Tensor::zeros({av.shape[0] + bv.shape[0], av.shape[1], av.shape[2]});
  std::copy(av.data.begin(), av.data.end(), out.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.data.size());
  const bool ng = wants(a) || wants(b);
  const std::size_t na = av.data.size();
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, a, b, o, na] {
      const Tensor& g = nodes_[o.id].grad;
      if (wants(a)) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[na + i];
      }
    };
  }
  return o;
}

Var Tape::reshape(Var x, const std::vector<std::size_t>& shape) {
  const Tensor& xv = val(x);
  std::size_t total = 1;
  for (std::size_t d : shape) total *= d;
  expect(total == xv.data.size(), "reshape: element count mismatch");
  Tensor out = xv;
  out.shape = shape;
  const bool ng = wants(x);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, o] {
      const Tensor& g = nodes_[o.id].grad;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    };
  }
  return o;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  expect(av.shape.size() == 2 && bv.shape.size() == 2 && av.shape[1] == bv.shape[0],
         "matmul: inner dims differ");
  const std::size_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out.data[i * n];
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = av.data[i * k + kk];
      const double* brow = &bv.data[kk * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  const bool ng = wants(a) || wants(b);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, a, b, o, m, k, n] {
      const Tensor& g = nodes_[o.id].grad;
      const Tensor& av2 = nodes_[a.id].val;
      const Tensor& bv2 = nodes_[b.id].val;
      if (wants(a)) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            const double* grow = &g.data[i * n];
            const double* brow = &bv2.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga.data[i * k + kk] += acc;
          }
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t kk = 0; kk < k; ++kk)
          for (std::size_t i = 0; i < m; ++i) {
            const double aik = av2.data[i * k + kk];
            const double* grow = &g.data[i * n];
            double* gbrow = &gb.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
          }
      }
    };
  }
  return o;
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  expect(av.shape.size() == 2 && bv.shape.size() == 2 && av.shape[1] == bv.shape[1],
         "matmul_nt: inner dims differ");
  const std::size_t m = av.shape[0], k = av.shape[1], n = bv.shape[0];
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = &av.data[i * k];
    double* orow = &out.data[i * n];
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = &bv.data[j * k];
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      orow[j] = acc;
    }
  }
  const bool ng = wants(a) || wants(b);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, a, b, o, m, k, n] {
      const Tensor& g = nodes_[o.id].grad;
      const Tensor& av2 = nodes_[a.id].val;
      const Tensor& bv2 = nodes_[b.id].val;
      if (wants(a)) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < m; ++i) {
          double* garow = &ga.data[i * k];
          const double* grow = &g.data[i * n];
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = grow[j];
            const double* brow = &bv2.data[j * k];
            for (std::size_t kk = 0; kk < k; ++kk) garow[kk] += gij * brow[kk];
          }
        }
      }
      if (wants(b)) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t j = 0; j < n; ++j) {
          double* gbrow = &gb.data[j * k];
          for (std::size_t i = 0; i < m; ++i) {
            const double gij = g.data[i * n + j];
            const double* arow = &av2.data[i * k];
            for (std::size_t kk = 0; kk < k; ++kk) gbrow[kk] += gij * arow[kk];
          }
        }
      }
    };
  }
  return o;
}

Var Tape::conv2d(Var x, Var w, std::size_t stride) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  expect(xv.shape.size() == 3 && wv.shape.size() == 4 && wv.shape[1] == xv.shape[0],
         "conv2d: shape mismatch");
  expect(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
  const std::size_t ci = xv.shape[0], h = xv.shape[1], wd = xv.shape[2];
  const std::size_t co = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3];
  const std::size_t ph = kh / 2, pw = kw / 2;
  const std::size_t ho = (h + 2 * ph - kh) / stride + 1;
  const std::size_t wo = (wd + 2 * pw - kw) / stride + 1;
  Tensor out = Tensor::zeros({co, ho, wo});
  for (std::size_t oc = 0; oc < co; ++oc)
    for (std::size_t ic = 0; ic < ci; ++ic)
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wgt = wv.data[((oc * ci + ic) * kh + ky) * kw + kx];
          if (wgt == 0.0) continue;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(ph);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* xrow = &xv.data[(ic * h + static_cast<std::size_t>(iy)) * wd];
            double* orow = &out.data[(oc * ho + oy) * wo];
            for (std::size_t ox = 0; ox < wo; ++ox) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pw);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
              orow[ox] += wgt * xrow[ix];
            }
          }
        }
  const bool ng = wants(x) || wants(w);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, w, o, stride, ci, h, wd, co, kh, kw, ph, pw, ho, wo] {
      const Tensor& g = nodes_[o.id].grad;
      const Tensor& xv2 = nodes_[x.id].val;
      const Tensor& wv2 = nodes_[w.id].val;
      const bool gx_on = wants(x);
      const bool gw_on = wants(w);
      Tensor* gx = gx_on ? &nodes_[x.id].grad : nullptr;
      Tensor* gw = gw_on ? &nodes_[w.id].grad : nullptr;
      for (std::size_t oc = 0; oc < co; ++oc)
        for (std::size_t ic = 0; ic < ci; ++ic)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::size_t widx = ((oc * ci + ic) * kh + ky) * kw + kx;
              const double wgt = wv2.data[widx];
              double wacc = 0.0;
              for (std::size_t oy = 0; oy < ho; ++oy) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                          static_cast<std::ptrdiff_t>(ph);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                const std::size_t xbase = (ic * h + static_cast<std::size_t>(iy)) * wd;
                const double* grow = &g.data[(oc * ho + oy) * wo];
                for (std::size_t ox = 0; ox < wo; ++ox) {
                  const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                            static_cast<std::ptrdiff_t>(pw);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                  const double gv = grow[ox];
                  if (gx_on) gx->data[xbase + static_cast<std::size_t>(ix)] += wgt * gv;
                  if (gw_on) wacc += xv2.data[xbase + static_cast<std::size_t>(ix)] * gv;
                }
              }
              if (gw_on) gw->data[widx] += wacc;
            }
    };
  }
  return o;
}

Var Tape::upsample2(Var x) {
  const Tensor& xv = val(x);
  expect(xv.shape.size() == 3, "upsample2: expects [c,h,w]");
  const std::size_t c = xv.shape[0], h = xv.shape[1], wd = xv.shape[2];
  Tensor out = Tensor::zeros({c, 2 * h, 2 * wd});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < wd; ++xx) {
        const double v = xv.data[(ch * h + y) * wd + xx];
        const std::size_t base = (ch * 2 * h + 2 * y) * 2 * wd + 2 * xx;
        out.data[base] = v;
        out.data[base + 1] = v;
        out.data[base + 2 * wd] = v;
        out.data[base + 2 * wd + 1] = v;
      }
  const bool ng = wants(x);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, o, c, h, wd] {
      const Tensor& g = nodes_[o.id].grad;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < wd; ++xx) {
            const std::size_t base = (ch * 2 * h + 2 * y) * 2 * wd + 2 * xx;
            gx.data[(ch * h + y) * wd + xx] +=
                g.data[base] + g.data[base + 1] + g.data[base + 2 * wd] + g.data[base + 2 * wd + 1];
          }
    };
  }
  return o;
}

Var Tape::silu(Var x) {
  const Tensor& xv = val(x);
  Tensor out = xv;
  for (double& v : out.data) v = v / (1.0 + std::exp(-v));
  const bool ng = wants(x);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, o] {
      const Tensor& g = nodes_[o.id].grad;
      const Tensor& xv2 = nodes_[x.id].val;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-xv2.data[i]));
        gx.data[i] += g.data[i] * s * (1.0 + xv2.data[i] * (1.0 - s));
      }
    };
  }
  return o;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var Tape::gelu(Var x) {
  const Tensor& xv = val(x);
  Tensor out = xv;
  for (double& v : out.data) {
    const double u = kGeluC * (v + kGeluA * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  const bool ng = wants(x);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, o] {
      const Tensor& g = nodes_[o.id].grad;
      const Tensor& xv2 = nodes_[x.id].val;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double v = xv2.data[i];
        const double u = kGeluC * (v + kGeluA * v * v * v);
        const double t = std::tanh(u);
        const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        gx.data[i] += g.data[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
      }
    };
  }
  return o;
}

Var Tape::softmax_rows(Var x) {
  const Tensor& xv = val(x);
  expect(xv.shape.size() == 2, "softmax_rows: expects [m,n]");
  const std::size_t m = xv.shape[0], n = xv.shape[1];
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &out.data[i * n];
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
  }
  const bool ng = wants(x);
  Var o = push(std::move(out), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, x, o, m, n] {
      const Tensor& g = nodes_[o.id].grad;
      const Tensor& pv = nodes_[o.id].val;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < m; ++i) {
        const double* p = &pv.data[i * n];
        const double* grow = &g.data[i * n];
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += grow[j] * p[j];
        for (std::size_t j = 0; j < n; ++j) gx.data[i * n + j] += p[j] * (grow[j] - dot);
      }
    };
  }
  return o;
}

Var Tape::mse(Var pred, Var target) {
  const Tensor& pv = val(pred);
  const Tensor& tv = val(target);
  expect(pv.same_shape(tv), "mse: shape mismatch");
  const double inv = 1.0 / static_cast<double>(pv.data.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.data.size(); ++i) {
    const double d = pv.data[i] - tv.data[i];
    acc += d * d;
  }
  const bool ng = wants(pred) || wants(target);
  Var o = push(Tensor::scalar(acc * inv), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, pred, target, o, inv] {
      const double gs = nodes_[o.id].grad.data[0];
      const Tensor& pv2 = nodes_[pred.id].val;
      const Tensor& tv2 = nodes_[target.id].val;
      if (wants(pred)) {
        Tensor& gp = nodes_[pred.id].grad;
        for (std::size_t i = 0; i < gp.data.size(); ++i)
          gp.data[i] += gs * 2.0 * inv * (pv2.data[i] - tv2.data[i]);
      }
      if (wants(target)) {
        Tensor& gt = nodes_[target.id].grad;
        for (std::size_t i = 0; i < gt.data.size(); ++i)
          gt.data[i] -= gs * 2.0 * inv * (pv2.data[i] - tv2.data[i]);
      }
    };
  }
  return o;
}

Var Tape::weighted_sq_sum(Var pred, Var target, Var weight) {
  const Tensor& pv = val(pred);
  const Tensor& tv = val(target);
  const Tensor& wv = val(weight);
  expect(pv.same_shape(tv) && pv.same_shape(wv), "weighted_sq_sum: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.data.size(); ++i) {
    const double d = pv.data[i] - tv.data[i];
    acc += wv.data[i] * d * d;
  }
  const bool ng = wants(pred) || wants(target);
  Var o = push(Tensor::scalar(acc), ng, nullptr);
  if (ng) {
    nodes_[o.id].back = [this, pred, target, weight, o] {
      const double gs = nodes_[o.id].grad.data[0];
      const Tensor& pv2 = nodes_[pred.id].val;
      const Tensor& tv2 = nodes_[target.id].val;
      const Tensor& wv2 = nodes_[weight.id].val;
      if (wants(pred)) {
        Tensor& gp = nodes_[pred.id].grad;
        for (std::size_t i = 0; i < gp.data.size(); ++i)
          gp.data[i] += gs * 2.0 * wv2.data[i] * (pv2.data[i] - tv2.data[i]);
      }
      if (wants(target)) {
        Tensor& gt = nodes_[target.id].grad;
        for (std::size_t i = 0; i < gt.data.size(); ++i)
          gt.data[i] -= gs * 2.0 * wv2.data[i] * (pv2.data[i] - tv2.data[i]);
      }
    };
  }
  return o;
}

void Tape::backward(Var loss) {
  if (val(loss).data.size() != 1) throw ConfigError("backward: loss must be scalar");
  for (Node& n : nodes_) {
    if (n.needs_grad) n.grad = Tensor::zeros(n.val.shape);
  }
  nodes_[loss.id].grad = Tensor::scalar(1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.back) n.back();
  }
}

void Tape::add_param_grads(double scale) {
  for (Node& n : nodes_) {
    if (!n.bound) continue;
    if (n.grad.data.empty()) continue;
    for (std::size_t i = 0; i < n.grad.data.size(); ++i)
      n.bound->grad.data[i] += scale * n.grad.data[i];
  }
}

}  // namespace oldm
