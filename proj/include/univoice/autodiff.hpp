// univoice/autodiff.hpp
//
// Dense reverse-mode differentiation on an append-only tape. The op set is
// deliberately closed and small: affine layers, five activations,
// elementwise arithmetic, square, reductions and constant scaling. That is
// everything the shallow audio-visual model needs, and keeps every backward
// rule auditable by hand.

// Copyright 2026  UniVoice contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef UNIVOICE_AUTODIFF_HPP_
#define UNIVOICE_AUTODIFF_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "univoice/common.hpp"
#include "univoice/rng.hpp"

namespace uv::ad {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> vals)
      : shape(std::move(s)), v(std::move(vals)) {
    require(numel_of(shape) == v.size(), "tensor: shape/value size mismatch");
  }

  static std::size_t numel_of(const std::vector<std::size_t> &s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }
  static Tensor full(std::vector<std::size_t> s, double value) {
    std::size_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<double>(n, value));
  }
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  // Gaussian init scaled by 1/sqrt(fan_in); keyed so init is reproducible
  // per tensor regardless of construction order.
  static Tensor randn(std::vector<std::size_t> s, std::uint64_t key,
                      double scale) {
    std::size_t n = numel_of(s);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = scale * rng::gaussian(rng::key({key, i}));
    return Tensor(std::move(s), std::move(vals));
  }

  std::size_t numel() const { return v.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double &at(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols() + c]; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

enum class Act { tanh, relu, softplus, exp, log };

class Tape {
 public:
  using Var = int;

  Var input(Tensor t) { return push(Op::kInput, -1, -1, -1, std::move(t)); }

  // Marks a parameter leaf. Gradients from backward() are returned in
  // registration order.
  Var param(const Tensor &t, std::string name) {
    Var id = push(Op::kParam, -1, -1, -1, t);
    params_.push_back(id);
    param_names_.push_back(std::move(name));
    return id;
  }

  // out[r,c] = sum_i x[r,i] * w[i,c] + b[c]
  Var affine(Var x, Var w, Var b) {
    const Tensor &xv = val(x), &wv = val(w), &bv = val(b);
    require(xv.shape.size() == 2 && wv.shape.size() == 2,
            "affine: expects 2-d operands, got ", xv.shape_str(), " and ",
            wv.shape_str());
    require(xv.cols() == wv.rows(), "affine: shape mismatch ", xv.shape_str(),
            " vs ", wv.shape_str());
    require(bv.numel() == wv.cols(), "affine: bias length ", bv.numel(),
            " vs output width ", wv.cols());
    const std::size_t B = xv.rows(), I = xv.cols(), O = wv.cols();
    Tensor out = Tensor::zeros({B, O});
    for (std::size_t r = 0; r < B; ++r) {
      double *orow = &out.v[r * O];
      const double *xrow = &xv.v[r * I];
      for (std::size_t i = 0; i < I; ++i) {
        const double xv_ri = xrow[i];
        const double *wrow = &wv.v[i * O];
        for (std::size_t c = 0; c < O; ++c) orow[c] += xv_ri * wrow[c];
      }
      for (std::size_t c = 0; c < O; ++c) orow[c] += bv.v[c];
    }
    return push(Op::kAffine, x, w, b, std::move(out));
  }

  Var activation(Var x, Act kind) {
    switch (kind) {
      case Act::tanh: return tanh_(x);
      case Act::relu: return relu_(x);
      case Act::softplus: return softplus_(x);
      case Act::exp: return exp_(x);
      case Act::log: return log_(x);
    }
    fail("activation: unknown kind");
  }

  Var tanh_(Var x) { return unary(Op::kTanh, x, [](double a) { return std::tanh(a); }); }
  Var relu_(Var x) { return unary(Op::kRelu, x, [](double a) { return a > 0 ? a : 0.0; }); }
  Var softplus_(Var x) { return unary(Op::kSoftplus, x, [](double a) { return softplus(a); }); }
  Var exp_(Var x) { return unary(Op::kExp, x, [](double a) { return std::exp(a); }); }
  Var log_(Var x) {
    const Tensor &xv = val(x);
    for (double a : xv.v)
      require(a > 0.0, "log: non-positive entry ", a);
    return unary(Op::kLog, x, [](double a) { return std::log(a); });
  }

  Var add(Var a, Var b) { return binary(Op::kAdd, a, b, [](double x, double y) { return x + y; }); }
  Var sub(Var a, Var b) { return binary(Op::kSub, a, b, [](double x, double y) { return x - y; }); }
  Var mul(Var a, Var b) { return binary(Op::kMul, a, b, [](double x, double y) { return x * y; }); }
  Var div(Var a, Var b) { return binary(Op::kDiv, a, b, [](double x, double y) { return x / y; }); }
  Var square(Var x) { return unary(Op::kSquare, x, [](double a) { return a * a; }); }

  Var sum(Var x) {
    double s = 0.0;
    for (double a : val(x).v) s += a;
    return push(Op::kSum, x, -1, -1, Tensor::scalar(s));
  }
  Var mean(Var x) {
    double s = 0.0;
    const Tensor &xv = val(x);
    for (double a : xv.v) s += a;
    return push(Op::kMean, x, -1, -1, Tensor::scalar(s / xv.numel()));
  }
  Var scale(Var x, double c) {
    const Tensor &xv = val(x);
    Tensor out = xv;
    for (double &a : out.v) a *= c;
    Var id = push(Op::kScale, x, -1, -1, std::move(out));
    nodes_[id].scalar = c;
    return id;
  }

  const Tensor &val(Var id) const { return nodes_[id].val; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t num_params() const { return params_.size(); }
  const std::vector<std::string> &param_names() const { return param_names_; }

  // Reverse sweep from a scalar loss. Visits each node exactly once;
  // fan-out accumulates by addition; unused parameters get zero gradients.
  std::vector<Tensor> backward(Var loss) const {
    require(val(loss).numel() == 1, "backward: loss must be scalar, got ",
            val(loss).shape_str());
    std::vector<std::vector<double>> grads(nodes_.size());
    grads[loss] = {1.0};
    if (val(loss).shape != std::vector<std::size_t>{1})
      grads[loss].assign(val(loss).numel(), 1.0);
    for (int id = loss; id >= 0; --id) {
      if (grads[id].empty()) continue;
      accumulate(id, grads);
    }
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (Var p : params_) {
      if (grads[p].empty())
        out.push_back(Tensor::zeros(val(p).shape));
      else
        out.push_back(Tensor(val(p).shape, std::move(grads[p])));
    }
    return out;
  }

 private:
  enum class Op {
    kInput, kParam, kAffine, kTanh, kRelu, kSoftplus, kExp, kLog,
    kAdd, kSub, kMul, kDiv, kSquare, kSum, kMean, kScale
  };

  struct Node {
    Op op;
    int a, b, c;
    Tensor val;
    double scalar = 1.0;
  };

  Var push(Op op, int a, int b, int c, Tensor t) {
    require(all_finite(t.v.data(), t.v.size()),
            "non-finite values produced by tape op");
    nodes_.push_back(Node{op, a, b, c, std::move(t)});
    return static_cast<Var>(nodes_.size() - 1);
  }

  template <typename F>
  Var unary(Op op, Var x, F fn) {
    Tensor out = val(x);
    for (double &a : out.v) a = fn(a);
    return push(op, x, -1, -1, std::move(out));
  }

  template <typename F>
  Var binary(Op op, Var a, Var b, F fn) {
    const Tensor &av = val(a), &bv = val(b);
    require(av.shape == bv.shape, "elementwise op: shape mismatch ",
            av.shape_str(), " vs ", bv.shape_str());
    Tensor out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i)
      out.v[i] = fn(av.v[i], bv.v[i]);
    return push(op, a, b, -1, std::move(out));
  }

  static void axpy(std::vector<double> &acc, const std::vector<double> &inc) {
    if (acc.empty()) {
      acc = inc;
      return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += inc[i];
  }

  void add_grad(std::vector<std::vector<double>> &grads, int target,
                std::vector<double> g) const {
    if (target < 0) return;
    if (grads[target].empty())
      grads[target] = std::move(g);
    else
      axpy(grads[target], g);
  }

  void accumulate(int id, std::vector<std::vector<double>> &grads) const {
    const Node &n = nodes_[id];
    const std::vector<double> &gy = grads[id];
    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;
      case Op::kAffine: {
        const Tensor &xv = val(n.a), &wv = val(n.b);
        const std::size_t B = xv.rows(), I = xv.cols(), O = wv.cols();
        std::vector<double> gx(B * I, 0.0), gw(I * O, 0.0), gb(O, 0.0);
        for (std::size_t r = 0; r < B; ++r) {
          const double *gyr = &gy[r * O];
          const double *xr = &xv.v[r * I];
          for (std::size_t i = 0; i < I; ++i) {
            const double *wrow = &wv.v[i * O];
            double acc = 0.0;
            for (std::size_t c = 0; c < O; ++c) acc += gyr[c] * wrow[c];
            gx[r * I + i] = acc;
            double *gwrow = &gw[i * O];
            const double xri = xr[i];
            for (std::size_t c = 0; c < O; ++c) gwrow[c] += xri * gyr[c];
          }
          for (std::size_t c = 0; c < O; ++c) gb[c] += gyr[c];
        }
        add_grad(grads, n.a, std::move(gx));
        add_grad(grads, n.b, std::move(gw));
        add_grad(grads, n.c, std::move(gb));
        break;
      }
      case Op::kTanh: {
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) {
          const double y = n.val.v[i];
          gx[i] = gy[i] * (1.0 - y * y);
        }
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kRelu: {
        const Tensor &xv = val(n.a);
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i)
          gx[i] = xv.v[i] > 0 ? gy[i] : 0.0;
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kSoftplus: {
        const Tensor &xv = val(n.a);
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i)
          gx[i] = gy[i] * sigmoid(xv.v[i]);
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kExp: {
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * n.val.v[i];
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kLog: {
        const Tensor &xv = val(n.a);
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] / xv.v[i];
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kAdd: {
        add_grad(grads, n.a, gy);
        add_grad(grads, n.b, gy);
        break;
      }
      case Op::kSub: {
        add_grad(grads, n.a, gy);
        std::vector<double> gb(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] = -gy[i];
        add_grad(grads, n.b, std::move(gb));
        break;
      }
      case Op::kMul: {
        const Tensor &av = val(n.a), &bv = val(n.b);
        std::vector<double> ga(gy.size()), gb(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) {
          ga[i] = gy[i] * bv.v[i];
          gb[i] = gy[i] * av.v[i];
        }
        add_grad(grads, n.a, std::move(ga));
        add_grad(grads, n.b, std::move(gb));
        break;
      }
      case Op::kDiv: {
        const Tensor &av = val(n.a), &bv = val(n.b);
        std::vector<double> ga(gy.size()), gb(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) {
          ga[i] = gy[i] / bv.v[i];
          gb[i] = -gy[i] * av.v[i] / (bv.v[i] * bv.v[i]);
        }
        add_grad(grads, n.a, std::move(ga));
        add_grad(grads, n.b, std::move(gb));
        break;
      }
      case Op::kSquare: {
        const Tensor &xv = val(n.a);
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i)
          gx[i] = gy[i] * 2.0 * xv.v[i];
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kSum: {
        std::vector<double> gx(val(n.a).numel(), gy[0]);
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kMean: {
        const double g = gy[0] / val(n.a).numel();
        std::vector<double> gx(val(n.a).numel(), g);
        add_grad(grads, n.a, std::move(gx));
        break;
      }
      case Op::kScale: {
        std::vector<double> gx(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * n.scalar;
        add_grad(grads, n.a, std::move(gx));
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Var> params_;
  std::vector<std::string> param_names_;
};

// Analytic gradients vs central finite differences.
//
// `build` must construct the scalar loss on the given tape, registering each
// tensor in `params` exactly once and in order via Tape::param(). Returns the
// max over parameter entries of |analytic - fd| / max(1, |analytic|).
// A function whose value changes between identical evaluations (internal
// fresh randomness) is rejected.
inline double grad_check(const std::function<Tape::Var(Tape &)> &build,
                         const std::vector<Tensor *> &params, double h) {
  require(h > 0.0, "grad_check: step must be positive");
  auto eval = [&]() {
    Tape tape;
    Tape::Var loss = build(tape);
    require(tape.val(loss).numel() == 1, "grad_check: loss must be scalar");
    return tape.val(loss).v[0];
  };

  const double l1 = eval();
  const double l2 = eval();
  require(std::memcmp(&l1, &l2, sizeof(double)) == 0,
          "grad_check: function is non-deterministic");

  Tape tape;
  Tape::Var loss = build(tape);
  require(tape.num_params() == params.size(),
          "grad_check: builder registered ", tape.num_params(),
          " params, expected ", params.size());
  std::vector<Tensor> analytic = tape.backward(loss);

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor &p = *params[pi];
    require(analytic[pi].shape == p.shape,
            "grad_check: param ", pi, " shape mismatch");
    for (std::size_t e = 0; e < p.numel(); ++e) {
      const double saved = p.v[e];
      p.v[e] = saved + h;
      const double lp = eval();
      p.v[e] = saved - h;
      const double lm = eval();
      p.v[e] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double ga = analytic[pi].v[e];
      const double rel = std::fabs(ga - fd) / std::fmax(1.0, std::fabs(ga));
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace uv::ad

#endif  // UNIVOICE_AUTODIFF_HPP_
