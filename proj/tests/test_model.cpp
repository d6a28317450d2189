// tests/test_model.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "univoice/model.hpp"

using namespace uv;
using model::LatentGaussian;
using model::ModelConfig;
using model::VisualFrame;
using model::WaeParams;

namespace {

ModelConfig toy_config() {
  ModelConfig c;
  c.freq_bins = 1;
  c.latent_dim = 1;
  c.lip_dim = 1;
  c.id_dim = 1;
  c.hidden = 1;
  return c;
}

ModelConfig small_config() {
  ModelConfig c;
  c.freq_bins = 6;
  c.latent_dim = 3;
  c.lip_dim = 4;
  c.id_dim = 2;
  c.hidden = 5;
  return c;
}

// empirical 1-D transport cost between sorted samples, summed over dims
double sampled_w2(const LatentGaussian &q, const LatentGaussian &p,
                  std::size_t n_samples, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t d = 0; d < q.dim(); ++d) {
    std::vector<double> xs(n_samples), ys(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
      xs[i] = q.mean[d] + q.std_dev[d] * rng::gaussian(rng::key({seed, 1, d, i}));
      ys[i] = p.mean[d] + p.std_dev[d] * rng::gaussian(rng::key({seed, 2, d, i}));
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i)
      acc += (xs[i] - ys[i]) * (xs[i] - ys[i]);
    total += acc / static_cast<double>(n_samples);
  }
  return total;
}

}  // namespace

TEST_CASE("encode with zero weights returns the head biases", "[model]") {
  const ModelConfig c = small_config();
  WaeParams p = WaeParams::zeros(c);
  p.enc_mu_b.v = {0.3, -0.1, 0.7};
  p.enc_sd_b.v = {0.2, 0.0, -1.0};
  const std::vector<double> power(c.freq_bins, 0.5);
  const VisualFrame vis{{1.0, 2.0, 3.0, 4.0}, {5.0, 6.0}};
  const LatentGaussian g = model::encode(power, vis, p, c);
  for (std::size_t l = 0; l < 3; ++l) {
    REQUIRE(g.mean[l] == p.enc_mu_b.v[l]);
    REQUIRE_THAT(g.std_dev[l],
                 Catch::Matchers::WithinRel(
                     softplus(p.enc_sd_b.v[l]) + c.latent_std_floor, 1e-12));
  }
}

TEST_CASE("encode matches a hand-computed scalar forward pass", "[model]") {
  const ModelConfig c = toy_config();
  WaeParams p = WaeParams::zeros(c);
  p.enc_audio_w.v = {0.5};
  p.enc_audio_b.v = {0.1};
  p.enc_vis_w.v = {0.4, 0.6};  // rows: lip, identity
  p.enc_vis_b.v = {0.05};
  p.enc_mu_aw.v = {0.7};
  p.enc_mu_vw.v = {-0.3};
  p.enc_mu_b.v = {0.2};
  p.enc_sd_aw.v = {0.2};
  p.enc_sd_vw.v = {0.1};
  p.enc_sd_b.v = {-0.4};

  const std::vector<double> power = {4.0};
  const VisualFrame vis{{0.3}, {-0.2}};
  const LatentGaussian g = model::encode(power, vis, p, c);

  const double ha = std::tanh(0.5 * std::log(4.0 + c.variance_floor) + 0.1);
  const double hv = std::max(0.0, 0.4 * 0.3 + 0.6 * -0.2 + 0.05);
  const double mu = 0.7 * ha - 0.3 * hv + 0.2;
  const double sd = softplus(0.2 * ha + 0.1 * hv - 0.4) + c.latent_std_floor;
  REQUIRE_THAT(g.mean[0], Catch::Matchers::WithinRel(mu, 1e-14));
  REQUIRE_THAT(g.std_dev[0], Catch::Matchers::WithinRel(sd, 1e-14));
}

TEST_CASE("encode validates input", "[model]") {
  const ModelConfig c = small_config();
  const WaeParams p = WaeParams::zeros(c);
  const VisualFrame vis{{1, 2, 3, 4}, {5, 6}};
  REQUIRE_THROWS_WITH(model::encode(std::vector<double>(5, 0.1), vis, p, c),
                      Catch::Matchers::ContainsSubstring("freq_bins"));
  std::vector<double> neg(c.freq_bins, 0.1);
  neg[2] = -1.0;
  REQUIRE_THROWS_WITH(model::encode(neg, vis, p, c),
                      Catch::Matchers::ContainsSubstring(">= 0"));
  const VisualFrame bad{{1, 2, 3}, {5, 6}};
  REQUIRE_THROWS(model::encode(std::vector<double>(6, 0.1), bad, p, c));
}

TEST_CASE("prior without visual input is the standard normal", "[model]") {
  ModelConfig c = small_config();
  c.use_visual = false;
  WaeParams p = WaeParams::init(c, 99);
  const VisualFrame any{{9, 9, 9, 9}, {9, 9}};
  const LatentGaussian g = model::prior(any, p, c);
  for (std::size_t l = 0; l < c.latent_dim; ++l) {
    REQUIRE(g.mean[l] == 0.0);
    REQUIRE(g.std_dev[l] == 1.0);
  }
}

TEST_CASE("prior matches a hand-computed scalar forward pass", "[model]") {
  const ModelConfig c = toy_config();
  WaeParams p = WaeParams::zeros(c);
  p.pri_vis_w.v = {0.8, -0.5};
  p.pri_vis_b.v = {0.1};
  p.pri_mu_w.v = {1.5};
  p.pri_mu_b.v = {-0.2};
  p.pri_sd_w.v = {0.5};
  p.pri_sd_b.v = {0.3};
  const VisualFrame vis{{0.6}, {0.4}};
  const double hv = std::max(0.0, 0.8 * 0.6 - 0.5 * 0.4 + 0.1);
  const LatentGaussian g = model::prior(vis, p, c);
  REQUIRE_THAT(g.mean[0], Catch::Matchers::WithinRel(1.5 * hv - 0.2, 1e-14));
  REQUIRE_THAT(g.std_dev[0],
               Catch::Matchers::WithinRel(
                   softplus(0.5 * hv + 0.3) + c.latent_std_floor, 1e-14));
}

TEST_CASE("reparameterize", "[model]") {
  const LatentGaussian g{{1.0, -2.0}, {2.0, 0.5}};
  REQUIRE(model::reparameterize(g, std::vector<double>{0.0, 0.0}) ==
          std::vector<double>{1.0, -2.0});
  const auto z = model::reparameterize(g, std::vector<double>{0.5, 2.0});
  REQUIRE(z[0] == 2.0);
  REQUIRE(z[1] == -1.0);
  REQUIRE_THROWS_WITH(model::reparameterize(g, std::vector<double>{1.0}),
                      Catch::Matchers::ContainsSubstring("eps length"));
}

TEST_CASE("decode with zero weights is constant softplus(bias)+floor",
          "[model]") {
  const ModelConfig c = small_config();
  WaeParams p = WaeParams::zeros(c);
  p.dec_out_b.v.assign(c.freq_bins, -1.3);
  const VisualFrame vis{{1, 2, 3, 4}, {5, 6}};
  const auto v1 = model::decode(std::vector<double>(c.latent_dim, 0.0), vis, p, c);
  const auto v2 = model::decode(std::vector<double>(c.latent_dim, 3.0), vis, p, c);
  for (std::size_t f = 0; f < c.freq_bins; ++f) {
    REQUIRE_THAT(v1[f], Catch::Matchers::WithinRel(
                            softplus(-1.3) + c.variance_floor, 1e-14));
    REQUIRE(v1[f] == v2[f]);
  }
  REQUIRE_THROWS_WITH(
      model::decode(std::vector<double>(c.latent_dim + 1, 0.0), vis, p, c),
      Catch::Matchers::ContainsSubstring("latent dim"));
}

TEST_CASE("decode output stays above the variance floor", "[model][property]") {
  const ModelConfig c = small_config();
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const WaeParams p = WaeParams::init(c, trial);
    std::vector<double> z(c.latent_dim);
    for (std::size_t l = 0; l < z.size(); ++l)
      z[l] = 3.0 * rng::gaussian(rng::key({trial, 7, l}));
    VisualFrame vis;
    vis.lip.resize(c.lip_dim);
    vis.identity.resize(c.id_dim);
    for (std::size_t d = 0; d < c.lip_dim; ++d)
      vis.lip[d] = rng::gaussian(rng::key({trial, 8, d}));
    for (std::size_t d = 0; d < c.id_dim; ++d)
      vis.identity[d] = rng::gaussian(rng::key({trial, 9, d}));
    const auto var = model::decode(z, vis, p, c);
    for (double v : var) {
      REQUIRE(v >= c.variance_floor);
      REQUIRE(v > 0.0);
    }
  }
}

TEST_CASE("is_nll hand cases", "[model]") {
  REQUIRE(model::is_nll(std::vector<double>{1.0}, std::vector<double>{1.0}) == 1.0);
  REQUIRE(model::is_nll(std::vector<double>{2.0}, std::vector<double>{1.0}) == 2.0);
  REQUIRE_THAT(model::is_nll(std::vector<double>{1.0}, std::vector<double>{2.0}),
               Catch::Matchers::WithinRel(0.5 + std::log(2.0), 1e-14));
  REQUIRE_THROWS_WITH(
      model::is_nll(std::vector<double>{1.0}, std::vector<double>{0.0}),
      Catch::Matchers::ContainsSubstring("positive"));
}

TEST_CASE("is_nll scale identity", "[model][property]") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    std::vector<double> p(8), v(8);
    for (std::size_t i = 0; i < 8; ++i) {
      p[i] = std::fabs(rng::gaussian(rng::key({trial, 1, i})));
      v[i] = 0.1 + std::fabs(rng::gaussian(rng::key({trial, 2, i})));
    }
    const double c = 2.5;
    std::vector<double> cp(8);
    for (std::size_t i = 0; i < 8; ++i) cp[i] = c * p[i];
    double delta = 0.0;
    for (std::size_t i = 0; i < 8; ++i) delta += (c - 1.0) * p[i] / v[i];
    REQUIRE_THAT(model::is_nll(cp, v) - model::is_nll(p, v),
                 Catch::Matchers::WithinRel(delta, 1e-10));
  }
}

TEST_CASE("w2 hand cases", "[model]") {
  const LatentGaussian std2{{0.0, 0.0}, {1.0, 1.0}};
  REQUIRE(model::w2_diag_gauss(std2, std2) == 0.0);
  REQUIRE(model::w2_diag_gauss({{1.0, 2.0}, {1.0, 1.0}}, std2) == 5.0);
  REQUIRE(model::w2_diag_gauss({{1.0, 2.0}, {2.0, 3.0}}, std2) == 10.0);
  REQUIRE_THROWS(model::w2_diag_gauss({{1.0}, {1.0}}, std2));
}

TEST_CASE("w2 matches the sorted-sample transport cost", "[model][oracle]") {
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    LatentGaussian q, p;
    const std::size_t dim = 1 + trial;
    for (std::size_t d = 0; d < dim; ++d) {
      q.mean.push_back(2.0 * rng::gaussian(rng::key({trial, 10, d})));
      q.std_dev.push_back(0.3 + rng::u01(rng::key({trial, 11, d})));
      p.mean.push_back(2.0 * rng::gaussian(rng::key({trial, 12, d})));
      p.std_dev.push_back(0.3 + rng::u01(rng::key({trial, 13, d})));
    }
    const double closed = model::w2_diag_gauss(q, p);
    const double sampled = sampled_w2(q, p, 100000, rng::key({trial, 14}));
    REQUIRE_THAT(sampled, Catch::Matchers::WithinRel(closed, 0.03));
  }
}

TEST_CASE("kl hand cases", "[model]") {
  const LatentGaussian stdn{{0.0}, {1.0}};
  REQUIRE(model::kl_diag_gauss(stdn, stdn) == 0.0);
  REQUIRE_THAT(model::kl_diag_gauss({{0.0}, {2.0}}, stdn),
               Catch::Matchers::WithinRel(std::log(0.5) + 2.0 - 0.5, 1e-12));
  REQUIRE_THAT(model::kl_diag_gauss({{1.0}, {1.0}}, stdn),
               Catch::Matchers::WithinAbs(0.5, 1e-15));
}

TEST_CASE("divergence properties on random pairs", "[model][property]") {
  bool saw_asymmetry = false;
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    LatentGaussian q, p;
    for (std::size_t d = 0; d < 4; ++d) {
      q.mean.push_back(rng::gaussian(rng::key({trial, 20, d})));
      q.std_dev.push_back(0.2 + rng::u01(rng::key({trial, 21, d})));
      p.mean.push_back(rng::gaussian(rng::key({trial, 22, d})));
      p.std_dev.push_back(0.2 + rng::u01(rng::key({trial, 23, d})));
    }
    const double w_qp = model::w2_diag_gauss(q, p);
    const double k_qp = model::kl_diag_gauss(q, p);
    REQUIRE(w_qp >= 0.0);
    REQUIRE(k_qp >= 0.0);
    REQUIRE(w_qp == model::w2_diag_gauss(p, q));
    if (std::fabs(k_qp - model::kl_diag_gauss(p, q)) > 1e-9)
      saw_asymmetry = true;
    REQUIRE(model::w2_diag_gauss(q, q) == 0.0);
    REQUIRE_THAT(model::kl_diag_gauss(q, q),
                 Catch::Matchers::WithinAbs(0.0, 1e-15));
    REQUIRE(w_qp > 0.0);  // random pairs differ almost surely
  }
  REQUIRE(saw_asymmetry);
}

namespace {

// composes the per-frame reference ops into the training objective
double composed_loss(const std::vector<std::vector<double>> &power,
                     const std::vector<VisualFrame> &vis,
                     const std::vector<std::vector<double>> &eps,
                     const WaeParams &p, const ModelConfig &c) {
  double total = 0.0;
  for (std::size_t i = 0; i < power.size(); ++i) {
    const LatentGaussian q = model::encode(power[i], vis[i], p, c);
    const LatentGaussian pr = model::prior(vis[i], p, c);
    const auto z = model::reparameterize(q, eps[i]);
    const auto var = model::decode(z, vis[i], p, c);
    const double reg = c.regularizer == model::Regularizer::wasserstein
                           ? model::w2_diag_gauss(q, pr)
                           : model::kl_diag_gauss(q, pr);
    total += model::is_nll(power[i], var) + c.lambda * reg;
  }
  return total / static_cast<double>(power.size());
}

struct ToyBatch {
  std::vector<std::vector<double>> power;
  std::vector<VisualFrame> vis;
  std::vector<std::vector<double>> eps;
};

ToyBatch toy_batch(const ModelConfig &c, std::uint64_t seed, std::size_t frames) {
  ToyBatch b;
  for (std::size_t i = 0; i < frames; ++i) {
    std::vector<double> pw(c.freq_bins);
    for (std::size_t f = 0; f < pw.size(); ++f)
      pw[f] = std::fabs(rng::gaussian(rng::key({seed, 1, i, f})));
    VisualFrame vf;
    vf.lip.resize(c.lip_dim);
    vf.identity.resize(c.id_dim);
    for (std::size_t d = 0; d < c.lip_dim; ++d)
      vf.lip[d] = rng::gaussian(rng::key({seed, 2, i, d}));
    for (std::size_t d = 0; d < c.id_dim; ++d)
      vf.identity[d] = rng::gaussian(rng::key({seed, 3, i, d}));
    std::vector<double> e(c.latent_dim);
    for (std::size_t l = 0; l < e.size(); ++l)
      e[l] = rng::gaussian(rng::key({seed, 4, i, l}));
    b.power.push_back(std::move(pw));
    b.vis.push_back(std::move(vf));
    b.eps.push_back(std::move(e));
  }
  return b;
}

}  // namespace

TEST_CASE("tape loss equals the composition of the per-frame ops", "[model]") {
  for (auto regularizer :
       {model::Regularizer::wasserstein, model::Regularizer::kl}) {
    ModelConfig c = small_config();
    c.regularizer = regularizer;
    c.lambda = 0.1;
    const WaeParams p = WaeParams::init(c, 5);
    const ToyBatch b = toy_batch(c, 77, 2);
    const auto batch = model::make_batch(b.power, b.vis, b.eps, c);
    const double tape = model::loss_value(batch, p, c);
    const double composed = composed_loss(b.power, b.vis, b.eps, p, c);
    REQUIRE_THAT(tape, Catch::Matchers::WithinRel(composed, 1e-12));
  }
}

TEST_CASE("loss with lambda 0 is exactly the mean reconstruction NLL",
          "[model]") {
  ModelConfig c = small_config();
  c.lambda = 0.0;
  const WaeParams p = WaeParams::init(c, 6);
  const ToyBatch b = toy_batch(c, 78, 3);
  const auto batch = model::make_batch(b.power, b.vis, b.eps, c);
  double nll = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto q = model::encode(b.power[i], b.vis[i], p, c);
    const auto z = model::reparameterize(q, b.eps[i]);
    nll += model::is_nll(b.power[i], model::decode(z, b.vis[i], p, c));
  }
  REQUIRE_THAT(model::loss_value(batch, p, c),
               Catch::Matchers::WithinRel(nll / 3.0, 1e-12));
}

TEST_CASE("regularizer contributes zero when encoder equals prior", "[model]") {
  ModelConfig c = small_config();
  WaeParams p = WaeParams::zeros(c);
  // zero weights: encoder outputs its head biases, prior its own; make them equal
  p.pri_mu_b.v = p.enc_mu_b.v = {0.4, -0.2, 0.1};
  p.pri_sd_b.v = p.enc_sd_b.v = {0.3, 0.3, 0.3};
  const ToyBatch b = toy_batch(c, 79, 2);
  const auto batch = model::make_batch(b.power, b.vis, b.eps, c);
  ModelConfig c0 = c;
  c0.lambda = 0.0;
  REQUIRE(model::loss_value(batch, p, c) == model::loss_value(batch, p, c0));
}

TEST_CASE("loss ignores visual input when use_visual is false", "[model]") {
  ModelConfig c = small_config();
  c.use_visual = false;
  const WaeParams p = WaeParams::init(c, 7);
  ToyBatch b1 = toy_batch(c, 80, 2);
  ToyBatch b2 = b1;
  for (auto &vf : b2.vis) {
    for (auto &x : vf.lip) x += 100.0;
    for (auto &x : vf.identity) x -= 50.0;
  }
  const double l1 =
      model::loss_value(model::make_batch(b1.power, b1.vis, b1.eps, c), p, c);
  const double l2 =
      model::loss_value(model::make_batch(b2.power, b2.vis, b2.eps, c), p, c);
  REQUIRE(l1 == l2);  // bit-identical
}

TEST_CASE("loss gradients match finite differences", "[model][oracle]") {
  for (auto regularizer :
       {model::Regularizer::wasserstein, model::Regularizer::kl}) {
    ModelConfig c;
    c.freq_bins = 4;
    c.latent_dim = 2;
    c.lip_dim = 3;
    c.id_dim = 2;
    c.hidden = 4;
    c.lambda = 0.1;
    c.regularizer = regularizer;
    WaeParams p = WaeParams::init(c, 8);
    const ToyBatch b = toy_batch(c, 81, 2);
    const auto batch = model::make_batch(b.power, b.vis, b.eps, c);
    auto build = [&](ad::Tape &t) { return model::build_loss(t, batch, p, c); };
    const double err = ad::grad_check(build, p.all(), 1e-5);
    INFO((regularizer == model::Regularizer::wasserstein ? "wasserstein" : "kl"));
    REQUIRE(err < 1e-5);
  }
}

TEST_CASE("empty batch is rejected", "[model]") {
  const ModelConfig c = small_config();
  REQUIRE_THROWS_WITH(model::make_batch({}, {}, {}, c),
                      Catch::Matchers::ContainsSubstring("non-empty"));
}

TEST_CASE("default configuration lands at the expected parameter count",
          "[model]") {
  const ModelConfig c;  // paper-scale defaults
  REQUIRE(WaeParams::zeros(c).count() == 2281601);
}
