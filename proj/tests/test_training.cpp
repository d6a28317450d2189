// tests/test_training.cpp

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

#include <cmath>
#include <fstream>

#include "support.hpp"
#include "univoice/training.hpp"

using namespace uv;
using test_support::TempDir;
using training::AdamState;
using training::Checkpoint;
using training::TrainConfig;

namespace {

model::ModelConfig tiny_model() {
  model::ModelConfig c;
  c.freq_bins = 9;
  c.latent_dim = 2;
  c.lip_dim = 3;
  c.id_dim = 2;
  c.hidden = 8;
  return c;
}

std::vector<data::Utterance> in_memory_dataset(const model::ModelConfig &c,
                                               std::size_t n_utts,
                                               std::size_t frames,
                                               std::uint64_t seed,
                                               bool silence = false) {
  std::vector<data::Utterance> out;
  for (std::size_t u = 0; u < n_utts; ++u) {
    data::Utterance utt;
    utt.id = "utt" + std::to_string(u);
    utt.split = "train";
    utt.vis.identity.resize(c.id_dim);
    for (std::size_t d = 0; d < c.id_dim; ++d)
      utt.vis.identity[d] = rng::gaussian(rng::key({seed, u, 1, d}));
    for (std::size_t n = 0; n < frames; ++n) {
      std::vector<double> power(c.freq_bins, 0.0);
      if (!silence) {
        const double level = 0.5 + 0.4 * rng::gaussian(rng::key({seed, u, 2, n}));
        for (std::size_t f = 0; f < c.freq_bins; ++f) {
          const double g = rng::gaussian(rng::key({seed, u, 3, n, f}));
          power[f] = std::fabs(level) * g * g;
        }
      }
      utt.power.push_back(std::move(power));
      std::vector<double> lip(c.lip_dim);
      for (std::size_t d = 0; d < c.lip_dim; ++d)
        lip[d] = rng::gaussian(rng::key({seed, u, 4, n, d}));
      utt.vis.lip.push_back(std::move(lip));
    }
    out.push_back(std::move(utt));
  }
  return out;
}

std::string slurp(const data::fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void spit(const data::fs::path &p, const std::string &bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("adam leaves parameters unchanged for zero gradients", "[training]") {
  const model::ModelConfig c = tiny_model();
  model::WaeParams p = model::WaeParams::init(c, 1);
  const model::WaeParams before = p;
  AdamState st = AdamState::init(p);
  std::vector<ad::Tensor> grads;
  for (const ad::Tensor *t : p.all()) grads.push_back(ad::Tensor::zeros(t->shape));
  training::adam_step(p, grads, st, TrainConfig{});
  auto a = p.all();
  auto b = before.all();
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i]->v == b[i]->v);
}

TEST_CASE("adam first step has magnitude close to the learning rate",
          "[training]") {
  const model::ModelConfig c = tiny_model();
  model::WaeParams p = model::WaeParams::zeros(c);
  const model::WaeParams before = p;
  AdamState st = AdamState::init(p);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  std::vector<ad::Tensor> grads;
  for (const ad::Tensor *t : p.all()) {
    ad::Tensor g = ad::Tensor::zeros(t->shape);
    for (std::size_t e = 0; e < g.numel(); ++e)
      g.v[e] = 0.5 + rng::u01(rng::key({3, e}));
    grads.push_back(std::move(g));
  }
  training::adam_step(p, grads, st, tc);
  auto a = p.all();
  auto b = before.all();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t e = 0; e < a[i]->numel(); ++e) {
      const double g = grads[i].v[e];
      const double expect = tc.learning_rate * g / (std::fabs(g) + tc.adam_eps);
      REQUIRE_THAT(b[i]->v[e] - a[i]->v[e],
                   Catch::Matchers::WithinRel(expect, 1e-12));
      REQUIRE_THAT(std::fabs(a[i]->v[e] - b[i]->v[e]),
                   Catch::Matchers::WithinRel(tc.learning_rate, 1e-4));
    }
}

TEST_CASE("adam matches a hand-unrolled recursion for constant gradients",
          "[training]") {
  model::ModelConfig c = tiny_model();
  model::WaeParams p = model::WaeParams::zeros(c);
  AdamState st = AdamState::init(p);
  TrainConfig tc;
  tc.learning_rate = 0.01;
  const double g = 0.7;
  std::vector<ad::Tensor> grads;
  for (const ad::Tensor *t : p.all())
    grads.push_back(ad::Tensor::full(t->shape, g));

  training::adam_step(p, grads, st, tc);
  training::adam_step(p, grads, st, tc);

  // hand unroll: with constant g, bias correction gives mhat = g, vhat = g^2
  double ref = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = tc.beta1 * m + (1 - tc.beta1) * g;
    v = tc.beta2 * v + (1 - tc.beta2) * g * g;
    const double mhat = m / (1 - std::pow(tc.beta1, t));
    const double vhat = v / (1 - std::pow(tc.beta2, t));
    ref -= tc.learning_rate * mhat / (std::sqrt(vhat) + tc.adam_eps);
  }
  for (const ad::Tensor *t : p.all())
    for (double x : t->v) REQUIRE_THAT(x, Catch::Matchers::WithinRel(ref, 1e-12));
}

TEST_CASE("adam updates each entry independently", "[training]") {
  // scalar recomputation entry by entry must match the block update
  const model::ModelConfig c = tiny_model();
  model::WaeParams p = model::WaeParams::init(c, 4);
  const model::WaeParams before = p;
  AdamState st = AdamState::init(p);
  TrainConfig tc;
  std::vector<ad::Tensor> grads;
  for (const ad::Tensor *t : p.all()) {
    ad::Tensor g = ad::Tensor::zeros(t->shape);
    for (std::size_t e = 0; e < g.numel(); ++e)
      g.v[e] = rng::gaussian(rng::key({5, e}));
    grads.push_back(std::move(g));
  }
  training::adam_step(p, grads, st, tc);
  auto a = p.all();
  auto b = before.all();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t e = 0; e < a[i]->numel(); ++e) {
      const double g = grads[i].v[e];
      const double m = (1 - tc.beta1) * g;
      const double v = (1 - tc.beta2) * g * g;
      const double expect =
          b[i]->v[e] - tc.learning_rate * (m / (1 - tc.beta1)) /
                           (std::sqrt(v / (1 - tc.beta2)) + tc.adam_eps);
      REQUIRE(a[i]->v[e] == expect);
    }
}

TEST_CASE("adam rejects mismatched gradient shapes", "[training]") {
  const model::ModelConfig c = tiny_model();
  model::WaeParams p = model::WaeParams::init(c, 6);
  AdamState st = AdamState::init(p);
  std::vector<ad::Tensor> grads;
  for (const ad::Tensor *t : p.all()) grads.push_back(ad::Tensor::zeros(t->shape));
  grads[0] = ad::Tensor::zeros({1, 1});
  REQUIRE_THROWS_WITH(training::adam_step(p, grads, st, TrainConfig{}),
                      Catch::Matchers::ContainsSubstring("shape"));
}

TEST_CASE("checkpoint round trip is bit-exact", "[training]") {
  TempDir dir("ckpt");
  const model::ModelConfig mc = tiny_model();
  const model::WaeParams p = model::WaeParams::init(mc, 7);
  Checkpoint c = Checkpoint::from_params(mc, {256, 64}, TrainConfig{}, p, 12,
                                         -34.5625, 0xdeadbeefULL);
  training::save_checkpoint(c, dir.path() / "c.uvck");
  const Checkpoint r = training::load_checkpoint(dir.path() / "c.uvck");
  REQUIRE(r == c);
  training::save_checkpoint(r, dir.path() / "c2.uvck");
  REQUIRE(slurp(dir.path() / "c.uvck") == slurp(dir.path() / "c2.uvck"));
}

TEST_CASE("checkpoint loader reports distinct failures", "[training]") {
  TempDir dir("ckptbad");
  const model::ModelConfig mc = tiny_model();
  Checkpoint c = Checkpoint::from_params(mc, {256, 64}, TrainConfig{},
                                         model::WaeParams::init(mc, 8), 1, 0.0, 0);
  training::save_checkpoint(c, dir.path() / "ok.uvck");
  const std::string bytes = slurp(dir.path() / "ok.uvck");

  std::string magic = bytes;
  magic.replace(0, 4, "XXXX");
  spit(dir.path() / "magic.uvck", magic);
  REQUIRE_THROWS_WITH(training::load_checkpoint(dir.path() / "magic.uvck"),
                      Catch::Matchers::ContainsSubstring("bad magic"));

  std::string version = bytes;
  version[4] = 42;
  spit(dir.path() / "version.uvck", version);
  REQUIRE_THROWS_WITH(training::load_checkpoint(dir.path() / "version.uvck"),
                      Catch::Matchers::ContainsSubstring("version"));

  std::string truncated = bytes.substr(0, bytes.size() - 1);
  spit(dir.path() / "trunc.uvck", truncated);
  REQUIRE_THROWS_WITH(training::load_checkpoint(dir.path() / "trunc.uvck"),
                      Catch::Matchers::ContainsSubstring("truncated"));

  std::string trailing = bytes + "!";
  spit(dir.path() / "trail.uvck", trailing);
  REQUIRE_THROWS_WITH(training::load_checkpoint(dir.path() / "trail.uvck"),
                      Catch::Matchers::ContainsSubstring("trailing garbage"));
}

TEST_CASE("training is bit-deterministic given the seed", "[training]") {
  TempDir dir("det");
  const model::ModelConfig mc = tiny_model();
  const auto dataset = in_memory_dataset(mc, 4, 12, 11);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 16;
  tc.max_epochs = 3;
  tc.patience = 3;
  tc.seed = 5;
  const auto r1 = training::train(dataset, mc, tc, {16, 4});
  const auto r2 = training::train(dataset, mc, tc, {16, 4});
  REQUIRE(r1.checkpoint == r2.checkpoint);
  REQUIRE(r1.train_loss == r2.train_loss);
  training::save_checkpoint(r1.checkpoint, dir.path() / "a.uvck");
  training::save_checkpoint(r2.checkpoint, dir.path() / "b.uvck");
  REQUIRE(slurp(dir.path() / "a.uvck") == slurp(dir.path() / "b.uvck"));
}

TEST_CASE("training reduces the loss on a learnable dataset", "[training]") {
  const model::ModelConfig mc = tiny_model();
  const auto dataset = in_memory_dataset(mc, 4, 25, 13);
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.batch_size = 32;
  tc.max_epochs = 20;
  tc.patience = 20;
  tc.seed = 1;
  const auto res = training::train(dataset, mc, tc, {16, 4});
  REQUIRE(res.train_loss.back() < res.train_loss.front());
}

TEST_CASE("early stopping fires on a plateau of silence", "[training]") {
  const model::ModelConfig mc = tiny_model();
  const auto dataset = in_memory_dataset(mc, 4, 10, 17, /*silence=*/true);
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.batch_size = 16;
  tc.max_epochs = 40;
  tc.patience = 1;
  tc.min_delta_rel = 0.01;
  tc.seed = 2;
  const auto res = training::train(dataset, mc, tc, {16, 4});
  REQUIRE(res.epochs_run < tc.max_epochs);
}

TEST_CASE("stored validation loss is reproducible from the checkpoint",
          "[training]") {
  const model::ModelConfig mc = tiny_model();
  const auto dataset = in_memory_dataset(mc, 5, 15, 19);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 16;
  tc.max_epochs = 4;
  tc.patience = 4;
  tc.seed = 3;
  const auto res = training::train(dataset, mc, tc, {16, 4});
  const double recomputed = training::validation_loss(res.checkpoint, dataset);
  REQUIRE_THAT(recomputed,
               Catch::Matchers::WithinRel(res.checkpoint.best_val_loss, 1e-6));
}

TEST_CASE("training aborts with a batch diagnostic on non-finite loss",
          "[training]") {
  const model::ModelConfig mc = tiny_model();
  auto dataset = in_memory_dataset(mc, 4, 10, 23);
  // power large enough that the per-frame likelihood overflows to infinity
  for (auto &utt : dataset)
    for (auto &frame : utt.power)
      for (double &p : frame) p = 1e308;
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 5;
  tc.patience = 5;
  tc.seed = 4;
  REQUIRE_THROWS_WITH(training::train(dataset, mc, tc, {16, 4}),
                      Catch::Matchers::ContainsSubstring("epoch 0") &&
                          Catch::Matchers::ContainsSubstring("batch 0"));
}

TEST_CASE("training requires at least two utterances", "[training]") {
  const model::ModelConfig mc = tiny_model();
  const auto dataset = in_memory_dataset(mc, 1, 10, 29);
  REQUIRE_THROWS_WITH(training::train(dataset, mc, TrainConfig{}, {16, 4}),
                      Catch::Matchers::ContainsSubstring("2 utterances"));
  REQUIRE_THROWS_WITH(
      training::train({}, mc, TrainConfig{}, {16, 4}),
      Catch::Matchers::ContainsSubstring("empty dataset"));
}

TEST_CASE("latent activity reports per-dimension stats", "[training]") {
  const model::ModelConfig mc = tiny_model();
  const auto dataset = in_memory_dataset(mc, 3, 10, 31);

  // random-init model: shape contract only, mean_reg must be >= 0
  Checkpoint random_ckpt = Checkpoint::from_params(
      mc, {16, 4}, TrainConfig{}, model::WaeParams::init(mc, 9), 0, 0.0, 0);
  const auto rep = training::latent_activity(random_ckpt, dataset);
  REQUIRE(rep.mean_reg.size() == mc.latent_dim);
  REQUIRE(rep.var_of_mean.size() == mc.latent_dim);
  for (double r : rep.mean_reg) REQUIRE(r >= 0.0);

  // encoder forced to equal the prior: zero regularizer, all dims collapsed
  model::WaeParams forced = model::WaeParams::zeros(mc);
  forced.pri_mu_b.v = forced.enc_mu_b.v = {0.2, -0.3};
  forced.pri_sd_b.v = forced.enc_sd_b.v = {0.1, 0.1};
  Checkpoint forced_ckpt =
      Checkpoint::from_params(mc, {16, 4}, TrainConfig{}, forced, 0, 0.0, 0);
  const auto rep2 = training::latent_activity(forced_ckpt, dataset);
  for (std::size_t l = 0; l < mc.latent_dim; ++l) {
    REQUIRE(rep2.mean_reg[l] == 0.0);
    REQUIRE(rep2.collapsed[l]);
  }
  REQUIRE(rep2.n_collapsed == mc.latent_dim);
}
