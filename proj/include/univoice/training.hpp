// univoice/training.hpp
//
// Unsupervised training on clean speech plus aligned visual features: Adam
// with bias correction, frame-level batching with a seeded shuffle,
// utterance-level validation split, early stopping, and a binary checkpoint
// format ("UVCK"). Epsilon draws for the reparameterization come from a
// counter-based generator keyed by (seed, epoch, batch, frame), so training
// is bit-reproducible from the seed.

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

#ifndef UNIVOICE_TRAINING_HPP_
#define UNIVOICE_TRAINING_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "univoice/autodiff.hpp"
#include "univoice/common.hpp"
#include "univoice/data.hpp"
#include "univoice/dsp.hpp"
#include "univoice/model.hpp"
#include "univoice/rng.hpp"

namespace uv::training {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double validation_fraction = 0.1;
  // an epoch "improves" when val < best - min_delta_rel * max(1, |best|)
  double min_delta_rel = 1e-3;

  void validate() const {
    require(learning_rate > 0.0, "train config: learning_rate must be > 0");
    require(batch_size >= 1, "train config: batch_size must be >= 1");
    require(max_epochs >= 1, "train config: max_epochs must be >= 1");
    require(patience >= 1, "train config: patience must be >= 1");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
            "train config: betas must be in (0,1)");
    require(adam_eps > 0.0, "train config: adam_eps must be > 0");
    require(validation_fraction > 0.0 && validation_fraction < 1.0,
            "train config: validation_fraction must be in (0,1)");
    require(min_delta_rel >= 0.0, "train config: min_delta_rel must be >= 0");
  }
  bool operator==(const TrainConfig &) const = default;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::uint64_t t = 0;

  static AdamState init(const model::WaeParams &p) {
    AdamState s;
    for (const ad::Tensor *w : p.all()) {
      s.m.push_back(ad::Tensor::zeros(w->shape));
      s.v.push_back(ad::Tensor::zeros(w->shape));
    }
    return s;
  }
};

inline void adam_step(model::WaeParams &params,
                      const std::vector<ad::Tensor> &grads, AdamState &state,
                      const TrainConfig &cfg) {
  auto tensors = params.all();
  require(grads.size() == tensors.size(), "adam: gradient count ", grads.size(),
          " vs parameter count ", tensors.size());
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    ad::Tensor &p = *tensors[i];
    const ad::Tensor &g = grads[i];
    require(g.shape == p.shape, "adam: gradient shape ", g.shape_str(),
            " vs parameter ", p.shape_str());
    ad::Tensor &m = state.m[i];
    ad::Tensor &v = state.v[i];
    for (std::size_t e = 0; e < p.numel(); ++e) {
      m.v[e] = cfg.beta1 * m.v[e] + (1.0 - cfg.beta1) * g.v[e];
      v.v[e] = cfg.beta2 * v.v[e] + (1.0 - cfg.beta2) * g.v[e] * g.v[e];
      const double mhat = m.v[e] / bc1;
      const double vhat = v.v[e] / bc2;
      p.v[e] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

// ---------------------------------------------------------------------------
// checkpoint ("UVCK" v1): magic + version u32 LE + u64 LE JSON header length
// + JSON header + raw little-endian f32 parameter payload

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelConfig model_cfg;
  dsp::StftConfig stft;
  TrainConfig train_cfg;
  std::vector<float> payload;  // concatenated parameters, WaeParams order
  std::uint32_t epoch = 0;
  double best_val_loss = 0.0;
  std::uint64_t rng_digest = 0;

  static Checkpoint from_params(const model::ModelConfig &mc,
                                const dsp::StftConfig &sc,
                                const TrainConfig &tc,
                                const model::WaeParams &params,
                                std::uint32_t epoch, double best_val_loss,
                                std::uint64_t rng_digest) {
    Checkpoint c;
    c.model_cfg = mc;
    c.stft = sc;
    c.train_cfg = tc;
    c.epoch = epoch;
    c.best_val_loss = best_val_loss;
    c.rng_digest = rng_digest;
    for (const ad::Tensor *t : params.all())
      for (double x : t->v) c.payload.push_back(static_cast<float>(x));
    return c;
  }

  model::WaeParams params() const {
    model::WaeParams p = model::WaeParams::zeros(model_cfg);
    std::size_t off = 0;
    for (ad::Tensor *t : p.all()) {
      require(off + t->numel() <= payload.size(),
              "checkpoint: payload too small for model config");
      for (std::size_t e = 0; e < t->numel(); ++e)
        t->v[e] = static_cast<double>(payload[off + e]);
      off += t->numel();
    }
    require(off == payload.size(), "checkpoint: payload size mismatch");
    return p;
  }

  bool operator==(const Checkpoint &) const = default;
};

namespace detail {

inline std::string reg_name(model::Regularizer r) {
  return r == model::Regularizer::wasserstein ? "wasserstein" : "kl";
}
inline model::Regularizer reg_from_name(const std::string &s) {
  if (s == "wasserstein") return model::Regularizer::wasserstein;
  if (s == "kl") return model::Regularizer::kl;
  fail("unknown regularizer '", s, "' (expected wasserstein|kl)");
}

inline nlohmann::ordered_json model_cfg_json(const model::ModelConfig &c) {
  return {{"freq_bins", c.freq_bins},
          {"latent_dim", c.latent_dim},
          {"lip_dim", c.lip_dim},
          {"id_dim", c.id_dim},
          {"hidden", c.hidden},
          {"lambda", c.lambda},
          {"regularizer", reg_name(c.regularizer)},
          {"use_visual", c.use_visual},
          {"latent_std_floor", c.latent_std_floor},
          {"variance_floor", c.variance_floor}};
}

inline model::ModelConfig model_cfg_from_json(const nlohmann::json &j) {
  model::ModelConfig c;
  c.freq_bins = j.at("freq_bins").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.lip_dim = j.at("lip_dim").get<std::size_t>();
  c.id_dim = j.at("id_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.regularizer = reg_from_name(j.at("regularizer").get<std::string>());
  c.use_visual = j.at("use_visual").get<bool>();
  c.latent_std_floor = j.at("latent_std_floor").get<double>();
  c.variance_floor = j.at("variance_floor").get<double>();
  c.validate();
  return c;
}

inline nlohmann::ordered_json train_cfg_json(const TrainConfig &c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"validation_fraction", c.validation_fraction},
          {"min_delta_rel", c.min_delta_rel}};
}

inline TrainConfig train_cfg_from_json(const nlohmann::json &j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.min_delta_rel = j.at("min_delta_rel").get<double>();
  c.validate();
  return c;
}

inline nlohmann::ordered_json stft_cfg_json(const dsp::StftConfig &c) {
  return {{"fft_size", c.fft_size}, {"hop", c.hop}};
}
inline dsp::StftConfig stft_cfg_from_json(const nlohmann::json &j) {
  dsp::StftConfig c;
  c.fft_size = j.at("fft_size").get<std::size_t>();
  c.hop = j.at("hop").get<std::size_t>();
  c.validate();
  return c;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint &c, const data::fs::path &path) {
  model::WaeParams shapes = model::WaeParams::zeros(c.model_cfg);
  nlohmann::ordered_json ptable = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  {
    auto tensors = shapes.all();
    const auto &names = model::WaeParams::names();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      ptable.push_back({{"name", names[i]},
                        {"shape", tensors[i]->shape},
                        {"offset", offset}});
      offset += tensors[i]->numel() * 4;
    }
  }
  require(offset == c.payload.size() * 4,
          "checkpoint: payload inconsistent with model config");

  nlohmann::ordered_json header = {
      {"model", detail::model_cfg_json(c.model_cfg)},
      {"stft", detail::stft_cfg_json(c.stft)},
      {"train", detail::train_cfg_json(c.train_cfg)},
      {"epoch", c.epoch},
      {"best_val_loss", c.best_val_loss},
      {"rng_digest", detail::hex64(c.rng_digest)},
      {"params", ptable}};
  const std::string hs = header.dump();

  std::string out = "UVCK";
  data::detail::put_u32(out, kCheckpointVersion);
  data::detail::put_u64(out, hs.size());
  out += hs;
  for (float f : c.payload) data::detail::put_f32(out, f);
  data::detail::write_file(path, out);
}

inline Checkpoint load_checkpoint(const data::fs::path &path) {
  const std::string bytes = data::detail::read_file(path);
  data::detail::Reader r(bytes, "checkpoint");
  require(r.raw(4) == "UVCK", "checkpoint: bad magic");
  require(r.u32() == kCheckpointVersion, "checkpoint: unsupported version");
  const std::uint64_t hlen = r.u64();
  const std::string hs = r.raw(hlen);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception &e) {
    fail("checkpoint: invalid header JSON: ", e.what());
  }
  Checkpoint c;
  c.model_cfg = detail::model_cfg_from_json(header.at("model"));
  c.stft = detail::stft_cfg_from_json(header.at("stft"));
  c.train_cfg = detail::train_cfg_from_json(header.at("train"));
  c.epoch = header.at("epoch").get<std::uint32_t>();
  c.best_val_loss = header.at("best_val_loss").get<double>();
  c.rng_digest =
      std::stoull(header.at("rng_digest").get<std::string>(), nullptr, 16);

  model::WaeParams shapes = model::WaeParams::zeros(c.model_cfg);
  std::size_t expect = 0;
  for (const ad::Tensor *t : shapes.all()) expect += t->numel();
  require(r.remaining() >= expect * 4, "checkpoint: truncated payload");
  require(r.remaining() == expect * 4, "checkpoint: trailing garbage");
  c.payload.resize(expect);
  for (std::size_t i = 0; i < expect; ++i) c.payload[i] = r.f32();
  return c;
}

// ---------------------------------------------------------------------------
// training loop

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> train_loss;  // [0] = pre-training evaluation
  std::vector<double> val_loss;    // same indexing
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

namespace detail {

struct FrameRef {
  std::size_t utt;
  std::size_t frame;
  std::size_t id;  // stable index used to key epsilon draws
};

// round the parameters through f32 (what a checkpoint stores), so stored
// validation losses are exactly reproducible from the file
inline model::WaeParams quantized(const model::WaeParams &p,
                                  const model::ModelConfig &mc) {
  model::WaeParams q = model::WaeParams::zeros(mc);
  auto src = p.all();
  auto dst = q.all();
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t e = 0; e < src[i]->numel(); ++e)
      dst[i]->v[e] =
          static_cast<double>(static_cast<float>(src[i]->v[e]));
  return q;
}

inline model::FrameBatch gather_batch(
    const std::vector<data::Utterance> &data,
    const std::vector<FrameRef> &refs, std::size_t lo, std::size_t hi,
    const model::ModelConfig &mc, std::uint64_t eps_key) {
  std::vector<std::vector<double>> power;
  std::vector<model::VisualFrame> vis;
  std::vector<std::vector<double>> eps;
  power.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    const FrameRef &fr = refs[i];
    power.push_back(data[fr.utt].power[fr.frame]);
    vis.push_back(data[fr.utt].vis.frame(fr.frame));
    std::vector<double> e(mc.latent_dim);
    for (std::size_t l = 0; l < mc.latent_dim; ++l)
      e[l] = rng::gaussian(rng::key({eps_key, fr.id, l}));
    eps.push_back(std::move(e));
  }
  return model::make_batch(power, vis, eps, mc);
}

inline double eval_loss(const std::vector<data::Utterance> &data,
                        const std::vector<FrameRef> &refs,
                        const model::WaeParams &params,
                        const model::ModelConfig &mc, std::size_t batch_size,
                        std::uint64_t eps_key, const std::string &label) {
  double total = 0.0;
  std::size_t count = 0;
  std::size_t batch_index = 0;
  for (std::size_t lo = 0; lo < refs.size(); lo += batch_size) {
    const std::size_t hi = std::min(refs.size(), lo + batch_size);
    const model::FrameBatch b = gather_batch(data, refs, lo, hi, mc, eps_key);
    double loss = 0.0;
    try {
      loss = model::loss_value(b, params, mc);
    } catch (const Error &e) {
      fail("train: aborted in ", label, " batch ", batch_index, ": ", e.what());
    }
    require(std::isfinite(loss), "train: NaN loss in ", label, " batch ",
            batch_index);
    total += loss * static_cast<double>(hi - lo);
    count += hi - lo;
    ++batch_index;
  }
  return total / static_cast<double>(count);
}

struct Split {
  std::vector<FrameRef> train;
  std::vector<FrameRef> val;
};

inline Split split_dataset(const std::vector<data::Utterance> &data,
                           const TrainConfig &tc) {
  require(!data.empty(), "train: empty dataset");
  require(data.size() >= 2,
          "train: need at least 2 utterances for a validation split");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::Sequence seq(rng::key({tc.seed, 0x53504c54ULL}));
  seq.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(
      std::lround(tc.validation_fraction * static_cast<double>(data.size())));
  n_val = std::max<std::size_t>(1, std::min(n_val, data.size() - 1));

  std::vector<bool> is_val(data.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;

  Split s;
  std::size_t train_id = 0, val_id = 0;
  for (std::size_t u = 0; u < data.size(); ++u) {
    for (std::size_t n = 0; n < data[u].power.size(); ++n) {
      if (is_val[u])
        s.val.push_back({u, n, val_id++});
      else
        s.train.push_back({u, n, train_id++});
    }
  }
  require(!s.train.empty() && !s.val.empty(),
          "train: a split ended up empty (not enough frames)");
  return s;
}

}  // namespace detail

// Recomputes the validation loss a checkpoint claims, from its stored
// parameters and seed-derived split/noise. Matches Checkpoint::best_val_loss.
inline double validation_loss(const Checkpoint &ckpt,
                              const std::vector<data::Utterance> &data) {
  const detail::Split split = detail::split_dataset(data, ckpt.train_cfg);
  return detail::eval_loss(data, split.val, ckpt.params(), ckpt.model_cfg,
                           ckpt.train_cfg.batch_size,
                           rng::key({ckpt.train_cfg.seed, 0x56455053ULL}),
                           "validation");
}

inline TrainResult train(const std::vector<data::Utterance> &data,
                         const model::ModelConfig &mc, const TrainConfig &tc,
                         const dsp::StftConfig &stft_cfg) {
  mc.validate();
  tc.validate();
  const detail::Split split = detail::split_dataset(data, tc);
  const std::uint64_t val_eps_key = rng::key({tc.seed, 0x56455053ULL});

  model::WaeParams params = model::WaeParams::init(mc, rng::key({tc.seed, 0x494e4954ULL}));
  AdamState adam = AdamState::init(params);

  TrainResult res;
  {
    const model::WaeParams q = detail::quantized(params, mc);
    res.train_loss.push_back(detail::eval_loss(
        data, split.train, q, mc, tc.batch_size,
        rng::key({tc.seed, 0x54455630ULL}), "epoch 0"));
    res.val_loss.push_back(detail::eval_loss(data, split.val, q, mc,
                                             tc.batch_size, val_eps_key,
                                             "epoch 0 validation"));
  }

  double best_val = res.val_loss[0];
  std::vector<float> best_payload =
      Checkpoint::from_params(mc, stft_cfg, tc, detail::quantized(params, mc),
                              0, 0.0, 0)
          .payload;
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;

  std::vector<detail::FrameRef> order = split.train;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng::Sequence shuffler(rng::key({tc.seed, 0x53485546ULL, epoch}));
    shuffler.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += tc.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + tc.batch_size);
      const model::FrameBatch batch = detail::gather_batch(
          data, order, lo, hi, mc,
          rng::key({tc.seed, 0x455053ULL, epoch, batch_index}));
      double loss = 0.0;
      std::vector<ad::Tensor> grads;
      try {
        std::tie(loss, grads) = model::loss_and_grads(batch, params, mc);
      } catch (const Error &e) {
        fail("train: aborted in epoch ", epoch, " batch ", batch_index, ": ",
             e.what());
      }
      require(std::isfinite(loss), "train: NaN loss in epoch ", epoch,
              " batch ", batch_index);
      adam_step(params, grads, adam, tc);
      epoch_loss += loss * static_cast<double>(hi - lo);
      seen += hi - lo;
      ++batch_index;
    }
    res.train_loss.push_back(epoch_loss / static_cast<double>(seen));

    const model::WaeParams q = detail::quantized(params, mc);
    const double val =
        detail::eval_loss(data, split.val, q, mc, tc.batch_size, val_eps_key,
                          cat("epoch ", epoch, " validation"));
    res.val_loss.push_back(val);
    res.epochs_run = epoch;

    const double threshold =
        best_val - tc.min_delta_rel * std::fmax(1.0, std::fabs(best_val));
    if (val < threshold) {
      best_val = val;
      best_epoch = epoch;
      since_best = 0;
      best_payload =
          Checkpoint::from_params(mc, stft_cfg, tc, q, 0, 0.0, 0).payload;
    } else {
      ++since_best;
      if (since_best >= tc.patience) break;
    }
  }

  res.best_epoch = best_epoch;
  res.checkpoint.model_cfg = mc;
  res.checkpoint.stft = stft_cfg;
  res.checkpoint.train_cfg = tc;
  res.checkpoint.payload = std::move(best_payload);
  res.checkpoint.epoch = static_cast<std::uint32_t>(best_epoch);
  res.checkpoint.best_val_loss = best_val;
  res.checkpoint.rng_digest = rng::key({tc.seed, 0x444947ULL, best_epoch});
  return res;
}

// ---------------------------------------------------------------------------
// posterior-collapse diagnostic

struct LatentActivityReport {
  std::vector<double> mean_reg;     // mean per-dim regularizer term
  std::vector<double> var_of_mean;  // variance of posterior mean across frames
  std::vector<bool> collapsed;      // var_of_mean < 0.01
  std::size_t n_collapsed = 0;
};

inline LatentActivityReport latent_activity(
    const Checkpoint &ckpt, const std::vector<data::Utterance> &data) {
  require(!data.empty(), "latent_activity: empty dataset");
  const model::ModelConfig &mc = ckpt.model_cfg;
  const model::WaeParams params = ckpt.params();
  const std::size_t L = mc.latent_dim;

  std::vector<double> sum_reg(L, 0.0), sum_mu(L, 0.0), sum_mu2(L, 0.0);
  std::size_t n_frames = 0;
  for (const auto &utt : data) {
    for (std::size_t n = 0; n < utt.power.size(); ++n) {
      const model::VisualFrame vf = utt.vis.frame(n);
      const model::LatentGaussian q = model::encode(utt.power[n], vf, params, mc);
      const model::LatentGaussian p = model::prior(vf, params, mc);
      for (std::size_t l = 0; l < L; ++l) {
        sum_reg[l] += model::reg_term_dim(q, p, mc.regularizer, l);
        sum_mu[l] += q.mean[l];
        sum_mu2[l] += q.mean[l] * q.mean[l];
      }
      ++n_frames;
    }
  }

  LatentActivityReport rep;
  rep.mean_reg.resize(L);
  rep.var_of_mean.resize(L);
  rep.collapsed.resize(L);
  const double inv = 1.0 / static_cast<double>(n_frames);
  for (std::size_t l = 0; l < L; ++l) {
    rep.mean_reg[l] = sum_reg[l] * inv;
    const double mean = sum_mu[l] * inv;
    rep.var_of_mean[l] = std::fmax(0.0, sum_mu2[l] * inv - mean * mean);
    rep.collapsed[l] = rep.var_of_mean[l] < 0.01;
    if (rep.collapsed[l]) ++rep.n_collapsed;
  }
  return rep;
}

}  // namespace uv::training

#endif  // UNIVOICE_TRAINING_HPP_
