// univoice/config.hpp
//
// One JSON document configures the whole pipeline. Every key is optional
// (defaults apply), unknown keys are rejected, and every value is
// range-checked at parse time. A single top-level seed feeds training,
// synthesis and inference.

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

#ifndef UNIVOICE_CONFIG_HPP_
#define UNIVOICE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "univoice/common.hpp"
#include "univoice/data.hpp"
#include "univoice/dsp.hpp"
#include "univoice/inference.hpp"
#include "univoice/model.hpp"
#include "univoice/training.hpp"

namespace uv::config {

struct SynthSection {
  std::size_t n_utts = 200;
  std::size_t frames_per_utt = 50;
  std::size_t latent_dim = 8;
  std::size_t lip_dim = 16;
  std::size_t id_dim = 4;
  std::size_t gt_hidden = 32;

  bool operator==(const SynthSection &) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  dsp::StftConfig stft;
  model::ModelConfig model;
  training::TrainConfig train;
  mcem::McemConfig mcem;
  SynthSection synth;

  void validate() const {
    stft.validate();
    model.validate();
    train.validate();
    mcem.validate();
    require(model.freq_bins == stft.freq_bins(),
            "config: model.freq_bins (", model.freq_bins,
            ") must equal stft fft_size/2+1 (", stft.freq_bins(), ")");
  }

  // everything seeded from the single top-level seed
  void apply_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
    mcem.seed = s;
  }

  data::SynthConfig synth_config() const {
    data::SynthConfig sc;
    sc.n_utts = synth.n_utts;
    sc.frames_per_utt = synth.frames_per_utt;
    sc.latent_dim = synth.latent_dim;
    sc.lip_dim = synth.lip_dim;
    sc.id_dim = synth.id_dim;
    sc.gt_hidden = synth.gt_hidden;
    sc.seed = seed;
    sc.stft = stft;
    return sc;
  }

  bool operator==(const RunConfig &) const = default;
};

namespace detail {

inline void check_keys(const nlohmann::json &j,
                       const std::vector<std::string> &allowed,
                       const std::string &ctx) {
  require(j.is_object(), "config: ", ctx, " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const auto &k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    require(known, "config: unknown key '", ctx, ".", it.key(), "'");
  }
}

inline std::uint64_t u64_field(const nlohmann::json &j, const std::string &key,
                               std::uint64_t dflt, const std::string &ctx) {
  if (!j.contains(key)) return dflt;
  const auto &v = j.at(key);
  require(v.is_number_integer() || v.is_number_unsigned(),
          "config: ", ctx, ".", key, " must be a non-negative integer");
  if (v.is_number_integer() && !v.is_number_unsigned())
    require(v.get<std::int64_t>() >= 0, "config: ", ctx, ".", key,
            " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline double dbl_field(const nlohmann::json &j, const std::string &key,
                        double dflt, const std::string &ctx) {
  if (!j.contains(key)) return dflt;
  const auto &v = j.at(key);
  require(v.is_number(), "config: ", ctx, ".", key, " must be a number");
  return v.get<double>();
}

inline bool bool_field(const nlohmann::json &j, const std::string &key,
                       bool dflt, const std::string &ctx) {
  if (!j.contains(key)) return dflt;
  const auto &v = j.at(key);
  require(v.is_boolean(), "config: ", ctx, ".", key, " must be a boolean");
  return v.get<bool>();
}

inline std::string str_field(const nlohmann::json &j, const std::string &key,
                             const std::string &dflt, const std::string &ctx) {
  if (!j.contains(key)) return dflt;
  const auto &v = j.at(key);
  require(v.is_string(), "config: ", ctx, ".", key, " must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline RunConfig from_json(const nlohmann::json &j) {
  RunConfig c;
  detail::check_keys(j, {"seed", "stft", "model", "train", "mcem", "synth"},
                     "<root>");
  c.seed = detail::u64_field(j, "seed", c.seed, "<root>");

  if (j.contains("stft")) {
    const auto &s = j.at("stft");
    detail::check_keys(s, {"fft_size", "hop"}, "stft");
    c.stft.fft_size = detail::u64_field(s, "fft_size", c.stft.fft_size, "stft");
    c.stft.hop = detail::u64_field(s, "hop", c.stft.hop, "stft");
  }
  if (j.contains("model")) {
    const auto &m = j.at("model");
    detail::check_keys(m,
                       {"freq_bins", "latent_dim", "lip_dim", "id_dim",
                        "hidden", "lambda", "regularizer", "use_visual",
                        "latent_std_floor", "variance_floor"},
                       "model");
    c.model.freq_bins = detail::u64_field(m, "freq_bins", c.model.freq_bins, "model");
    c.model.latent_dim = detail::u64_field(m, "latent_dim", c.model.latent_dim, "model");
    c.model.lip_dim = detail::u64_field(m, "lip_dim", c.model.lip_dim, "model");
    c.model.id_dim = detail::u64_field(m, "id_dim", c.model.id_dim, "model");
    c.model.hidden = detail::u64_field(m, "hidden", c.model.hidden, "model");
    c.model.lambda = detail::dbl_field(m, "lambda", c.model.lambda, "model");
    c.model.regularizer = training::detail::reg_from_name(
        detail::str_field(m, "regularizer", "wasserstein", "model"));
    c.model.use_visual = detail::bool_field(m, "use_visual", c.model.use_visual, "model");
    c.model.latent_std_floor =
        detail::dbl_field(m, "latent_std_floor", c.model.latent_std_floor, "model");
    c.model.variance_floor =
        detail::dbl_field(m, "variance_floor", c.model.variance_floor, "model");
  }
  if (j.contains("train")) {
    const auto &t = j.at("train");
    detail::check_keys(t,
                       {"learning_rate", "batch_size", "max_epochs", "patience",
                        "beta1", "beta2", "adam_eps", "validation_fraction",
                        "min_delta_rel"},
                       "train");
    c.train.learning_rate =
        detail::dbl_field(t, "learning_rate", c.train.learning_rate, "train");
    c.train.batch_size = detail::u64_field(t, "batch_size", c.train.batch_size, "train");
    c.train.max_epochs = detail::u64_field(t, "max_epochs", c.train.max_epochs, "train");
    c.train.patience = detail::u64_field(t, "patience", c.train.patience, "train");
    c.train.beta1 = detail::dbl_field(t, "beta1", c.train.beta1, "train");
    c.train.beta2 = detail::dbl_field(t, "beta2", c.train.beta2, "train");
    c.train.adam_eps = detail::dbl_field(t, "adam_eps", c.train.adam_eps, "train");
    c.train.validation_fraction = detail::dbl_field(
        t, "validation_fraction", c.train.validation_fraction, "train");
    c.train.min_delta_rel =
        detail::dbl_field(t, "min_delta_rel", c.train.min_delta_rel, "train");
  }
  if (j.contains("mcem")) {
    const auto &m = j.at("mcem");
    detail::check_keys(
        m, {"n_iters", "mh_steps", "burn_in", "proposal_std", "nmf_rank"},
        "mcem");
    c.mcem.n_iters = detail::u64_field(m, "n_iters", c.mcem.n_iters, "mcem");
    c.mcem.mh_steps = detail::u64_field(m, "mh_steps", c.mcem.mh_steps, "mcem");
    c.mcem.burn_in = detail::u64_field(m, "burn_in", c.mcem.burn_in, "mcem");
    c.mcem.proposal_std =
        detail::dbl_field(m, "proposal_std", c.mcem.proposal_std, "mcem");
    c.mcem.nmf_rank = detail::u64_field(m, "nmf_rank", c.mcem.nmf_rank, "mcem");
  }
  if (j.contains("synth")) {
    const auto &s = j.at("synth");
    detail::check_keys(s,
                       {"n_utts", "frames_per_utt", "latent_dim", "lip_dim",
                        "id_dim", "gt_hidden"},
                       "synth");
    c.synth.n_utts = detail::u64_field(s, "n_utts", c.synth.n_utts, "synth");
    c.synth.frames_per_utt =
        detail::u64_field(s, "frames_per_utt", c.synth.frames_per_utt, "synth");
    c.synth.latent_dim = detail::u64_field(s, "latent_dim", c.synth.latent_dim, "synth");
    c.synth.lip_dim = detail::u64_field(s, "lip_dim", c.synth.lip_dim, "synth");
    c.synth.id_dim = detail::u64_field(s, "id_dim", c.synth.id_dim, "synth");
    c.synth.gt_hidden = detail::u64_field(s, "gt_hidden", c.synth.gt_hidden, "synth");
  }
  c.apply_seed(c.seed);
  c.validate();
  return c;
}

inline nlohmann::ordered_json to_json(const RunConfig &c) {
  return {
      {"seed", c.seed},
      {"stft", {{"fft_size", c.stft.fft_size}, {"hop", c.stft.hop}}},
      {"model",
       {{"freq_bins", c.model.freq_bins},
        {"latent_dim", c.model.latent_dim},
        {"lip_dim", c.model.lip_dim},
        {"id_dim", c.model.id_dim},
        {"hidden", c.model.hidden},
        {"lambda", c.model.lambda},
        {"regularizer", training::detail::reg_name(c.model.regularizer)},
        {"use_visual", c.model.use_visual},
        {"latent_std_floor", c.model.latent_std_floor},
        {"variance_floor", c.model.variance_floor}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"max_epochs", c.train.max_epochs},
        {"patience", c.train.patience},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"adam_eps", c.train.adam_eps},
        {"validation_fraction", c.train.validation_fraction},
        {"min_delta_rel", c.train.min_delta_rel}}},
      {"mcem",
       {{"n_iters", c.mcem.n_iters},
        {"mh_steps", c.mcem.mh_steps},
        {"burn_in", c.mcem.burn_in},
        {"proposal_std", c.mcem.proposal_std},
        {"nmf_rank", c.mcem.nmf_rank}}},
      {"synth",
       {{"n_utts", c.synth.n_utts},
        {"frames_per_utt", c.synth.frames_per_utt},
        {"latent_dim", c.synth.latent_dim},
        {"lip_dim", c.synth.lip_dim},
        {"id_dim", c.synth.id_dim},
        {"gt_hidden", c.synth.gt_hidden}}}};
}

inline RunConfig load(const std::string &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(data::detail::read_file(path));
  } catch (const nlohmann::json::exception &e) {
    fail("config: invalid JSON in ", path, ": ", e.what());
  }
  return from_json(j);
}

}  // namespace uv::config

#endif  // UNIVOICE_CONFIG_HPP_
