// univoice/inference.hpp
//
// Test-time enhancement and separation by Monte Carlo EM under the mixture
// model
//   x_fn = sum_k sqrt(g_n^k) s_fn^k + b_fn,
//   s^k ~ N_C(0, var(z_n^k, v^k)),  b ~ N_C(0, (W_b H_b)_fn),
// i.e. x_fn | z ~ N_C(0, t_fn) with t = sum_k g var^k + beta.
//
// E-step: per-speaker random-walk Metropolis over z, frames independent.
// Proposals within one sweep are evaluated against the sweep-start state and
// committed together, and per-speaker contributions to the total variance
// are summed in content-digest order, so results are invariant to the order
// speakers are listed in (outputs permute exactly when inputs permute).
//
// M-step: multiplicative Itakura-Saito updates with exponent 1/2 for the
// noise factors and per-frame gains; gain updates across speakers share one
// refreshed total.
//
// Reconstruction: per-bin Wiener filter averaged over retained samples.

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

#ifndef UNIVOICE_INFERENCE_HPP_
#define UNIVOICE_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "univoice/common.hpp"
#include "univoice/data.hpp"
#include "univoice/dsp.hpp"
#include "univoice/model.hpp"
#include "univoice/parallel.hpp"
#include "univoice/rng.hpp"
#include "univoice/training.hpp"

namespace uv::mcem {

inline constexpr double kFloor = 1e-10;

struct McemConfig {
  std::size_t n_iters = 50;
  std::size_t mh_steps = 40;
  std::size_t burn_in = 30;
  double proposal_std = 0.05;
  std::size_t nmf_rank = 10;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_iters >= 1, "mcem config: n_iters must be >= 1");
    require(mh_steps >= 1, "mcem config: mh_steps must be >= 1");
    require(burn_in < mh_steps, "mcem config: burn_in must be < mh_steps");
    require(proposal_std > 0.0, "mcem config: proposal_std must be > 0");
    require(nmf_rank >= 1, "mcem config: nmf_rank must be >= 1");
  }
  bool operator==(const McemConfig &) const = default;
};

struct NoiseNMF {
  std::size_t freq_bins = 0;
  std::size_t rank = 0;
  std::size_t frames = 0;
  std::vector<double> w;     // [F x rank]
  std::vector<double> h;     // [rank x N]
  std::vector<double> beta;  // materialized w*h, [F x N]

  void refresh() {
    for (std::size_t f = 0; f < freq_bins; ++f)
      for (std::size_t n = 0; n < frames; ++n) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rank; ++r)
          acc += w[f * rank + r] * h[r * frames + n];
        beta[f * frames + n] = acc;
      }
  }
};

struct SpeakerChain {
  data::VisualFeatures feats;  // truncated to the mixture frame count
  std::uint64_t digest = 0;
  std::vector<double> prior_mean;  // [N x L]
  std::vector<double> prior_std;   // [N x L]
  std::vector<double> hidden_pre;  // decoder cache, [N x H]
  std::vector<double> z;           // [N x L]
  std::vector<double> var;         // decoder variance at z, [F x N]
  std::vector<double> gain;        // [N]
};

struct McemState {
  dsp::ComplexSpectrogram mix;
  std::vector<double> x2;  // |mix|^2, [F x N]
  std::vector<SpeakerChain> chains;
  std::vector<std::size_t> order;  // speaker indices, ascending digest
  NoiseNMF nmf;
  // retained[r][k] is a [F x N] variance grid from one post-burn-in sweep
  std::vector<std::vector<std::vector<double>>> retained;
  std::size_t em_iter = 0;
  std::size_t sweep = 0;  // within the current E-step
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;
  McemConfig cfg;

  std::size_t frames() const { return mix.frames; }
  std::size_t bins() const { return mix.freq_bins; }
  std::size_t speakers() const { return chains.size(); }
  double acceptance_rate() const {
    return proposed == 0 ? 0.0
                         : static_cast<double>(accepted) /
                               static_cast<double>(proposed);
  }

  void begin_estep() {
    retained.clear();
    sweep = 0;
  }

  // total variance at one bin/frame, summed in digest order
  double total_var(std::size_t f, std::size_t n) const {
    double acc = nmf.beta[f * frames() + n];
    for (std::size_t k : order)
      acc += chains[k].gain[n] * chains[k].var[f * frames() + n];
    return acc;
  }
};

inline McemState init_mcem(const dsp::ComplexSpectrogram &mix,
                           const std::vector<data::VisualFeatures> &feats,
                           const training::Checkpoint &ckpt,
                           const McemConfig &cfg) {
  cfg.validate();
  require(!feats.empty(), "init_mcem: need at least one speaker");
  const model::ModelConfig &mc = ckpt.model_cfg;
  require(mix.freq_bins == mc.freq_bins, "init_mcem: mixture has ",
          mix.freq_bins, " bins, model expects ", mc.freq_bins);

  McemState st;
  st.cfg = cfg;
  st.mix = mix;
  const std::size_t F = mix.freq_bins, N = mix.frames, L = mc.latent_dim;
  require(N >= 1, "init_mcem: empty mixture spectrogram");
  st.x2.resize(F * N);
  for (std::size_t i = 0; i < st.x2.size(); ++i)
    st.x2[i] = std::norm(mix.bins[i]);

  const model::WaeParams params = ckpt.params();
  for (std::size_t k = 0; k < feats.size(); ++k) {
    const data::VisualFeatures &vf = feats[k];
    require(vf.frames() >= N, "init_mcem: speaker ", k, " has ", vf.frames(),
            " feature frames, mixture has ", N);
    SpeakerChain chain;
    chain.feats.lip.assign(vf.lip.begin(), vf.lip.begin() + N);
    chain.feats.identity = vf.identity;
    chain.digest = chain.feats.digest();
    chain.prior_mean.resize(N * L);
    chain.prior_std.resize(N * L);
    chain.hidden_pre.resize(N * mc.hidden);
    chain.z.resize(N * L);
    chain.var.resize(F * N);
    chain.gain.assign(N, 1.0);

    std::vector<double> frame_power(F);
    for (std::size_t n = 0; n < N; ++n) {
      const model::VisualFrame frame = chain.feats.frame(n);
      const model::LatentGaussian p = model::prior(frame, params, mc);
      const model::DecoderCache cache = model::decoder_cache(frame, params, mc);
      std::copy(cache.hidden_pre.begin(), cache.hidden_pre.end(),
                chain.hidden_pre.begin() + n * mc.hidden);
      for (std::size_t l = 0; l < L; ++l) {
        chain.prior_mean[n * L + l] = p.mean[l];
        chain.prior_std[n * L + l] = p.std_dev[l];
      }
      for (std::size_t f = 0; f < F; ++f) frame_power[f] = st.x2[f * N + n];
      const model::LatentGaussian q =
          model::encode(frame_power, frame, params, mc);
      for (std::size_t l = 0; l < L; ++l) chain.z[n * L + l] = q.mean[l];
      const model::DecoderCache c2{std::vector<double>(
          chain.hidden_pre.begin() + n * mc.hidden,
          chain.hidden_pre.begin() + (n + 1) * mc.hidden)};
      const std::vector<double> var = model::decode_cached(
          std::span<const double>(&chain.z[n * L], L), c2, params, mc);
      for (std::size_t f = 0; f < F; ++f) chain.var[f * N + n] = var[f];
    }
    st.chains.push_back(std::move(chain));
  }

  st.order.resize(st.chains.size());
  for (std::size_t k = 0; k < st.order.size(); ++k) st.order[k] = k;
  std::stable_sort(st.order.begin(), st.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return st.chains[a].digest < st.chains[b].digest;
                   });

  // noise factors: seeded uniform(0.1, 1), scaled so mean(beta) = mean(x2)/2
  st.nmf.freq_bins = F;
  st.nmf.rank = cfg.nmf_rank;
  st.nmf.frames = N;
  st.nmf.w.resize(F * cfg.nmf_rank);
  st.nmf.h.resize(cfg.nmf_rank * N);
  st.nmf.beta.resize(F * N);
  for (std::size_t i = 0; i < st.nmf.w.size(); ++i)
    st.nmf.w[i] = rng::uniform(rng::key({cfg.seed, 0x4e4d5757ULL, i}), 0.1, 1.0);
  for (std::size_t i = 0; i < st.nmf.h.size(); ++i)
    st.nmf.h[i] = rng::uniform(rng::key({cfg.seed, 0x4e4d5748ULL, i}), 0.1, 1.0);
  st.nmf.refresh();
  double mean_beta = 0.0, mean_x2 = 0.0;
  for (double b : st.nmf.beta) mean_beta += b;
  for (double p : st.x2) mean_x2 += p;
  mean_beta /= static_cast<double>(st.nmf.beta.size());
  mean_x2 /= static_cast<double>(st.x2.size());
  const double scale =
      std::sqrt(std::fmax(mean_x2 / 2.0, kFloor) / std::fmax(mean_beta, kFloor));
  for (double &v : st.nmf.w) v = std::fmax(v * scale, kFloor);
  for (double &v : st.nmf.h) v = std::fmax(v * scale, kFloor);
  st.nmf.refresh();
  return st;
}

// One Metropolis sweep: for every speaker and frame, propose a joint update
// of the frame's latent vector and accept by the exact likelihood-times-prior
// ratio. Frames are independent; sweeps append a retained variance snapshot
// once past burn-in.
inline void mh_step(McemState &st, const model::WaeParams &params,
                    const model::ModelConfig &mc) {
  const std::size_t F = st.bins(), N = st.frames(), L = mc.latent_dim;
  const std::size_t K = st.speakers();
  const double pstd = st.cfg.proposal_std;

  std::vector<std::uint32_t> frame_accepts(N, 0);
  std::vector<std::string> frame_errors(N);

  parallel_for(N, [&](std::size_t n) {
    try {
      // proposals for all speakers evaluated against the sweep-start state
      std::vector<std::vector<double>> new_z(K), new_var(K);
      std::vector<char> accept(K, 0);
      for (std::size_t k = 0; k < K; ++k) {
        SpeakerChain &ch = st.chains[k];
        std::vector<double> zp(L);
        for (std::size_t l = 0; l < L; ++l) {
          const double eps = rng::gaussian(rng::key(
              {st.cfg.seed, 0x4d48505aULL, ch.digest, st.em_iter, st.sweep, n, l}));
          zp[l] = ch.z[n * L + l] + pstd * eps;
        }
        const model::DecoderCache cache{std::vector<double>(
            ch.hidden_pre.begin() + n * mc.hidden,
            ch.hidden_pre.begin() + (n + 1) * mc.hidden)};
        std::vector<double> vp = model::decode_cached(zp, cache, params, mc);

        // log-likelihood difference over all bins
        double dlog = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
          double t_old = st.nmf.beta[f * N + n];
          double t_new = t_old;
          for (std::size_t j : st.order) {
            const double vj = st.chains[j].var[f * N + n];
            t_old += st.chains[j].gain[n] * vj;
            t_new += st.chains[j].gain[n] * (j == k ? vp[f] : vj);
          }
          require(t_old > 0.0 && t_new > 0.0 && std::isfinite(t_old) &&
                      std::isfinite(t_new),
                  "mh_step: non-finite likelihood at speaker ", k, " frame ", n);
          const double p = st.x2[f * N + n];
          dlog += std::log(t_old) - std::log(t_new) + p / t_old - p / t_new;
        }
        // prior ratio
        for (std::size_t l = 0; l < L; ++l) {
          const double mu = ch.prior_mean[n * L + l];
          const double sd = ch.prior_std[n * L + l];
          const double d_old = ch.z[n * L + l] - mu;
          const double d_new = zp[l] - mu;
          dlog += (d_old * d_old - d_new * d_new) / (2.0 * sd * sd);
        }
        require(std::isfinite(dlog),
                "mh_step: non-finite likelihood at speaker ", k, " frame ", n);

        const double u = rng::u01(rng::key(
            {st.cfg.seed, 0x4d484143ULL, ch.digest, st.em_iter, st.sweep, n}));
        if (std::log(u) < dlog) {
          accept[k] = 1;
          new_z[k] = std::move(zp);
          new_var[k] = std::move(vp);
        }
      }
      // commit
      std::uint32_t acc_count = 0;
      for (std::size_t k = 0; k < K; ++k) {
        if (!accept[k]) continue;
        ++acc_count;
        SpeakerChain &ch = st.chains[k];
        for (std::size_t l = 0; l < L; ++l) ch.z[n * L + l] = new_z[k][l];
        for (std::size_t f = 0; f < F; ++f)
          ch.var[f * N + n] = new_var[k][f];
      }
      frame_accepts[n] = acc_count;
    } catch (const Error &e) {
      frame_errors[n] = e.what();
    }
  });

  for (const auto &err : frame_errors)
    require(err.empty(), err);
  for (std::uint32_t a : frame_accepts) st.accepted += a;
  st.proposed += static_cast<std::uint64_t>(N) * K;

  if (st.sweep >= st.cfg.burn_in) {
    std::vector<std::vector<double>> snapshot;
    snapshot.reserve(K);
    for (const SpeakerChain &ch : st.chains) snapshot.push_back(ch.var);
    st.retained.push_back(std::move(snapshot));
  }
  ++st.sweep;
}

namespace detail {

// mean over retained samples, per speaker
inline std::vector<std::vector<double>> retained_mean(const McemState &st) {
  require(!st.retained.empty(), "m_step: no retained samples");
  const std::size_t K = st.speakers();
  std::vector<std::vector<double>> vhat(
      K, std::vector<double>(st.bins() * st.frames(), 0.0));
  for (const auto &snap : st.retained)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < vhat[k].size(); ++i)
        vhat[k][i] += snap[k][i];
  const double inv = 1.0 / static_cast<double>(st.retained.size());
  for (auto &v : vhat)
    for (double &x : v) x *= inv;
  return vhat;
}

inline std::vector<double> total_from(const McemState &st,
                                      const std::vector<std::vector<double>> &vhat) {
  const std::size_t FN = st.bins() * st.frames();
  std::vector<double> t(FN);
  for (std::size_t i = 0; i < FN; ++i) {
    double acc = st.nmf.beta[i];
    const std::size_t n = i % st.frames();
    for (std::size_t k : st.order) acc += st.chains[k].gain[n] * vhat[k][i];
    t[i] = acc;
  }
  return t;
}

}  // namespace detail

// Multiplicative ratio updates with exponent 1/2 on H_b, then W_b, then all
// per-frame gains against one shared total; positivity floors reapplied and
// totals refreshed between sub-updates.
inline void m_step(McemState &st) {
  const std::size_t F = st.bins(), N = st.frames(), R = st.nmf.rank;
  const std::vector<std::vector<double>> vhat = detail::retained_mean(st);
  std::vector<double> t = detail::total_from(st, vhat);

  // H_b
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t n = 0; n < N; ++n) {
      double num = 0.0, den = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        const double tv = t[f * N + n];
        const double wv = st.nmf.w[f * R + r];
        num += wv * (st.x2[f * N + n] / tv) / tv;
        den += wv / tv;
      }
      st.nmf.h[r * N + n] =
          std::fmax(st.nmf.h[r * N + n] * std::sqrt(num / den), kFloor);
    }
  st.nmf.refresh();
  t = detail::total_from(st, vhat);

  // W_b
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t r = 0; r < R; ++r) {
      double num = 0.0, den = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const double tv = t[f * N + n];
        const double hv = st.nmf.h[r * N + n];
        num += hv * (st.x2[f * N + n] / tv) / tv;
        den += hv / tv;
      }
      st.nmf.w[f * R + r] =
          std::fmax(st.nmf.w[f * R + r] * std::sqrt(num / den), kFloor);
    }
  st.nmf.refresh();
  t = detail::total_from(st, vhat);

  // gains: all speakers updated from the same refreshed total, so the result
  // does not depend on speaker order
  for (std::size_t k = 0; k < st.speakers(); ++k) {
    SpeakerChain &ch = st.chains[k];
    for (std::size_t n = 0; n < N; ++n) {
      double num = 0.0, den = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        const double tv = t[f * N + n];
        const double vv = vhat[k][f * N + n];
        num += vv * (st.x2[f * N + n] / tv) / tv;
        den += vv / tv;
      }
      ch.gain[n] = std::fmax(ch.gain[n] * std::sqrt(num / den), kFloor);
    }
  }
}

// Mixture Itakura-Saito objective sum_{f,n} [x2/t + ln t] with the retained
// sample mean held fixed; the quantity the M-step must not increase.
inline double is_objective(const McemState &st) {
  const std::vector<std::vector<double>> vhat = detail::retained_mean(st);
  const std::vector<double> t = detail::total_from(st, vhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    acc += st.x2[i] / t[i] + std::log(t[i]);
  return acc;
}

// Per-speaker Wiener reconstruction averaged over retained samples:
// shat^k = mean_r [ sqrt(g) var^{k,r} / (sum_j g var^{j,r} + beta) ] * x
inline std::vector<dsp::ComplexSpectrogram> wiener_estimate(
    const McemState &st) {
  require(!st.retained.empty(), "wiener_estimate: no retained samples");
  const std::size_t F = st.bins(), N = st.frames(), K = st.speakers();
  std::vector<dsp::ComplexSpectrogram> out(K);
  std::vector<std::vector<double>> filt(K, std::vector<double>(F * N, 0.0));

  for (const auto &snap : st.retained) {
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t i = f * N + n;
        double t = st.nmf.beta[i];
        for (std::size_t j : st.order)
          t += st.chains[j].gain[n] * snap[j][i];
        for (std::size_t k = 0; k < K; ++k)
          filt[k][i] += std::sqrt(st.chains[k].gain[n]) * snap[k][i] / t;
      }
  }
  const double inv = 1.0 / static_cast<double>(st.retained.size());
  for (std::size_t k = 0; k < K; ++k) {
    out[k].freq_bins = F;
    out[k].frames = N;
    out[k].config = st.mix.config;
    out[k].sample_rate = st.mix.sample_rate;
    out[k].bins.resize(F * N);
    for (std::size_t i = 0; i < F * N; ++i)
      out[k].bins[i] = st.mix.bins[i] * (filt[k][i] * inv);
  }
  return out;
}

inline void run_em(McemState &st, const model::WaeParams &params,
                   const model::ModelConfig &mc) {
  for (std::size_t iter = 0; iter < st.cfg.n_iters; ++iter) {
    st.em_iter = iter;
    st.begin_estep();
    for (std::size_t s = 0; s < st.cfg.mh_steps; ++s) mh_step(st, params, mc);
    m_step(st);
  }
}

// Single-speaker pipeline: stft -> MCEM -> Wiener -> istft. The noise model
// absorbs everything the speaker model does not explain.
inline dsp::Waveform enhance(const dsp::Waveform &wav,
                             const data::VisualFeatures &feats,
                             const training::Checkpoint &ckpt,
                             const McemConfig &cfg) {
  const dsp::ComplexSpectrogram spec = dsp::stft(wav, ckpt.stft);
  McemState st = init_mcem(spec, {feats}, ckpt, cfg);
  const model::WaeParams params = ckpt.params();
  run_em(st, params, ckpt.model_cfg);
  return dsp::istft(wiener_estimate(st)[0]);
}

// Multi-speaker pipeline; output k corresponds positionally to feats[k].
inline std::vector<dsp::Waveform> separate(
    const dsp::Waveform &wav, const std::vector<data::VisualFeatures> &feats,
    const training::Checkpoint &ckpt, const McemConfig &cfg) {
  require(feats.size() >= 2,
          "separate: need at least 2 speakers; use enhance for one");
  const dsp::ComplexSpectrogram spec = dsp::stft(wav, ckpt.stft);
  McemState st = init_mcem(spec, feats, ckpt, cfg);
  const model::WaeParams params = ckpt.params();
  run_em(st, params, ckpt.model_cfg);
  const auto specs = wiener_estimate(st);
  std::vector<dsp::Waveform> out;
  out.reserve(specs.size());
  for (const auto &s : specs) out.push_back(dsp::istft(s));
  return out;
}

}  // namespace uv::mcem

#endif  // UNIVOICE_INFERENCE_HPP_
