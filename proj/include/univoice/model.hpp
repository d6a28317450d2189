// univoice/model.hpp
//
// Audio-visual Wasserstein autoencoder over per-frame power spectra.
// Encoder posterior and visually conditioned prior are diagonal Gaussians;
// the decoder emits the per-bin variance of a zero-mean complex Gaussian
// model of the STFT coefficients. Training minimizes
//   mean_n [ NLL(s_n | var(z_n, v_n)) + lambda * reg(q_n, p_n) ]
// with reg either the closed-form squared 2-Wasserstein distance or the KL
// divergence (ablation variant).
//
// Frame-wise ("plain") ops here are the reference implementations used by
// inference and by hand oracles; build_loss() constructs the identical
// computation on an autodiff tape for training. A test pins the two paths
// against each other.

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

#ifndef UNIVOICE_MODEL_HPP_
#define UNIVOICE_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "univoice/autodiff.hpp"
#include "univoice/common.hpp"

namespace uv::model {

struct VisualFrame {
  std::vector<double> lip;
  std::vector<double> identity;
};

struct LatentGaussian {
  std::vector<double> mean;
  std::vector<double> std_dev;

  std::size_t dim() const { return mean.size(); }
};

enum class Regularizer { wasserstein, kl };

struct ModelConfig {
  std::size_t freq_bins = 513;
  std::size_t latent_dim = 32;
  std::size_t lip_dim = 768;
  std::size_t id_dim = 128;
  std::size_t hidden = 512;
  double lambda = 0.1;
  Regularizer regularizer = Regularizer::wasserstein;
  bool use_visual = true;
  double latent_std_floor = 1e-6;
  double variance_floor = 1e-8;

  void validate() const {
    require(freq_bins > 0 && latent_dim > 0 && lip_dim > 0 && id_dim > 0 &&
                hidden > 0,
            "model config: all dimensions must be positive");
    require(lambda >= 0.0, "model config: lambda must be >= 0");
    require(latent_std_floor > 0.0 && variance_floor > 0.0,
            "model config: floors must be positive");
  }
  std::size_t vis_dim() const { return lip_dim + id_dim; }
  bool operator==(const ModelConfig &) const = default;
};

// All trainable weights. Branch fusion is decomposed: an affine on a
// concatenation equals the sum of per-branch affines, which keeps the tape
// op set minimal and gives unused branches exactly-zero gradients.
struct WaeParams {
  // encoder (psi)
  ad::Tensor enc_audio_w, enc_audio_b;
  ad::Tensor enc_vis_w, enc_vis_b;
  ad::Tensor enc_mu_aw, enc_mu_vw, enc_mu_b;
  ad::Tensor enc_sd_aw, enc_sd_vw, enc_sd_b;
  // prior (gamma)
  ad::Tensor pri_vis_w, pri_vis_b;
  ad::Tensor pri_mu_w, pri_mu_b;
  ad::Tensor pri_sd_w, pri_sd_b;
  // decoder (theta)
  ad::Tensor dec_vis_w, dec_vis_b;
  ad::Tensor dec_z_w, dec_h_w, dec_h_b;
  ad::Tensor dec_out_w, dec_out_b;

  static WaeParams zeros(const ModelConfig &c) {
    c.validate();
    const std::size_t F = c.freq_bins, L = c.latent_dim, H = c.hidden,
                      V = c.vis_dim();
    WaeParams p;
    p.enc_audio_w = ad::Tensor::zeros({F, H});
    p.enc_audio_b = ad::Tensor::zeros({H});
    p.enc_vis_w = ad::Tensor::zeros({V, H});
    p.enc_vis_b = ad::Tensor::zeros({H});
    p.enc_mu_aw = ad::Tensor::zeros({H, L});
    p.enc_mu_vw = ad::Tensor::zeros({H, L});
    p.enc_mu_b = ad::Tensor::zeros({L});
    p.enc_sd_aw = ad::Tensor::zeros({H, L});
    p.enc_sd_vw = ad::Tensor::zeros({H, L});
    p.enc_sd_b = ad::Tensor::zeros({L});
    p.pri_vis_w = ad::Tensor::zeros({V, H});
    p.pri_vis_b = ad::Tensor::zeros({H});
    p.pri_mu_w = ad::Tensor::zeros({H, L});
    p.pri_mu_b = ad::Tensor::zeros({L});
    p.pri_sd_w = ad::Tensor::zeros({H, L});
    p.pri_sd_b = ad::Tensor::zeros({L});
    p.dec_vis_w = ad::Tensor::zeros({V, H});
    p.dec_vis_b = ad::Tensor::zeros({H});
    p.dec_z_w = ad::Tensor::zeros({L, H});
    p.dec_h_w = ad::Tensor::zeros({H, H});
    p.dec_h_b = ad::Tensor::zeros({H});
    p.dec_out_w = ad::Tensor::zeros({H, F});
    p.dec_out_b = ad::Tensor::zeros({F});
    return p;
  }

  // Gaussian weight init, zero biases; keyed per tensor index.
  static WaeParams init(const ModelConfig &c, std::uint64_t seed) {
    WaeParams p = zeros(c);
    auto tensors = p.all();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      ad::Tensor &t = *tensors[i];
      if (t.shape.size() != 2) continue;  // biases stay zero
      const double scale = 1.0 / std::sqrt(static_cast<double>(t.rows()));
      t = ad::Tensor::randn(t.shape, rng::key({seed, 0x57414521ULL, i}), scale);
    }
    return p;
  }

  std::vector<ad::Tensor *> all() {
    return {&enc_audio_w, &enc_audio_b, &enc_vis_w, &enc_vis_b,
            &enc_mu_aw,   &enc_mu_vw,   &enc_mu_b,  &enc_sd_aw,
            &enc_sd_vw,   &enc_sd_b,    &pri_vis_w, &pri_vis_b,
            &pri_mu_w,    &pri_mu_b,    &pri_sd_w,  &pri_sd_b,
            &dec_vis_w,   &dec_vis_b,   &dec_z_w,   &dec_h_w,
            &dec_h_b,     &dec_out_w,   &dec_out_b};
  }
  std::vector<const ad::Tensor *> all() const {
    return {&enc_audio_w, &enc_audio_b, &enc_vis_w, &enc_vis_b,
            &enc_mu_aw,   &enc_mu_vw,   &enc_mu_b,  &enc_sd_aw,
            &enc_sd_vw,   &enc_sd_b,    &pri_vis_w, &pri_vis_b,
            &pri_mu_w,    &pri_mu_b,    &pri_sd_w,  &pri_sd_b,
            &dec_vis_w,   &dec_vis_b,   &dec_z_w,   &dec_h_w,
            &dec_h_b,     &dec_out_w,   &dec_out_b};
  }

  static const std::vector<std::string> &names() {
    static const std::vector<std::string> kNames = {
        "enc.audio_w", "enc.audio_b", "enc.vis_w", "enc.vis_b",
        "enc.mu_aw",   "enc.mu_vw",   "enc.mu_b",  "enc.sd_aw",
        "enc.sd_vw",   "enc.sd_b",    "pri.vis_w", "pri.vis_b",
        "pri.mu_w",    "pri.mu_b",    "pri.sd_w",  "pri.sd_b",
        "dec.vis_w",   "dec.vis_b",   "dec.z_w",   "dec.h_w",
        "dec.h_b",     "dec.out_w",   "dec.out_b"};
    return kNames;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const ad::Tensor *t : all()) n += t->numel();
    return n;
  }
};

// ---------------------------------------------------------------------------
// plain frame-wise forward path

namespace detail {

inline void check_vis(const VisualFrame &vis, const ModelConfig &c) {
  require(vis.lip.size() == c.lip_dim, "visual frame: lip dim ",
          vis.lip.size(), " != config ", c.lip_dim);
  require(vis.identity.size() == c.id_dim, "visual frame: identity dim ",
          vis.identity.size(), " != config ", c.id_dim);
}

inline std::vector<double> vis_cat(const VisualFrame &vis) {
  std::vector<double> v;
  v.reserve(vis.lip.size() + vis.identity.size());
  v.insert(v.end(), vis.lip.begin(), vis.lip.end());
  v.insert(v.end(), vis.identity.begin(), vis.identity.end());
  return v;
}

// y = x * W + b for a single row vector
inline std::vector<double> affine_vec(std::span<const double> x,
                                      const ad::Tensor &w,
                                      const ad::Tensor &b) {
  const std::size_t I = w.rows(), O = w.cols();
  require(x.size() == I, "affine: input length ", x.size(), " vs weight ",
          w.shape_str());
  require(b.numel() == O, "affine: bias length ", b.numel(), " vs width ", O);
  std::vector<double> y = b.v;
  for (std::size_t i = 0; i < I; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double *wrow = &w.v[i * O];
    for (std::size_t o = 0; o < O; ++o) y[o] += xi * wrow[o];
  }
  return y;
}

inline void add_matvec(std::vector<double> &y, std::span<const double> x,
                       const ad::Tensor &w) {
  const std::size_t I = w.rows(), O = w.cols();
  require(x.size() == I, "affine: input length ", x.size(), " vs weight ",
          w.shape_str());
  for (std::size_t i = 0; i < I; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double *wrow = &w.v[i * O];
    for (std::size_t o = 0; o < O; ++o) y[o] += xi * wrow[o];
  }
}

inline std::vector<double> relu_vec(std::vector<double> v) {
  for (double &x : v) x = x > 0 ? x : 0.0;
  return v;
}

// encoder/prior visual hidden; empty when the visual path is ablated
inline std::vector<double> visual_hidden(const VisualFrame &vis,
                                         const ad::Tensor &w,
                                         const ad::Tensor &b,
                                         const ModelConfig &c) {
  check_vis(vis, c);
  return relu_vec(affine_vec(vis_cat(vis), w, b));
}

}  // namespace detail

inline LatentGaussian encode(std::span<const double> power_frame,
                             const VisualFrame &vis, const WaeParams &p,
                             const ModelConfig &c) {
  require(power_frame.size() == c.freq_bins, "encode: power frame length ",
          power_frame.size(), " != freq_bins ", c.freq_bins);
  std::vector<double> logp(c.freq_bins);
  for (std::size_t f = 0; f < c.freq_bins; ++f) {
    require(std::isfinite(power_frame[f]) && power_frame[f] >= 0.0,
            "encode: power entries must be finite and >= 0");
    logp[f] = std::log(power_frame[f] + c.variance_floor);
  }
  std::vector<double> ha = detail::affine_vec(logp, p.enc_audio_w, p.enc_audio_b);
  for (double &x : ha) x = std::tanh(x);

  std::vector<double> mu(p.enc_mu_b.v);
  std::vector<double> raw(p.enc_sd_b.v);
  detail::add_matvec(mu, ha, p.enc_mu_aw);
  detail::add_matvec(raw, ha, p.enc_sd_aw);
  if (c.use_visual) {
    std::vector<double> hv =
        detail::visual_hidden(vis, p.enc_vis_w, p.enc_vis_b, c);
    detail::add_matvec(mu, hv, p.enc_mu_vw);
    detail::add_matvec(raw, hv, p.enc_sd_vw);
  }
  LatentGaussian g;
  g.mean = std::move(mu);
  g.std_dev.resize(c.latent_dim);
  for (std::size_t l = 0; l < c.latent_dim; ++l)
    g.std_dev[l] = softplus(raw[l]) + c.latent_std_floor;
  return g;
}

inline LatentGaussian prior(const VisualFrame &vis, const WaeParams &p,
                            const ModelConfig &c) {
  if (!c.use_visual) {
    return LatentGaussian{std::vector<double>(c.latent_dim, 0.0),
                          std::vector<double>(c.latent_dim, 1.0)};
  }
  std::vector<double> hv =
      detail::visual_hidden(vis, p.pri_vis_w, p.pri_vis_b, c);
  std::vector<double> mu = detail::affine_vec(hv, p.pri_mu_w, p.pri_mu_b);
  std::vector<double> raw = detail::affine_vec(hv, p.pri_sd_w, p.pri_sd_b);
  LatentGaussian g;
  g.mean = std::move(mu);
  g.std_dev.resize(c.latent_dim);
  for (std::size_t l = 0; l < c.latent_dim; ++l)
    g.std_dev[l] = softplus(raw[l]) + c.latent_std_floor;
  return g;
}

inline std::vector<double> reparameterize(const LatentGaussian &g,
                                          std::span<const double> eps) {
  require(eps.size() == g.dim(), "reparameterize: eps length ", eps.size(),
          " != latent dim ", g.dim());
  std::vector<double> z(g.dim());
  for (std::size_t l = 0; l < g.dim(); ++l)
    z[l] = g.mean[l] + g.std_dev[l] * eps[l];
  return z;
}

// Per-frame decoder state that does not depend on z. Inference evaluates the
// decoder hundreds of thousands of times per utterance against fixed visual
// features, so the visual half of the hidden pre-activation is cached.
struct DecoderCache {
  std::vector<double> hidden_pre;  // dec_h_b + dec_h_w^T relu(dec_vis_w^T v)
};

inline DecoderCache decoder_cache(const VisualFrame &vis, const WaeParams &p,
                                  const ModelConfig &c) {
  DecoderCache cache;
  cache.hidden_pre = p.dec_h_b.v;
  if (c.use_visual) {
    std::vector<double> hv =
        detail::visual_hidden(vis, p.dec_vis_w, p.dec_vis_b, c);
    detail::add_matvec(cache.hidden_pre, hv, p.dec_h_w);
  }
  return cache;
}

inline std::vector<double> decode_cached(std::span<const double> z,
                                         const DecoderCache &cache,
                                         const WaeParams &p,
                                         const ModelConfig &c) {
  require(z.size() == c.latent_dim, "decode: z length ", z.size(),
          " != latent dim ", c.latent_dim);
  std::vector<double> h = cache.hidden_pre;
  detail::add_matvec(h, z, p.dec_z_w);
  for (double &x : h) x = std::tanh(x);
  std::vector<double> var = detail::affine_vec(h, p.dec_out_w, p.dec_out_b);
  for (double &x : var) {
    x = softplus(x) + c.variance_floor;
    require(std::isfinite(x), "decode: non-finite variance");
  }
  return var;
}

inline std::vector<double> decode(std::span<const double> z,
                                  const VisualFrame &vis, const WaeParams &p,
                                  const ModelConfig &c) {
  return decode_cached(z, decoder_cache(vis, p, c), p, c);
}

// Complex-Gaussian negative log-likelihood of one frame, dropping the
// additive F*ln(pi) constant: sum_f power/var + ln var.
inline double is_nll(std::span<const double> power,
                     std::span<const double> variance) {
  require(power.size() == variance.size(), "is_nll: length mismatch ",
          power.size(), " vs ", variance.size());
  double acc = 0.0;
  for (std::size_t f = 0; f < power.size(); ++f) {
    require(variance[f] > 0.0, "is_nll: variance must be positive");
    require(power[f] >= 0.0, "is_nll: power must be >= 0");
    acc += power[f] / variance[f] + std::log(variance[f]);
  }
  return acc;
}

// Squared 2-Wasserstein distance between diagonal Gaussians.
inline double w2_diag_gauss(const LatentGaussian &q, const LatentGaussian &p) {
  require(q.dim() == p.dim(), "w2: dim mismatch ", q.dim(), " vs ", p.dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double dm = q.mean[i] - p.mean[i];
    const double ds = q.std_dev[i] - p.std_dev[i];
    acc += dm * dm + ds * ds;
  }
  return acc;
}

inline double kl_diag_gauss(const LatentGaussian &q, const LatentGaussian &p) {
  require(q.dim() == p.dim(), "kl: dim mismatch ", q.dim(), " vs ", p.dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double sq = q.std_dev[i], sp = p.std_dev[i];
    const double dm = q.mean[i] - p.mean[i];
    acc += std::log(sp / sq) + (sq * sq + dm * dm) / (2.0 * sp * sp) - 0.5;
  }
  return acc;
}

// per-dimension regularizer summand; latent_activity reports these
inline double reg_term_dim(const LatentGaussian &q, const LatentGaussian &p,
                           Regularizer reg, std::size_t i) {
  const double dm = q.mean[i] - p.mean[i];
  if (reg == Regularizer::wasserstein) {
    const double ds = q.std_dev[i] - p.std_dev[i];
    return dm * dm + ds * ds;
  }
  const double sq = q.std_dev[i], sp = p.std_dev[i];
  return std::log(sp / sq) + (sq * sq + dm * dm) / (2.0 * sp * sp) - 0.5;
}

// ---------------------------------------------------------------------------
// batched tape path (training)

struct FrameBatch {
  ad::Tensor power;  // [B x F]
  ad::Tensor vis;    // [B x (lip_dim + id_dim)]
  ad::Tensor eps;    // [B x L], externally supplied noise

  std::size_t size() const { return power.rows(); }
};

inline FrameBatch make_batch(
    const std::vector<std::vector<double>> &power_frames,
    const std::vector<VisualFrame> &vis_frames,
    const std::vector<std::vector<double>> &eps, const ModelConfig &c) {
  const std::size_t B = power_frames.size();
  require(B > 0, "batch must be non-empty");
  require(vis_frames.size() == B && eps.size() == B,
          "batch: component count mismatch");
  FrameBatch batch;
  batch.power = ad::Tensor::zeros({B, c.freq_bins});
  batch.vis = ad::Tensor::zeros({B, c.vis_dim()});
  batch.eps = ad::Tensor::zeros({B, c.latent_dim});
  for (std::size_t r = 0; r < B; ++r) {
    require(power_frames[r].size() == c.freq_bins,
            "batch: power frame length mismatch");
    detail::check_vis(vis_frames[r], c);
    require(eps[r].size() == c.latent_dim, "batch: eps length mismatch");
    for (std::size_t f = 0; f < c.freq_bins; ++f) {
      require(power_frames[r][f] >= 0.0, "batch: negative power entry");
      batch.power.at(r, f) = power_frames[r][f];
    }
    for (std::size_t d = 0; d < c.lip_dim; ++d)
      batch.vis.at(r, d) = vis_frames[r].lip[d];
    for (std::size_t d = 0; d < c.id_dim; ++d)
      batch.vis.at(r, c.lip_dim + d) = vis_frames[r].identity[d];
    for (std::size_t l = 0; l < c.latent_dim; ++l)
      batch.eps.at(r, l) = eps[r][l];
  }
  return batch;
}

// Builds the Eq.-style objective on the tape, registering every parameter
// (in WaeParams::all() order) so gradients line up with the optimizer state.
inline ad::Tape::Var build_loss(ad::Tape &tape, const FrameBatch &batch,
                                const WaeParams &params,
                                const ModelConfig &c) {
  c.validate();
  const std::size_t B = batch.size();
  require(B > 0, "loss: empty batch");
  require(batch.power.cols() == c.freq_bins && batch.vis.cols() == c.vis_dim() &&
              batch.eps.cols() == c.latent_dim,
          "loss: batch dims inconsistent with model config");

  using Var = ad::Tape::Var;
  std::vector<Var> pv;
  {
    auto tensors = params.all();
    const auto &names = WaeParams::names();
    pv.reserve(tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i)
      pv.push_back(tape.param(*tensors[i], names[i]));
  }
  // indices into pv, mirroring WaeParams::all()
  enum {
    kEncAudioW, kEncAudioB, kEncVisW, kEncVisB,
    kEncMuAW, kEncMuVW, kEncMuB, kEncSdAW, kEncSdVW, kEncSdB,
    kPriVisW, kPriVisB, kPriMuW, kPriMuB, kPriSdW, kPriSdB,
    kDecVisW, kDecVisB, kDecZW, kDecHW, kDecHB, kDecOutW, kDecOutB
  };

  ad::Tensor logp = batch.power;
  for (double &x : logp.v) {
    require(x >= 0.0, "loss: negative power entry");
    x = std::log(x + c.variance_floor);
  }

  const Var vP = tape.input(batch.power);
  const Var vLogP = tape.input(std::move(logp));
  const Var vVis = tape.input(batch.vis);
  const Var vEps = tape.input(batch.eps);
  const Var zb_L = tape.input(ad::Tensor::zeros({c.latent_dim}));
  const Var zb_H = tape.input(ad::Tensor::zeros({c.hidden}));

  // encoder
  const Var ha = tape.tanh_(tape.affine(vLogP, pv[kEncAudioW], pv[kEncAudioB]));
  Var mu, raw_sd;
  if (c.use_visual) {
    const Var hv = tape.relu_(tape.affine(vVis, pv[kEncVisW], pv[kEncVisB]));
    mu = tape.add(tape.affine(ha, pv[kEncMuAW], pv[kEncMuB]),
                  tape.affine(hv, pv[kEncMuVW], zb_L));
    raw_sd = tape.add(tape.affine(ha, pv[kEncSdAW], pv[kEncSdB]),
                      tape.affine(hv, pv[kEncSdVW], zb_L));
  } else {
    mu = tape.affine(ha, pv[kEncMuAW], pv[kEncMuB]);
    raw_sd = tape.affine(ha, pv[kEncSdAW], pv[kEncSdB]);
  }
  const Var floorL =
      tape.input(ad::Tensor::full({B, c.latent_dim}, c.latent_std_floor));
  const Var sd = tape.add(tape.softplus_(raw_sd), floorL);

  // reparameterization
  const Var z = tape.add(mu, tape.mul(sd, vEps));

  // prior
  Var pmu, psd;
  if (c.use_visual) {
    const Var hp = tape.relu_(tape.affine(vVis, pv[kPriVisW], pv[kPriVisB]));
    pmu = tape.affine(hp, pv[kPriMuW], pv[kPriMuB]);
    psd = tape.add(
        tape.softplus_(tape.affine(hp, pv[kPriSdW], pv[kPriSdB])), floorL);
  } else {
    pmu = tape.input(ad::Tensor::zeros({B, c.latent_dim}));
    psd = tape.input(ad::Tensor::full({B, c.latent_dim}, 1.0));
  }

  // decoder
  Var hpre;
  if (c.use_visual) {
    const Var hdv = tape.relu_(tape.affine(vVis, pv[kDecVisW], pv[kDecVisB]));
    hpre = tape.add(tape.affine(z, pv[kDecZW], pv[kDecHB]),
                    tape.affine(hdv, pv[kDecHW], zb_H));
  } else {
    hpre = tape.affine(z, pv[kDecZW], pv[kDecHB]);
  }
  const Var hd = tape.tanh_(hpre);
  const Var floorF =
      tape.input(ad::Tensor::full({B, c.freq_bins}, c.variance_floor));
  const Var variance = tape.add(
      tape.softplus_(tape.affine(hd, pv[kDecOutW], pv[kDecOutB])), floorF);

  // reconstruction NLL: sum over bins and frames of p/v + ln v
  const Var nll = tape.sum(tape.add(tape.div(vP, variance), tape.log_(variance)));

  // regularizer
  Var reg;
  if (c.regularizer == Regularizer::wasserstein) {
    reg = tape.sum(tape.add(tape.square(tape.sub(mu, pmu)),
                            tape.square(tape.sub(sd, psd))));
  } else {
    const Var half = tape.input(ad::Tensor::full({B, c.latent_dim}, 0.5));
    const Var frac = tape.div(tape.add(tape.square(sd),
                                       tape.square(tape.sub(mu, pmu))),
                              tape.scale(tape.square(psd), 2.0));
    reg = tape.sum(
        tape.sub(tape.add(tape.sub(tape.log_(psd), tape.log_(sd)), frac), half));
  }

  return tape.scale(tape.add(nll, tape.scale(reg, c.lambda)),
                    1.0 / static_cast<double>(B));
}

inline double loss_value(const FrameBatch &batch, const WaeParams &params,
                         const ModelConfig &c) {
  ad::Tape tape;
  return tape.val(build_loss(tape, batch, params, c)).v[0];
}

inline std::pair<double, std::vector<ad::Tensor>> loss_and_grads(
    const FrameBatch &batch, const WaeParams &params, const ModelConfig &c) {
  ad::Tape tape;
  const ad::Tape::Var loss = build_loss(tape, batch, params, c);
  return {tape.val(loss).v[0], tape.backward(loss)};
}

}  // namespace uv::model

#endif  // UNIVOICE_MODEL_HPP_
