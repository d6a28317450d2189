// univoice/data.hpp
//
// File I/O (mono PCM-16 WAV, UVFT feature tensors, JSON manifests), SNR-exact
// mixture construction, and the synthetic audio-visual dataset generator that
// makes the unsupervised pipeline verifiable end to end: the generator draws
// from exactly the model family the system assumes, with lip features that
// are an invertible (noisy linear) readout of the latent trajectory.

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

#ifndef UNIVOICE_DATA_HPP_
#define UNIVOICE_DATA_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "univoice/common.hpp"
#include "univoice/dsp.hpp"
#include "univoice/model.hpp"
#include "univoice/rng.hpp"

namespace uv::data {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// little-endian byte packing

namespace detail {

inline void put_u16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string &out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string &bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(u(1)); }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string raw(std::size_t n) {
    require(pos_ + n <= bytes_.size(), what_, ": truncated payload");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) {
    require(pos_ + n <= bytes_.size(), what_, ": truncated payload");
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  const std::string &bytes() const { return bytes_; }

 private:
  std::uint64_t u(int n) {
    require(pos_ + static_cast<std::size_t>(n) <= bytes_.size(), what_,
            ": truncated payload");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += n;
    return v;
  }

  const std::string &bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: ", path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const fs::path &path, const std::string &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open file for writing: ", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), "write failed: ", path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// WAV, mono PCM-16

inline dsp::Waveform read_wav(const fs::path &path) {
  const std::string bytes = detail::read_file(path);
  detail::Reader r(bytes, "wav");
  require(r.raw(4) == "RIFF", "wav: bad magic, not a RIFF file");
  const std::uint32_t riff_size = r.u32();
  require(riff_size + 8 == bytes.size(),
          "wav: trailing garbage or truncated file");
  require(r.raw(4) == "WAVE", "wav: not a WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (r.remaining() > 0) {
    const std::string id = r.raw(4);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      require(size >= 16, "wav: malformed fmt chunk");
      const std::uint16_t format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (size > 16) r.skip(size - 16);
      require(format == 1, "wav: unsupported encoding, expected PCM");
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, "wav: data chunk before fmt chunk");
      require(channels == 1, "wav: unsupported channel count ", channels);
      require(bits == 16, "wav: unsupported sample width ", bits, " bits");
      require(size % 2 == 0, "wav: odd data chunk size");
      const std::string payload = r.raw(size);
      require(r.remaining() == 0, "wav: trailing garbage after data chunk");
      dsp::Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto lo = static_cast<unsigned char>(payload[2 * i]);
        const auto hi = static_cast<unsigned char>(payload[2 * i + 1]);
        const auto s = static_cast<std::int16_t>(
            static_cast<std::uint16_t>(lo) | (static_cast<std::uint16_t>(hi) << 8));
        w.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return w;
    } else {
      r.skip(size + (size % 2));  // chunks are word-aligned
    }
  }
  fail("wav: missing data chunk");
}

inline void write_wav(const dsp::Waveform &wave, const fs::path &path) {
  wave.validate();
  std::string payload;
  payload.reserve(wave.samples.size() * 2);
  for (double x : wave.samples) {
    const double clamped = std::fmin(1.0, std::fmax(-1.0, x));
    long q = std::lrint(clamped * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    detail::put_u16(payload, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::string out;
  out.reserve(payload.size() + 44);
  out += "RIFF";
  detail::put_u32(out, static_cast<std::uint32_t>(36 + payload.size()));
  out += "WAVE";
  out += "fmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);  // PCM
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(wave.sample_rate * 2));
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  detail::write_file(path, out);
}

// ---------------------------------------------------------------------------
// UVFT feature tensors: magic "UVFT", version u32, dtype u8 (1 = f32),
// ndim u8 (= 2), dims u32 x2 (N, D), payload N*D f32 LE row-major

struct FeatureFile {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // row-major [frames x dim]

  float at(std::size_t n, std::size_t d) const { return values[n * dim + d]; }
};

inline constexpr std::uint32_t kUvftVersion = 1;

inline FeatureFile read_uvft(const fs::path &path) {
  const std::string bytes = detail::read_file(path);
  detail::Reader r(bytes, "uvft");
  require(r.raw(4) == "UVFT", "uvft: bad magic");
  require(r.u32() == kUvftVersion, "uvft: unsupported version");
  require(r.u8() == 1, "uvft: unsupported dtype, expected f32");
  require(r.u8() == 2, "uvft: unsupported ndim, expected 2");
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  require(n >= 1 && d >= 1, "uvft: dimensions must be >= 1");
  const std::uint64_t numel = static_cast<std::uint64_t>(n) * d;
  require(numel <= (1ULL << 30), "uvft: dim overflow");
  require(r.remaining() >= numel * 4, "uvft: truncated payload");
  require(r.remaining() == numel * 4, "uvft: trailing garbage");
  FeatureFile f;
  f.frames = n;
  f.dim = d;
  f.values.resize(numel);
  for (std::uint64_t i = 0; i < numel; ++i) f.values[i] = r.f32();
  for (float v : f.values)
    require(std::isfinite(v), "uvft: non-finite feature value");
  return f;
}

inline void write_uvft(const FeatureFile &f, const fs::path &path) {
  require(f.frames >= 1 && f.dim >= 1, "uvft: dimensions must be >= 1");
  require(f.values.size() == f.frames * f.dim,
          "uvft: value count inconsistent with dims");
  std::string out = "UVFT";
  detail::put_u32(out, kUvftVersion);
  out.push_back(1);  // f32
  out.push_back(2);  // ndim
  detail::put_u32(out, static_cast<std::uint32_t>(f.frames));
  detail::put_u32(out, static_cast<std::uint32_t>(f.dim));
  for (float v : f.values) detail::put_f32(out, v);
  detail::write_file(path, out);
}

// ---------------------------------------------------------------------------
// manifest

struct ManifestEntry {
  std::string id;
  std::string wav;
  std::string lip;
  std::string ident;
  std::string split;
};

using Manifest = std::vector<ManifestEntry>;

inline void save_manifest(const Manifest &m, const fs::path &path) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto &e : m) {
    arr.push_back({{"id", e.id},
                   {"wav", e.wav},
                   {"lip", e.lip},
                   {"ident", e.ident},
                   {"split", e.split}});
  }
  detail::write_file(path, arr.dump(2) + "\n");
}

// Paths in the manifest are resolved relative to the manifest's directory.
inline Manifest load_manifest(const fs::path &path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception &e) {
    fail("manifest: invalid JSON: ", e.what());
  }
  require(doc.is_array(), "manifest: expected a JSON array");
  const fs::path base = path.parent_path();
  Manifest m;
  std::vector<std::string> seen;
  for (const auto &rec : doc) {
    require(rec.is_object(), "manifest: records must be objects");
    for (const std::string key : {"id", "wav", "lip", "ident", "split"})
      require(rec.contains(key), "manifest: record missing key '", key, "'");
    ManifestEntry e;
    e.id = rec.at("id").get<std::string>();
    e.wav = (base / rec.at("wav").get<std::string>()).string();
    e.lip = (base / rec.at("lip").get<std::string>()).string();
    e.ident = (base / rec.at("ident").get<std::string>()).string();
    e.split = rec.at("split").get<std::string>();
    for (const auto &s : seen)
      require(s != e.id, "manifest: duplicate id '", e.id, "'");
    seen.push_back(e.id);
    for (const std::string &f : {e.wav, e.lip, e.ident})
      require(fs::exists(f), "manifest: referenced file missing: ", f);
    m.push_back(std::move(e));
  }
  return m;
}

// ---------------------------------------------------------------------------
// mixtures

struct MixResult {
  dsp::Waveform mixture;
  dsp::Waveform scaled_interferer;  // the exact component added to clean
  double alpha = 0.0;
};

// Trims or loops the interferer to the clean length, then scales it so the
// resulting clean-to-interferer energy ratio is exactly snr_db.
inline MixResult mix_components(const dsp::Waveform &clean,
                                const dsp::Waveform &interferer,
                                double snr_db) {
  clean.validate();
  interferer.validate();
  require(clean.sample_rate == interferer.sample_rate,
          "mix: sample rates differ");
  require(!clean.samples.empty() && !interferer.samples.empty(),
          "mix: empty input");

  const std::size_t n = clean.samples.size();
  std::vector<double> intf(n);
  for (std::size_t i = 0; i < n; ++i)
    intf[i] = interferer.samples[i % interferer.samples.size()];

  double ce = 0.0, ie = 0.0;
  for (double x : clean.samples) ce += x * x;
  for (double x : intf) ie += x * x;
  require(ie > 0.0, "mix: silent interferer");
  require(ce > 0.0, "mix: silent clean signal");

  const double alpha = std::sqrt(ce / (ie * std::pow(10.0, snr_db / 10.0)));
  MixResult out;
  out.alpha = alpha;
  out.scaled_interferer.sample_rate = clean.sample_rate;
  out.mixture.sample_rate = clean.sample_rate;
  out.scaled_interferer.samples.resize(n);
  out.mixture.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.scaled_interferer.samples[i] = alpha * intf[i];
    out.mixture.samples[i] = clean.samples[i] + alpha * intf[i];
  }
  return out;
}

inline dsp::Waveform mix(const dsp::Waveform &clean,
                         const dsp::Waveform &interferer, double snr_db) {
  return mix_components(clean, interferer, snr_db).mixture;
}

// ---------------------------------------------------------------------------
// visual feature alignment

// Per-utterance visual stream after alignment: one lip vector per STFT frame
// plus the static identity vector (row 0 of the identity file).
struct VisualFeatures {
  std::vector<std::vector<double>> lip;  // [N][lip_dim]
  std::vector<double> identity;

  std::size_t frames() const { return lip.size(); }
  model::VisualFrame frame(std::size_t n) const {
    return model::VisualFrame{lip[n], identity};
  }

  // content digest; inference keys per-speaker sampling chains with this
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto &row : lip) h = rng::mix64(h ^ rng::fnv1a(row));
    return rng::mix64(h ^ rng::fnv1a(identity));
  }
};

// Linear interpolation along time to n_frames (video rate generally differs
// from the STFT frame rate).
inline std::vector<std::vector<double>> interp_frames(const FeatureFile &f,
                                                      std::size_t n_frames) {
  require(n_frames >= 1, "feature alignment: need at least one frame");
  std::vector<std::vector<double>> out(n_frames, std::vector<double>(f.dim));
  for (std::size_t n = 0; n < n_frames; ++n) {
    double pos = 0.0;
    if (n_frames > 1 && f.frames > 1)
      pos = static_cast<double>(n) * (f.frames - 1) / (n_frames - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, f.frames - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t d = 0; d < f.dim; ++d)
      out[n][d] = (1.0 - frac) * f.at(lo, d) + frac * f.at(hi, d);
  }
  return out;
}

inline VisualFeatures align_features(const FeatureFile &lip,
                                     const FeatureFile &ident,
                                     std::size_t n_frames) {
  VisualFeatures v;
  v.lip = interp_frames(lip, n_frames);
  v.identity.resize(ident.dim);
  for (std::size_t d = 0; d < ident.dim; ++d)
    v.identity[d] = ident.at(0, d);
  return v;
}

// ---------------------------------------------------------------------------
// dataset loading (training-side view of a manifest)

struct Utterance {
  std::string id;
  std::string split;
  std::vector<std::vector<double>> power;  // [N][F]
  VisualFeatures vis;
};

inline std::vector<Utterance> load_dataset(const Manifest &m,
                                           const dsp::StftConfig &stft_cfg,
                                           const model::ModelConfig &mc) {
  require(!m.empty(), "dataset: empty manifest");
  std::vector<Utterance> out;
  out.reserve(m.size());
  for (const auto &e : m) {
    dsp::Waveform wav = read_wav(e.wav);
    const dsp::PowerSpectrogram ps =
        dsp::power_spectrum(dsp::stft(wav, stft_cfg));
    require(ps.freq_bins == mc.freq_bins, "dataset: utterance '", e.id,
            "' has ", ps.freq_bins, " bins, model expects ", mc.freq_bins);
    FeatureFile lip = read_uvft(e.lip);
    FeatureFile ident = read_uvft(e.ident);
    require(lip.dim == mc.lip_dim, "dataset: utterance '", e.id,
            "' lip dim ", lip.dim, ", model expects ", mc.lip_dim);
    require(ident.dim == mc.id_dim, "dataset: utterance '", e.id,
            "' identity dim ", ident.dim, ", model expects ", mc.id_dim);
    Utterance u;
    u.id = e.id;
    u.split = e.split;
    u.power.reserve(ps.frames);
    for (std::size_t n = 0; n < ps.frames; ++n) u.power.push_back(ps.frame(n));
    u.vis = align_features(lip, ident, ps.frames);
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// synthetic dataset

struct SynthConfig {
  std::size_t n_utts = 200;
  std::size_t frames_per_utt = 50;
  std::size_t latent_dim = 8;
  std::size_t lip_dim = 16;
  std::size_t id_dim = 4;
  std::size_t gt_hidden = 32;
  std::uint64_t seed = 0;
  dsp::StftConfig stft{256, 64};
  int sample_rate = 16000;

  void validate() const {
    require(n_utts > 0 && frames_per_utt > 0 && latent_dim > 0 &&
                lip_dim > 0 && id_dim > 0 && gt_hidden > 0,
            "synth config: all sizes must be positive");
    require(lip_dim >= latent_dim,
            "synth config: lip_dim must be >= latent_dim");
    require(gt_hidden >= 2 * latent_dim,
            "synth config: gt_hidden must be >= 2*latent_dim");
    stft.validate();
    require(sample_rate > 0, "synth config: sample rate must be positive");
  }
};

struct GroundTruth {
  model::ModelConfig cfg;
  model::WaeParams params;
  std::vector<std::vector<double>> lip_map;  // A, [lip_dim][latent_dim]
};

namespace detail {

// Orthonormal-column matrix [rows x cols] by Gram-Schmidt on keyed Gaussians.
inline std::vector<std::vector<double>> orthonormal_columns(
    std::size_t rows, std::size_t cols, std::uint64_t key) {
  std::vector<std::vector<double>> a(rows, std::vector<double>(cols, 0.0));
  std::vector<std::vector<double>> col(cols, std::vector<double>(rows));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i)
      col[j][i] = rng::gaussian(rng::key({key, j, i}));
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < rows; ++i) dot += col[j][i] * col[k][i];
      for (std::size_t i = 0; i < rows; ++i) col[j][i] -= dot * col[k][i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) norm += col[j][i] * col[j][i];
    norm = std::sqrt(norm);
    require(norm > 1e-8, "orthonormal_columns: degenerate draw");
    for (std::size_t i = 0; i < rows; ++i) col[j][i] /= norm;
  }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a[i][j] = col[j][i];
  return a;
}

}  // namespace detail

// The ground-truth model behind the generator. The decoder is a random draw
// from the model family; the encoder and prior are constructed to read the
// latent straight off the lip features (mu = A^T l realized exactly through
// the relu hidden layer as relu(A^T l) - relu(-A^T l)), which is what makes
// the visual cue informative for inference on this data.
inline GroundTruth build_ground_truth(const SynthConfig &sc) {
  sc.validate();
  GroundTruth gt;
  gt.cfg.freq_bins = sc.stft.freq_bins();
  gt.cfg.latent_dim = sc.latent_dim;
  gt.cfg.lip_dim = sc.lip_dim;
  gt.cfg.id_dim = sc.id_dim;
  gt.cfg.hidden = sc.gt_hidden;
  gt.cfg.lambda = 0.1;
  gt.cfg.use_visual = true;
  gt.cfg.validate();

  const std::size_t L = sc.latent_dim, H = sc.gt_hidden, F = gt.cfg.freq_bins;
  const std::size_t Dl = sc.lip_dim, Dv = gt.cfg.vis_dim();
  const std::uint64_t root = rng::key({sc.seed, 0x47545247ULL});

  gt.lip_map = detail::orthonormal_columns(Dl, L, rng::key({root, 1}));
  gt.params = model::WaeParams::zeros(gt.cfg);
  model::WaeParams &p = gt.params;

  auto fill_inverting_branch = [&](ad::Tensor &vis_w, ad::Tensor &mu_w) {
    // visual hidden: h[0..L) = relu(+A^T l), h[L..2L) = relu(-A^T l)
    for (std::size_t d = 0; d < Dl; ++d)
      for (std::size_t l = 0; l < L; ++l) {
        vis_w.at(d, l) = gt.lip_map[d][l];
        vis_w.at(d, L + l) = -gt.lip_map[d][l];
      }
    for (std::size_t l = 0; l < L; ++l) {
      mu_w.at(l, l) = 1.0;
      mu_w.at(L + l, l) = -1.0;
    }
  };

  fill_inverting_branch(p.enc_vis_w, p.enc_mu_vw);
  for (std::size_t l = 0; l < L; ++l)
    p.enc_sd_b.v[l] = softplus_inv(0.15);

  fill_inverting_branch(p.pri_vis_w, p.pri_mu_w);
  for (std::size_t l = 0; l < L; ++l)
    p.pri_sd_b.v[l] = softplus_inv(0.2);

  // random decoder; scales chosen for a variance surface with useful
  // contrast across z (roughly 12 dB per-bin dynamic range)
  p.dec_vis_w = ad::Tensor::randn({Dv, H}, rng::key({root, 2}),
                                  1.0 / std::sqrt(static_cast<double>(Dv)));
  p.dec_z_w = ad::Tensor::randn({L, H}, rng::key({root, 3}),
                                1.2 / std::sqrt(static_cast<double>(L)));
  p.dec_h_w = ad::Tensor::randn({H, H}, rng::key({root, 4}),
                                0.8 / std::sqrt(static_cast<double>(H)));
  p.dec_out_w = ad::Tensor::randn({H, F}, rng::key({root, 5}),
                                  2.0 / std::sqrt(static_cast<double>(H)));
  for (std::size_t f = 0; f < F; ++f)
    p.dec_out_b.v[f] = softplus_inv(0.05);
  return gt;
}

// One spectral frame sampled from the zero-mean complex Gaussian with the
// given per-bin variance.
inline std::vector<std::complex<double>> sample_complex_frame(
    std::span<const double> variance, std::uint64_t key) {
  std::vector<std::complex<double>> bins(variance.size());
  for (std::size_t f = 0; f < variance.size(); ++f) {
    const double s = std::sqrt(variance[f] / 2.0);
    bins[f] = {s * rng::gaussian(rng::key({key, f, 0})),
               s * rng::gaussian(rng::key({key, f, 1}))};
  }
  return bins;
}

struct SynthOutput {
  Manifest manifest;  // resolved absolute paths
  GroundTruth gt;
  // generator-side diagnostics for oracle tests
  std::vector<std::vector<std::vector<double>>> latents;  // [utt][frame][L]
};

// Writes WAV + lip/identity UVFT files and manifest.json into out_dir.
// Fully deterministic given cfg.seed; the last 20% of utterances are tagged
// split="test", the rest "train".
inline SynthOutput synth_dataset(const SynthConfig &sc, const fs::path &out_dir) {
  sc.validate();
  fs::create_directories(out_dir);
  SynthOutput out;
  out.gt = build_ground_truth(sc);
  const model::ModelConfig &mc = out.gt.cfg;
  const std::size_t L = sc.latent_dim, Dl = sc.lip_dim, N = sc.frames_per_utt;
  const double ar = 0.9;
  const double innovation = std::sqrt(1.0 - ar * ar);

  const std::size_t n_train =
      sc.n_utts - sc.n_utts / 5;  // 80/20 train/test split by index

  for (std::size_t u = 0; u < sc.n_utts; ++u) {
    const std::uint64_t useed = rng::key({sc.seed, 0x55545400ULL, u});

    std::vector<double> ident(sc.id_dim);
    for (std::size_t d = 0; d < sc.id_dim; ++d)
      ident[d] = rng::gaussian(rng::key({useed, 0x4944ULL, d}));

    std::vector<std::vector<double>> z(N, std::vector<double>(L));
    for (std::size_t l = 0; l < L; ++l)
      z[0][l] = rng::gaussian(rng::key({useed, 0x5a30ULL, l}));
    for (std::size_t n = 1; n < N; ++n)
      for (std::size_t l = 0; l < L; ++l)
        z[n][l] = ar * z[n - 1][l] +
                  innovation * rng::gaussian(rng::key({useed, 0x5a41ULL, n, l}));

    std::vector<std::vector<double>> lips(N, std::vector<double>(Dl));
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t d = 0; d < Dl; ++d) {
        double acc = 0.0;
        for (std::size_t l = 0; l < L; ++l) acc += out.gt.lip_map[d][l] * z[n][l];
        lips[n][d] =
            acc + 0.1 * rng::gaussian(rng::key({useed, 0x4c49ULL, n, d}));
      }

    dsp::ComplexSpectrogram spec;
    spec.freq_bins = mc.freq_bins;
    spec.frames = N;
    spec.config = sc.stft;
    spec.sample_rate = sc.sample_rate;
    spec.bins.assign(mc.freq_bins * N, {0.0, 0.0});
    for (std::size_t n = 0; n < N; ++n) {
      const model::VisualFrame vf{lips[n], ident};
      const std::vector<double> var =
          model::decode(z[n], vf, out.gt.params, mc);
      const auto bins =
          sample_complex_frame(var, rng::key({useed, 0x42494eULL, n}));
      for (std::size_t f = 0; f < mc.freq_bins; ++f) spec.at(f, n) = bins[f];
    }
    dsp::Waveform wav = dsp::istft(spec);

    char name[32];
    std::snprintf(name, sizeof(name), "utt_%04zu", u);
    const std::string base(name);
    write_wav(wav, out_dir / (base + ".wav"));

    FeatureFile lip_f;
    lip_f.frames = N;
    lip_f.dim = Dl;
    lip_f.values.resize(N * Dl);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t d = 0; d < Dl; ++d)
        lip_f.values[n * Dl + d] = static_cast<float>(lips[n][d]);
    write_uvft(lip_f, out_dir / (base + ".lip.uvft"));

    FeatureFile id_f;
    id_f.frames = 1;
    id_f.dim = sc.id_dim;
    id_f.values.resize(sc.id_dim);
    for (std::size_t d = 0; d < sc.id_dim; ++d)
      id_f.values[d] = static_cast<float>(ident[d]);
    write_uvft(id_f, out_dir / (base + ".ident.uvft"));

    ManifestEntry e;
    e.id = base;
    e.wav = base + ".wav";
    e.lip = base + ".lip.uvft";
    e.ident = base + ".ident.uvft";
    e.split = u < n_train ? "train" : "test";
    out.manifest.push_back(e);
    out.latents.push_back(std::move(z));
  }

  Manifest rel = out.manifest;
  save_manifest(rel, out_dir / "manifest.json");
  for (auto &e : out.manifest) {
    e.wav = (out_dir / e.wav).string();
    e.lip = (out_dir / e.lip).string();
    e.ident = (out_dir / e.ident).string();
  }
  return out;
}

// Noise with exactly the low-rank spectral structure the inference-time
// noise model assumes; used by the verification harness.
inline dsp::Waveform nmf_noise(const dsp::StftConfig &stft_cfg,
                               std::size_t n_frames, std::size_t rank,
                               std::uint64_t seed, int sample_rate = 16000) {
  stft_cfg.validate();
  require(n_frames > 0 && rank > 0, "nmf_noise: sizes must be positive");
  const std::size_t F = stft_cfg.freq_bins();
  std::vector<double> w(F * rank), h(rank * n_frames);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = rng::uniform(rng::key({seed, 0x4e57ULL, i}), 0.1, 1.0);
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = rng::uniform(rng::key({seed, 0x4e48ULL, i}), 0.1, 1.0);

  dsp::ComplexSpectrogram spec;
  spec.freq_bins = F;
  spec.frames = n_frames;
  spec.config = stft_cfg;
  spec.sample_rate = sample_rate;
  spec.bins.assign(F * n_frames, {0.0, 0.0});
  std::vector<double> var(F);
  for (std::size_t n = 0; n < n_frames; ++n) {
    for (std::size_t f = 0; f < F; ++f) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rank; ++r)
        acc += w[f * rank + r] * h[r * n_frames + n];
      var[f] = acc;
    }
    const auto bins = sample_complex_frame(var, rng::key({seed, 0x4e42ULL, n}));
    for (std::size_t f = 0; f < F; ++f) spec.at(f, n) = bins[f];
  }
  return dsp::istft(spec);
}

}  // namespace uv::data

#endif  // UNIVOICE_DATA_HPP_
