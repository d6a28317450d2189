// univoice/metrics.hpp
//
// Objective evaluation: signal-to-distortion ratio and short-time objective
// intelligibility. STOI follows the standard published procedure: 10 kHz
// internal rate, energy-based silent-frame removal over a 40 dB range,
// 512-point STFT of 256-sample Hann frames at 50% overlap, 15 one-third-
// octave bands from 150 Hz, 30-frame segments with -15 dB clipping of the
// normalized estimate envelope, and an average of per-band per-segment
// correlations.

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

#ifndef UNIVOICE_METRICS_HPP_
#define UNIVOICE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "univoice/common.hpp"
#include "univoice/dsp.hpp"

namespace uv::metrics {

inline constexpr double kSdrCapDb = 100.0;

inline double sdr(const dsp::Waveform &ref, const dsp::Waveform &est) {
  require(ref.sample_rate == est.sample_rate, "sdr: sample rates differ");
  require(ref.samples.size() == est.samples.size(),
          "sdr: length mismatch ", ref.samples.size(), " vs ",
          est.samples.size());
  double ref_e = 0.0, err_e = 0.0;
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    const double r = ref.samples[i];
    const double d = r - est.samples[i];
    ref_e += r * r;
    err_e += d * d;
  }
  require(ref_e > 0.0, "sdr: silent reference");
  if (err_e < 1e-10 * ref_e) return kSdrCapDb;
  return 10.0 * std::log10(ref_e / err_e);
}

namespace detail {

inline double bessel_i0(double x) {
  double term = 1.0, sum = 1.0;
  const double half = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half / k) * (half / k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

inline double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Band-limited rational resampling: windowed sinc, Kaiser window (beta 8.6),
// 64 taps per output phase. Output length ceil(len * target / source).
inline dsp::Waveform resample(const dsp::Waveform &wav, int target_rate) {
  wav.validate();
  require(target_rate > 0, "resample: target rate must be positive");
  if (target_rate == wav.sample_rate) return wav;

  const double ratio = static_cast<double>(target_rate) / wav.sample_rate;
  const std::size_t out_len = static_cast<std::size_t>(
      std::ceil(static_cast<double>(wav.samples.size()) * ratio));
  const double cutoff = std::fmin(1.0, ratio);
  const int half_width = 32;
  const double beta = 8.6;
  const double i0_beta = detail::bessel_i0(beta);

  dsp::Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) / ratio;
    const long lo = std::lround(std::ceil(t - half_width));
    const long hi = std::lround(std::floor(t + half_width));
    double acc = 0.0;
    for (long j = std::max(0L, lo);
         j <= std::min<long>(static_cast<long>(wav.samples.size()) - 1, hi);
         ++j) {
      const double u = t - static_cast<double>(j);
      const double r = u / half_width;
      const double win = detail::bessel_i0(beta * std::sqrt(1.0 - r * r)) / i0_beta;
      acc += wav.samples[j] * cutoff * detail::sinc(cutoff * u) * win;
    }
    out.samples[m] = acc;
  }
  return out;
}

namespace detail {

inline constexpr int kStoiRate = 10000;
inline constexpr std::size_t kStoiFrame = 256;
inline constexpr std::size_t kStoiHop = 128;
inline constexpr std::size_t kStoiFft = 512;
inline constexpr std::size_t kStoiBands = 15;
inline constexpr double kStoiLowestBand = 150.0;
inline constexpr std::size_t kStoiSegment = 30;
inline constexpr double kStoiDynRange = 40.0;
inline constexpr double kStoiBeta = -15.0;

// MATLAB-style Hann (no zero endpoints)
inline std::vector<double> stoi_window() {
  std::vector<double> w(kStoiFrame);
  for (std::size_t k = 0; k < kStoiFrame; ++k)
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (k + 1) /
                                 (kStoiFrame + 1)));
  return w;
}

// Drop frames whose reference energy is more than 40 dB below the loudest
// frame; both signals are rebuilt by overlap-adding the kept windowed frames.
inline void remove_silent_frames(std::vector<double> &x,
                                 std::vector<double> &y) {
  const auto w = stoi_window();
  std::vector<std::size_t> offsets;
  for (std::size_t off = 0; off + kStoiFrame <= x.size(); off += kStoiHop)
    offsets.push_back(off);
  require(!offsets.empty(), "stoi: too short after silence removal");

  std::vector<double> energy_db(offsets.size());
  double max_db = -1e300;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    double e = 0.0;
    for (std::size_t k = 0; k < kStoiFrame; ++k) {
      const double v = x[offsets[i] + k] * w[k];
      e += v * v;
    }
    energy_db[i] = 20.0 * std::log10(std::sqrt(e) + 1e-30);
    max_db = std::fmax(max_db, energy_db[i]);
  }

  std::vector<double> xs, ys;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (energy_db[i] <= max_db - kStoiDynRange) continue;
    const std::size_t out_off = kept * kStoiHop;
    if (xs.size() < out_off + kStoiFrame) {
      xs.resize(out_off + kStoiFrame, 0.0);
      ys.resize(out_off + kStoiFrame, 0.0);
    }
    for (std::size_t k = 0; k < kStoiFrame; ++k) {
      xs[out_off + k] += x[offsets[i] + k] * w[k];
      ys[out_off + k] += y[offsets[i] + k] * w[k];
    }
    ++kept;
  }
  x = std::move(xs);
  y = std::move(ys);
}

// one-third-octave band envelopes: [bands x frames]
inline std::vector<std::vector<double>> band_envelopes(
    const std::vector<double> &sig) {
  const auto w = stoi_window();
  std::vector<std::size_t> offsets;
  for (std::size_t off = 0; off + kStoiFrame <= sig.size(); off += kStoiHop)
    offsets.push_back(off);

  const std::size_t n_bins = kStoiFft / 2 + 1;
  std::vector<std::vector<double>> power(offsets.size(),
                                         std::vector<double>(n_bins));
  std::vector<std::complex<double>> buf(kStoiFft);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t k = 0; k < kStoiFrame; ++k)
      buf[k] = {sig[offsets[i] + k] * w[k], 0.0};
    dsp::detail::fft(buf, false);
    for (std::size_t b = 0; b < n_bins; ++b) power[i][b] = std::norm(buf[b]);
  }

  std::vector<std::vector<double>> env(
      kStoiBands, std::vector<double>(offsets.size(), 0.0));
  for (std::size_t j = 0; j < kStoiBands; ++j) {
    const double cf = kStoiLowestBand * std::pow(2.0, static_cast<double>(j) / 3.0);
    const double f_lo = cf * std::pow(2.0, -1.0 / 6.0);
    const double f_hi = cf * std::pow(2.0, 1.0 / 6.0);
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * kStoiRate / kStoiFft;
      if (f < f_lo || f >= f_hi) continue;
      for (std::size_t i = 0; i < offsets.size(); ++i)
        env[j][i] += power[i][b];
    }
    for (std::size_t i = 0; i < offsets.size(); ++i)
      env[j][i] = std::sqrt(env[j][i]);
  }
  return env;
}

}  // namespace detail

inline double stoi(const dsp::Waveform &ref, const dsp::Waveform &est) {
  require(ref.sample_rate == est.sample_rate, "stoi: sample rates differ");
  require(ref.samples.size() == est.samples.size(), "stoi: length mismatch ",
          ref.samples.size(), " vs ", est.samples.size());
  require(static_cast<double>(ref.samples.size()) / ref.sample_rate >= 0.5,
          "stoi: too short, need at least 0.5 s");

  std::vector<double> x = resample(ref, detail::kStoiRate).samples;
  std::vector<double> y = resample(est, detail::kStoiRate).samples;
  detail::remove_silent_frames(x, y);

  const auto ex = detail::band_envelopes(x);
  const auto ey = detail::band_envelopes(y);
  const std::size_t frames = ex.empty() ? 0 : ex[0].size();
  require(frames >= detail::kStoiSegment,
          "stoi: too short after silence removal");

  const double clip = std::pow(10.0, -detail::kStoiBeta / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xs(detail::kStoiSegment), ys(detail::kStoiSegment);
  for (std::size_t m = detail::kStoiSegment - 1; m < frames; ++m) {
    for (std::size_t j = 0; j < detail::kStoiBands; ++j) {
      double nx = 0.0, ny = 0.0;
      for (std::size_t s = 0; s < detail::kStoiSegment; ++s) {
        xs[s] = ex[j][m - detail::kStoiSegment + 1 + s];
        ys[s] = ey[j][m - detail::kStoiSegment + 1 + s];
        nx += xs[s] * xs[s];
        ny += ys[s] * ys[s];
      }
      const double alpha = std::sqrt(nx) / (std::sqrt(ny) + 1e-30);
      double mx = 0.0, my = 0.0;
      for (std::size_t s = 0; s < detail::kStoiSegment; ++s) {
        ys[s] = std::fmin(alpha * ys[s], xs[s] * (1.0 + clip));
        mx += xs[s];
        my += ys[s];
      }
      mx /= detail::kStoiSegment;
      my /= detail::kStoiSegment;
      double cov = 0.0, vx = 0.0, vy = 0.0;
      for (std::size_t s = 0; s < detail::kStoiSegment; ++s) {
        cov += (xs[s] - mx) * (ys[s] - my);
        vx += (xs[s] - mx) * (xs[s] - mx);
        vy += (ys[s] - my) * (ys[s] - my);
      }
      total += cov / (std::sqrt(vx) * std::sqrt(vy) + 1e-30);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline MetricStats aggregate(const std::vector<double> &values) {
  require(!values.empty(), "aggregate: no values");
  MetricStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(values.size()));
  return s;
}

}  // namespace uv::metrics

#endif  // UNIVOICE_METRICS_HPP_
