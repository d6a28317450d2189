// univoice/dsp.hpp
//
// Time-frequency analysis and synthesis. sqrt-Hann analysis/synthesis pair,
// one-sided spectra, no edge padding: frames that would overrun the signal
// are dropped.

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

#ifndef UNIVOICE_DSP_HPP_
#define UNIVOICE_DSP_HPP_

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "univoice/common.hpp"

namespace uv::dsp {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  void validate() const {
    require(sample_rate > 0, "waveform: sample rate must be positive");
    require(all_finite(samples.data(), samples.size()),
            "waveform: non-finite samples");
  }
};

struct StftConfig {
  std::size_t fft_size = 1024;
  std::size_t hop = 256;

  void validate() const {
    require(fft_size > 0 && fft_size % 2 == 0,
            "stft config: fft_size must be positive and even");
    require(hop > 0 && hop <= fft_size, "stft config: 0 < hop <= fft_size");
    require(fft_size % hop == 0,
            "stft config: hop must divide fft_size (overlap-add identity)");
  }
  std::size_t freq_bins() const { return fft_size / 2 + 1; }
  bool operator==(const StftConfig &) const = default;
};

// One-sided complex STFT matrix, stored bin-major: bins[f * frames + n].
struct ComplexSpectrogram {
  std::size_t freq_bins = 0;
  std::size_t frames = 0;
  std::vector<std::complex<double>> bins;
  StftConfig config;
  int sample_rate = 16000;

  std::complex<double> &at(std::size_t f, std::size_t n) {
    return bins[f * frames + n];
  }
  std::complex<double> at(std::size_t f, std::size_t n) const {
    return bins[f * frames + n];
  }
};

struct PowerSpectrogram {
  std::size_t freq_bins = 0;
  std::size_t frames = 0;
  std::vector<double> power;  // [F x N], bin-major

  double &at(std::size_t f, std::size_t n) { return power[f * frames + n]; }
  double at(std::size_t f, std::size_t n) const { return power[f * frames + n]; }

  // per-frame contiguous copy, handy for the frame-wise model
  std::vector<double> frame(std::size_t n) const {
    std::vector<double> out(freq_bins);
    for (std::size_t f = 0; f < freq_bins; ++f) out[f] = at(f, n);
    return out;
  }
};

// periodic sqrt-Hann; the analysis/synthesis pair sums to a constant for
// any hop dividing fft_size
inline std::vector<double> sqrt_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t t = 0; t < n; ++t)
    w[t] = std::sqrt(0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                           static_cast<double>(t) / n)));
  return w;
}

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>> &a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto &x : a) x /= static_cast<double>(n);
}

inline void dft_naive(std::vector<std::complex<double>> &a, bool inverse) {
  const std::size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sgn = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = sgn * 2.0 * std::numbers::pi *
                         static_cast<double>(k * t % n) / n;
      acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  a = std::move(out);
}

inline void fft(std::vector<std::complex<double>> &a, bool inverse) {
  const std::size_t n = a.size();
  if (n > 1 && (n & (n - 1)) == 0)
    fft_radix2(a, inverse);
  else
    dft_naive(a, inverse);
}

}  // namespace detail

inline ComplexSpectrogram stft(const Waveform &wave, const StftConfig &cfg) {
  cfg.validate();
  wave.validate();
  const std::size_t len = wave.samples.size();
  require(len >= cfg.fft_size, "input too short: ", len,
          " samples, need at least ", cfg.fft_size);

  const std::size_t n_frames = 1 + (len - cfg.fft_size) / cfg.hop;
  const std::size_t n_bins = cfg.freq_bins();
  const auto win = sqrt_hann(cfg.fft_size);

  ComplexSpectrogram spec;
  spec.freq_bins = n_bins;
  spec.frames = n_frames;
  spec.config = cfg;
  spec.sample_rate = wave.sample_rate;
  spec.bins.assign(n_bins * n_frames, {0.0, 0.0});

  std::vector<std::complex<double>> buf(cfg.fft_size);
  for (std::size_t n = 0; n < n_frames; ++n) {
    const std::size_t off = n * cfg.hop;
    for (std::size_t t = 0; t < cfg.fft_size; ++t)
      buf[t] = {wave.samples[off + t] * win[t], 0.0};
    detail::fft(buf, false);
    for (std::size_t f = 0; f < n_bins; ++f) spec.at(f, n) = buf[f];
  }
  return spec;
}

inline Waveform istft(const ComplexSpectrogram &spec) {
  spec.config.validate();
  require(spec.freq_bins == spec.config.freq_bins(),
          "istft: spectrogram has ", spec.freq_bins,
          " bins, config expects ", spec.config.freq_bins());
  require(spec.bins.size() == spec.freq_bins * spec.frames,
          "istft: bin storage inconsistent with declared shape");

  const std::size_t nfft = spec.config.fft_size;
  const std::size_t hop = spec.config.hop;
  const std::size_t n_frames = spec.frames;
  const auto win = sqrt_hann(nfft);

  const std::size_t out_len = n_frames == 0 ? 0 : (n_frames - 1) * hop + nfft;
  std::vector<double> out(out_len, 0.0);
  std::vector<double> wsum(out_len, 0.0);

  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t n = 0; n < n_frames; ++n) {
    // rebuild the two-sided spectrum by conjugate symmetry; the real part
    // of the inverse transform discards any imaginary residue in bins 0
    // and fft/2
    for (std::size_t f = 0; f < spec.freq_bins; ++f) buf[f] = spec.at(f, n);
    for (std::size_t f = 1; f + 1 < spec.freq_bins; ++f)
      buf[nfft - f] = std::conj(spec.at(f, n));
    detail::fft(buf, true);
    const std::size_t off = n * hop;
    for (std::size_t t = 0; t < nfft; ++t) {
      out[off + t] += buf[t].real() * win[t];
      wsum[off + t] += win[t] * win[t];
    }
  }
  for (std::size_t t = 0; t < out_len; ++t)
    out[t] = wsum[t] > 1e-8 ? out[t] / wsum[t] : 0.0;

  return Waveform{std::move(out), spec.sample_rate};
}

inline PowerSpectrogram power_spectrum(const ComplexSpectrogram &spec) {
  PowerSpectrogram p;
  p.freq_bins = spec.freq_bins;
  p.frames = spec.frames;
  p.power.resize(spec.bins.size());
  for (std::size_t i = 0; i < spec.bins.size(); ++i)
    p.power[i] = std::norm(spec.bins[i]);
  return p;
}

}  // namespace uv::dsp

#endif  // UNIVOICE_DSP_HPP_
