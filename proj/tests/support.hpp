// tests/support.hpp
//
// Shared helpers for the test suites: scratch directories, a naive DFT
// oracle, signal generators, and simple statistics.

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

#ifndef UNIVOICE_TESTS_SUPPORT_HPP_
#define UNIVOICE_TESTS_SUPPORT_HPP_

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "univoice/dsp.hpp"
#include "univoice/rng.hpp"

namespace test_support {

namespace fs = std::filesystem;

// unique scratch directory, removed on destruction
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("univoice_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path &path() const { return path_; }

 private:
  fs::path path_;
};

// O(n^2) reference DFT, independent of the library FFT
inline std::vector<std::complex<double>> naive_dft(
    const std::vector<double> &x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline uv::dsp::Waveform random_wave(std::size_t n, std::uint64_t seed,
                                     double amp = 0.3, int rate = 16000) {
  uv::dsp::Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * uv::rng::gaussian(uv::rng::key({seed, i}));
  return w;
}

inline uv::dsp::Waveform sine_wave(std::size_t n, double freq_hz, int rate,
                                   double amp = 0.5) {
  uv::dsp::Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz *
                                  static_cast<double>(i) / rate);
  return w;
}

// harmonic stack with a syllabic envelope; a stand-in for speech in
// metric self-tests
inline uv::dsp::Waveform speechlike_wave(std::size_t n, std::uint64_t seed,
                                         int rate = 16000) {
  uv::dsp::Waveform w;
  w.sample_rate = rate;
  w.samples.assign(n, 0.0);
  const double f0 = 110.0 + 60.0 * uv::rng::u01(uv::rng::key({seed, 1}));
  for (int h = 1; h <= 12; ++h) {
    const double amp = 0.15 / h;
    const double phase =
        2.0 * std::numbers::pi * uv::rng::u01(uv::rng::key({seed, 2, (std::uint64_t)h}));
    for (std::size_t i = 0; i < n; ++i)
      w.samples[i] += amp * std::sin(2.0 * std::numbers::pi * f0 * h * i / rate + phase);
  }
  // 4 Hz syllabic modulation plus a slow random on/off gate
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double syllable =
        0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * 4.0 * t);
    const double gate =
        0.3 + 0.7 * uv::rng::u01(uv::rng::key({seed, 3, (std::uint64_t)(t * 2.5)}));
    w.samples[i] *= syllable * gate;
  }
  return w;
}

inline double energy(const std::vector<double> &v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

// mean and standard error from i.i.d.-ish batch summaries
inline MeanSe mean_se(const std::vector<double> &values) {
  MeanSe r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - r.mean) * (v - r.mean);
  var /= static_cast<double>(values.size() - 1);
  r.se = std::sqrt(var / static_cast<double>(values.size()));
  return r;
}

}  // namespace test_support

#endif  // UNIVOICE_TESTS_SUPPORT_HPP_
