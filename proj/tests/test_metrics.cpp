// tests/test_metrics.cpp

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
#include <complex>

#include "support.hpp"
#include "univoice/metrics.hpp"

using namespace uv;

TEST_CASE("sdr hand cases", "[metrics]") {
  const auto ref = test_support::speechlike_wave(16000, 1);
  REQUIRE(metrics::sdr(ref, ref) == 100.0);

  // error with exactly 10% of the reference energy
  dsp::Waveform est = ref;
  const double ref_e = test_support::energy(ref.samples);
  auto noise = test_support::random_wave(16000, 2);
  const double scale =
      std::sqrt(0.1 * ref_e / test_support::energy(noise.samples));
  for (std::size_t i = 0; i < est.samples.size(); ++i)
    est.samples[i] += scale * noise.samples[i];
  REQUIRE_THAT(metrics::sdr(ref, est), Catch::Matchers::WithinAbs(10.0, 1e-9));

  dsp::Waveform zero = ref;
  for (double &s : zero.samples) s = 0.0;
  REQUIRE_THAT(metrics::sdr(ref, zero), Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THROWS_WITH(metrics::sdr(zero, ref),
                      Catch::Matchers::ContainsSubstring("silent reference"));

  dsp::Waveform shorter = ref;
  shorter.samples.pop_back();
  REQUIRE_THROWS_WITH(metrics::sdr(ref, shorter),
                      Catch::Matchers::ContainsSubstring("length mismatch"));
}

TEST_CASE("sdr of a scaled copy is -20 log10 |delta|", "[metrics]") {
  const auto ref = test_support::speechlike_wave(12000, 3);
  for (double delta : {0.1, 0.01}) {
    dsp::Waveform est = ref;
    for (double &s : est.samples) s *= 1.0 + delta;
    REQUIRE_THAT(metrics::sdr(ref, est),
                 Catch::Matchers::WithinAbs(-20.0 * std::log10(delta), 1e-9));
  }
}

TEST_CASE("sdr strictly decreases with added noise energy", "[metrics]") {
  const auto ref = test_support::speechlike_wave(12000, 4);
  const auto noise = test_support::random_wave(12000, 5);
  double prev = 1e300;
  for (int level = 1; level <= 5; ++level) {
    dsp::Waveform est = ref;
    const double a = 0.02 * level;
    for (std::size_t i = 0; i < est.samples.size(); ++i)
      est.samples[i] += a * noise.samples[i];
    const double s = metrics::sdr(ref, est);
    REQUIRE(s < prev);
    prev = s;
  }
}

TEST_CASE("resample identity and length", "[metrics]") {
  const auto w = test_support::random_wave(16000, 6);
  const auto same = metrics::resample(w, 16000);
  REQUIRE(same.samples == w.samples);

  const auto down = metrics::resample(w, 10000);
  REQUIRE(down.samples.size() == 10000);
  REQUIRE(down.sample_rate == 10000);
}

TEST_CASE("resampled sine keeps its frequency", "[metrics][oracle]") {
  const auto w = test_support::sine_wave(16000, 1000.0, 16000);
  const auto r = metrics::resample(w, 10000);
  // DFT oracle on a 4096-point slice away from the edges
  std::vector<double> slice(r.samples.begin() + 512,
                            r.samples.begin() + 512 + 4096);
  const auto spec = test_support::naive_dft(slice);
  std::size_t argmax = 0;
  double best = -1.0;
  for (std::size_t k = 1; k < 2048; ++k) {
    if (std::abs(spec[k]) > best) {
      best = std::abs(spec[k]);
      argmax = k;
    }
  }
  const double freq = static_cast<double>(argmax) * 10000.0 / 4096.0;
  REQUIRE_THAT(freq, Catch::Matchers::WithinAbs(1000.0, 10000.0 / 4096.0 + 1e-9));
}

TEST_CASE("stoi of a signal with itself is 1", "[metrics]") {
  const auto x = test_support::speechlike_wave(16000, 7);
  REQUIRE_THAT(metrics::stoi(x, x), Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("stoi is invariant to global scale", "[metrics]") {
  const auto x = test_support::speechlike_wave(16000, 8);
  dsp::Waveform y2 = x;
  for (double &s : y2.samples) s *= 2.0;
  REQUIRE_THAT(metrics::stoi(x, y2), Catch::Matchers::WithinAbs(1.0, 1e-6));

  dsp::Waveform x3 = x;
  for (double &s : x3.samples) s *= 0.25;
  const auto est = test_support::speechlike_wave(16000, 9);
  REQUIRE_THAT(metrics::stoi(x, est),
               Catch::Matchers::WithinAbs(metrics::stoi(x3, est), 1e-6));
}

TEST_CASE("stoi of independent noise against speech stays low",
          "[metrics][oracle]") {
  double mean = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const auto speech = test_support::speechlike_wave(16000, 100 + trial);
    const auto noise = test_support::random_wave(16000, 200 + trial, 0.1);
    const double s = metrics::stoi(speech, noise);
    REQUIRE(s >= -1.0);
    REQUIRE(s <= 1.0);
    mean += s;
  }
  mean /= 20.0;
  REQUIRE(mean < 0.2);
}

TEST_CASE("stoi rejects too-short input", "[metrics]") {
  const auto x = test_support::speechlike_wave(4000, 10);  // 0.25 s
  REQUIRE_THROWS_WITH(metrics::stoi(x, x),
                      Catch::Matchers::ContainsSubstring("too short"));
}

TEST_CASE("metric aggregation", "[metrics]") {
  const auto s = metrics::aggregate({1.0, 2.0, 3.0});
  REQUIRE_THAT(s.mean, Catch::Matchers::WithinAbs(2.0, 1e-15));
  REQUIRE_THAT(s.stddev, Catch::Matchers::WithinRel(std::sqrt(2.0 / 3.0), 1e-12));
}
