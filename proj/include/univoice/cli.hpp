// univoice/cli.hpp
//
// Batch command-line surface. Subcommands: synth, train, enhance, separate,
// mix, eval, ablate, dump-spec. Exit 0 on success, 1 on runtime/file errors
// (single machine-parseable line on stderr), 2 on usage errors.

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

#ifndef UNIVOICE_CLI_HPP_
#define UNIVOICE_CLI_HPP_

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "univoice/common.hpp"
#include "univoice/config.hpp"
#include "univoice/data.hpp"
#include "univoice/dsp.hpp"
#include "univoice/inference.hpp"
#include "univoice/metrics.hpp"
#include "univoice/model.hpp"
#include "univoice/training.hpp"

namespace uv::cli {

namespace detail {

inline std::string fmt(double v, const char *spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return std::string(buf);
}

inline config::RunConfig load_config(const std::string &path,
                                     bool seed_given, std::uint64_t seed) {
  config::RunConfig cfg =
      path.empty() ? config::RunConfig{} : config::load(path);
  if (path.empty()) cfg.apply_seed(cfg.seed);
  if (seed_given) cfg.apply_seed(seed);
  return cfg;
}

inline std::size_t stft_frame_count(const dsp::Waveform &wav,
                                    const dsp::StftConfig &sc) {
  require(wav.samples.size() >= sc.fft_size, "input too short: ",
          wav.samples.size(), " samples, need at least ", sc.fft_size);
  return 1 + (wav.samples.size() - sc.fft_size) / sc.hop;
}

inline data::VisualFeatures load_features(const std::string &lip_path,
                                          const std::string &ident_path,
                                          std::size_t n_frames) {
  return data::align_features(data::read_uvft(lip_path),
                              data::read_uvft(ident_path), n_frames);
}

inline void trim_to(dsp::Waveform &a, dsp::Waveform &b) {
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  a.samples.resize(n);
  b.samples.resize(n);
}

struct AblateVariant {
  std::string name;
  model::ModelConfig cfg;
};

inline void cmd_ablate(const config::RunConfig &cfg,
                       const std::string &manifest_path,
                       const std::string &out_dir) {
  const data::Manifest manifest = data::load_manifest(manifest_path);
  data::Manifest train_recs, test_recs;
  for (const auto &e : manifest)
    (e.split == "test" ? test_recs : train_recs).push_back(e);
  require(!train_recs.empty(), "ablate: manifest has no training records");
  require(test_recs.size() >= 2,
          "ablate: need at least 2 records tagged split=test for mixtures");

  const auto train_data = data::load_dataset(train_recs, cfg.stft, cfg.model);

  // Table-style variants: the full model, the KL ablation (regularizer
  // swapped and lambda scaled x100 for the collapse diagnostic), and the
  // visual ablation.
  std::vector<AblateVariant> variants;
  variants.push_back({"full", cfg.model});
  {
    model::ModelConfig kl = cfg.model;
    kl.regularizer = model::Regularizer::kl;
    kl.lambda = cfg.model.lambda * 100.0;
    variants.push_back({"kl", kl});
  }
  {
    model::ModelConfig nv = cfg.model;
    nv.use_visual = false;
    variants.push_back({"no_visual", nv});
  }

  data::fs::create_directories(out_dir);
  std::vector<training::Checkpoint> ckpts;
  std::vector<training::LatentActivityReport> reports;
  for (const auto &variant : variants) {
    std::cout << "ablate: training variant " << variant.name << "\n";
    training::TrainResult res =
        training::train(train_data, variant.cfg, cfg.train, cfg.stft);
    training::save_checkpoint(res.checkpoint, data::fs::path(out_dir) /
                                                  (variant.name + ".uvck"));
    reports.push_back(training::latent_activity(res.checkpoint, train_data));
    ckpts.push_back(std::move(res.checkpoint));

    std::string csv = "dim,mean_reg,var_of_mean,collapsed\n";
    const auto &rep = reports.back();
    for (std::size_t l = 0; l < rep.mean_reg.size(); ++l)
      csv += cat(l, ",", fmt(rep.mean_reg[l], "%.9g"), ",",
                 fmt(rep.var_of_mean[l], "%.9g"), ",",
                 rep.collapsed[l] ? 1 : 0, "\n");
    data::detail::write_file(
        data::fs::path(out_dir) / ("latent_" + variant.name + ".csv"), csv);
  }

  // held-out two-speaker mixtures at 0 dB
  const std::size_t n_pairs = std::min<std::size_t>(test_recs.size() / 2, 5);
  std::string results = "variant,pair,speaker,sdr_db,stoi\n";
  std::vector<double> mean_sdr(variants.size(), 0.0);
  std::vector<double> mean_stoi(variants.size(), 0.0);
  std::size_t n_scores = 0;

  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    const auto &ra = test_recs[2 * pair];
    const auto &rb = test_recs[2 * pair + 1];
    dsp::Waveform wa = data::read_wav(ra.wav);
    dsp::Waveform wb = data::read_wav(rb.wav);
    trim_to(wa, wb);
    const data::MixResult mr = data::mix_components(wa, wb, 0.0);
    const std::size_t n_frames = stft_frame_count(mr.mixture, cfg.stft);
    const std::vector<data::VisualFeatures> feats = {
        load_features(ra.lip, ra.ident, n_frames),
        load_features(rb.lip, rb.ident, n_frames)};
    const std::vector<dsp::Waveform> refs = {wa, mr.scaled_interferer};

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const std::vector<dsp::Waveform> est =
          mcem::separate(mr.mixture, feats, ckpts[vi], cfg.mcem);
      for (std::size_t k = 0; k < 2; ++k) {
        dsp::Waveform ref = refs[k];
        dsp::Waveform hyp = est[k];
        trim_to(ref, hyp);
        const double s = metrics::sdr(ref, hyp);
        const double st = metrics::stoi(ref, hyp);
        results += cat(variants[vi].name, ",", pair, ",", k, ",",
                       fmt(s), ",", fmt(st), "\n");
        mean_sdr[vi] += s;
        mean_stoi[vi] += st;
        if (vi == 0) ++n_scores;
      }
    }
  }
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    mean_sdr[vi] /= static_cast<double>(n_scores);
    mean_stoi[vi] /= static_cast<double>(n_scores);
  }
  data::detail::write_file(data::fs::path(out_dir) / "results.csv", results);

  std::string summary = "variant,mean_sdr_db,mean_stoi,collapsed_dims\n";
  for (std::size_t vi = 0; vi < variants.size(); ++vi)
    summary += cat(variants[vi].name, ",", fmt(mean_sdr[vi]), ",",
                   fmt(mean_stoi[vi]), ",", reports[vi].n_collapsed, "\n");
  data::detail::write_file(data::fs::path(out_dir) / "summary.csv", summary);

  const bool check_visual = mean_sdr[2] < mean_sdr[0];   // no_visual < full
  const bool check_collapse =
      reports[1].n_collapsed >= reports[0].n_collapsed;  // kl >= w2
  std::string checks = "check,result\n";
  checks += cat("no_visual_sdr_worse_than_full,",
                check_visual ? "pass" : "fail", "\n");
  checks += cat("kl_collapse_ge_w2,", check_collapse ? "pass" : "fail", "\n");
  data::detail::write_file(data::fs::path(out_dir) / "checks.csv", checks);
  std::cout << summary << checks;
}

}  // namespace detail

inline int run(int argc, const char *const *argv) {
  CLI::App app{"univoice: unsupervised audio-visual speech enhancement and separation"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, out_path, out_dir;
  std::string ckpt_path, wav_path, lip_path, ident_path;
  std::string clean_path, noise_path, ref_path, est_path, csv_path;
  std::string metric_list = "sdr,stoi";
  std::vector<std::string> speaker_specs;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_seed = [&](CLI::App *sub) {
    sub->add_option("--seed", seed, "master seed (overrides config)")
        ->each([&](const std::string &) { seed_given = true; });
  };

  CLI::App *synth = app.add_subcommand("synth", "generate a synthetic dataset + manifest");
  synth->add_option("--config", config_path, "JSON run config");
  synth->add_option("--out", out_dir, "output directory")->required();
  add_seed(synth);
  synth->callback([&] {
    const config::RunConfig cfg =
        detail::load_config(config_path, seed_given, seed);
    const data::SynthOutput out =
        data::synth_dataset(cfg.synth_config(), out_dir);
    const training::Checkpoint gt = training::Checkpoint::from_params(
        out.gt.cfg, cfg.stft, cfg.train, out.gt.params, 0, 0.0,
        rng::key({cfg.seed, 0x4754ULL}));
    training::save_checkpoint(gt, data::fs::path(out_dir) / "gt.uvck");
    std::cout << "wrote " << out.manifest.size() << " utterances and gt.uvck to "
              << out_dir << "\n";
  });

  CLI::App *train = app.add_subcommand("train", "train the model on a manifest");
  train->add_option("--config", config_path, "JSON run config");
  train->add_option("--manifest", manifest_path, "dataset manifest")->required();
  train->add_option("--out", out_path, "output checkpoint path")->required();
  add_seed(train);
  train->callback([&] {
    const config::RunConfig cfg =
        detail::load_config(config_path, seed_given, seed);
    const data::Manifest manifest = data::load_manifest(manifest_path);
    data::Manifest use;
    for (const auto &e : manifest)
      if (e.split == "train") use.push_back(e);
    if (use.empty()) use = manifest;
    const auto dataset = data::load_dataset(use, cfg.stft, cfg.model);
    std::cout << "model parameters: "
              << model::WaeParams::zeros(cfg.model).count() << "\n";
    const training::TrainResult res =
        training::train(dataset, cfg.model, cfg.train, cfg.stft);
    training::save_checkpoint(res.checkpoint, out_path);
    std::cout << "epochs run: " << res.epochs_run
              << ", best epoch: " << res.best_epoch << ", best val loss: "
              << detail::fmt(res.checkpoint.best_val_loss) << "\n";
  });

  CLI::App *enhance = app.add_subcommand("enhance", "single-speaker enhancement");
  enhance->add_option("--config", config_path, "JSON run config");
  enhance->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
  enhance->add_option("--wav", wav_path, "noisy input WAV")->required();
  enhance->add_option("--lip", lip_path, "lip feature UVFT")->required();
  enhance->add_option("--ident", ident_path, "identity feature UVFT")->required();
  enhance->add_option("--out", out_path, "output WAV")->required();
  add_seed(enhance);
  enhance->callback([&] {
    const config::RunConfig cfg =
        detail::load_config(config_path, seed_given, seed);
    const training::Checkpoint ckpt = training::load_checkpoint(ckpt_path);
    const dsp::Waveform wav = data::read_wav(wav_path);
    const std::size_t n = detail::stft_frame_count(wav, ckpt.stft);
    const data::VisualFeatures feats =
        detail::load_features(lip_path, ident_path, n);
    const dsp::Waveform est = mcem::enhance(wav, feats, ckpt, cfg.mcem);
    data::write_wav(est, out_path);
    std::cout << "wrote " << out_path << "\n";
  });

  CLI::App *separate = app.add_subcommand("separate", "multi-speaker separation");
  separate->add_option("--config", config_path, "JSON run config");
  separate->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
  separate->add_option("--wav", wav_path, "mixture WAV")->required();
  separate
      ->add_option("--speaker", speaker_specs,
                   "per-speaker features as lip.uvft,ident.uvft (repeatable)")
      ->required();
  separate->add_option("--out-dir", out_dir, "output directory")->required();
  add_seed(separate);
  separate->callback([&] {
    const config::RunConfig cfg =
        detail::load_config(config_path, seed_given, seed);
    const training::Checkpoint ckpt = training::load_checkpoint(ckpt_path);
    const dsp::Waveform wav = data::read_wav(wav_path);
    const std::size_t n = detail::stft_frame_count(wav, ckpt.stft);
    std::vector<data::VisualFeatures> feats;
    for (const std::string &spec : speaker_specs) {
      const auto comma = spec.find(',');
      require(comma != std::string::npos && comma + 1 < spec.size(),
              "separate: --speaker expects lip.uvft,ident.uvft, got '", spec, "'");
      feats.push_back(detail::load_features(spec.substr(0, comma),
                                            spec.substr(comma + 1), n));
    }
    const std::vector<dsp::Waveform> est =
        mcem::separate(wav, feats, ckpt, cfg.mcem);
    data::fs::create_directories(out_dir);
    for (std::size_t k = 0; k < est.size(); ++k) {
      const auto path =
          data::fs::path(out_dir) / cat("speaker_", k, ".wav");
      data::write_wav(est[k], path);
      std::cout << "wrote " << path.string() << "\n";
    }
  });

  CLI::App *mixcmd = app.add_subcommand("mix", "mix clean + interferer at a given SNR");
  mixcmd->add_option("--clean", clean_path)->required();
  mixcmd->add_option("--noise", noise_path)->required();
  mixcmd->add_option("--snr", snr_db, "SNR in dB")->required();
  mixcmd->add_option("--out", out_path)->required();
  mixcmd->callback([&] {
    const dsp::Waveform clean = data::read_wav(clean_path);
    const dsp::Waveform noise = data::read_wav(noise_path);
    data::write_wav(data::mix(clean, noise, snr_db), out_path);
    std::cout << "wrote " << out_path << "\n";
  });

  CLI::App *evalcmd = app.add_subcommand("eval", "objective metrics for a ref/est pair");
  evalcmd->add_option("--ref", ref_path)->required();
  evalcmd->add_option("--est", est_path)->required();
  evalcmd->add_option("--metrics", metric_list, "comma list: sdr,stoi");
  evalcmd->add_option("--csv", csv_path, "also write rows to this CSV");
  evalcmd->callback([&] {
    dsp::Waveform ref = data::read_wav(ref_path);
    dsp::Waveform est = data::read_wav(est_path);
    detail::trim_to(ref, est);
    const std::string utt_id = data::fs::path(est_path).stem().string();
    std::string csv = "utt_id,metric,value\n";
    std::size_t pos = 0;
    while (pos <= metric_list.size()) {
      const auto comma = metric_list.find(',', pos);
      const std::string name = metric_list.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? metric_list.size() + 1 : comma + 1;
      if (name.empty()) continue;
      double value = 0.0;
      if (name == "sdr")
        value = metrics::sdr(ref, est);
      else if (name == "stoi")
        value = metrics::stoi(ref, est);
      else
        fail("eval: unknown metric '", name, "' (expected sdr,stoi)");
      csv += cat(utt_id, ",", name, ",", detail::fmt(value), "\n");
    }
    std::cout << csv;
    if (!csv_path.empty()) data::detail::write_file(csv_path, csv);
  });

  CLI::App *ablate = app.add_subcommand(
      "ablate", "train full/kl/no-visual variants and report SDR/STOI + latent activity");
  ablate->add_option("--config", config_path, "JSON run config");
  ablate->add_option("--manifest", manifest_path)->required();
  ablate->add_option("--out", out_dir, "output directory")->required();
  add_seed(ablate);
  ablate->callback([&] {
    const config::RunConfig cfg =
        detail::load_config(config_path, seed_given, seed);
    detail::cmd_ablate(cfg, manifest_path, out_dir);
  });

  CLI::App *dump = app.add_subcommand("dump-spec", "magnitude spectrogram as CSV");
  dump->add_option("--config", config_path, "JSON run config");
  dump->add_option("--wav", wav_path)->required();
  dump->add_option("--out", out_path)->required();
  dump->callback([&] {
    const config::RunConfig cfg =
        detail::load_config(config_path, seed_given, seed);
    const dsp::ComplexSpectrogram spec =
        dsp::stft(data::read_wav(wav_path), cfg.stft);
    std::string csv = "frame";
    for (std::size_t f = 0; f < spec.freq_bins; ++f) csv += cat(",bin_", f);
    csv += "\n";
    for (std::size_t n = 0; n < spec.frames; ++n) {
      csv += cat(n);
      for (std::size_t f = 0; f < spec.freq_bins; ++f)
        csv += cat(",", detail::fmt(std::abs(spec.at(f, n)), "%.9g"));
      csv += "\n";
    }
    data::detail::write_file(out_path, csv);
    std::cout << "wrote " << out_path << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// convenience for in-process tests
inline int run(const std::vector<std::string> &args) {
  std::vector<std::string> full;
  full.push_back("univoice");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  argv.reserve(full.size());
  for (const auto &s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace uv::cli

#endif  // UNIVOICE_CLI_HPP_
