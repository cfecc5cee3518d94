// tools/dvad.cc

// Copyright 2026  The dvad Authors

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

// Command-line front end. Exit status: 0 success, 1 usage error,
// 2 data or validation error, 3 internal failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dvad/audio-scene.h"
#include "dvad/bundle-io.h"
#include "dvad/config.h"
#include "dvad/experiment-grid.h"
#include "dvad/io-util.h"
#include "dvad/metrics.h"
#include "dvad/pipeline.h"

namespace {

using namespace dvad;

struct GlobalOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  bool per_batch_dm = false;
};

PipelineConfig EffectiveConfig(const GlobalOptions &g) {
  PipelineConfig config = g.config_path.empty() ? PipelineConfig() : LoadConfig(g.config_path);
  if (g.seed) {
    config.seed = *g.seed;
    config.DeriveSeeds();
  }
  if (g.per_batch_dm) config.per_batch_dm = true;
  return config;
}

// Labeled features from a CSV, or from the configured scene when no path is
// given.
Dataset LoadOrMix(const std::string &features_path, const PipelineConfig &config) {
  if (!features_path.empty()) return ReadFeatureCsv(features_path);
  return DatasetFromScene(MixScene(config.scene), config);
}

std::string JoinLosses(const std::vector<double> &losses) {
  std::string out;
  for (size_t i = 0; i < losses.size(); ++i)
    out += (i ? ";" : "") + FormatDouble(losses[i]);
  return out;
}

void WriteTrainReport(const std::string &dir, const PipelineConfig &config,
                      const ModelBundle &bundle, const TrainingSummary &summary) {
  std::filesystem::create_directories(dir);
  std::string meta;
  meta += "library_version = " + std::string(kLibraryVersion) + "\n";
  meta += "bundle_format_version = " + std::to_string(kBundleFormatVersion) + "\n";
  meta += "config_hash = " + ConfigHash(config) + "\n";
  meta += "bundle_hash = " + BundleHash(bundle) + "\n";
  meta += "seed = " + std::to_string(config.seed) + "\n";
  meta += "scene_seed = " + std::to_string(config.scene.rng_seed) + "\n";
  meta += "split_seed = " + std::to_string(config.split.rng_seed) + "\n";
  meta += "diffusion_seed = " + std::to_string(config.diffusion.seed) + "\n";
  meta += "ded_seed = " + std::to_string(config.train.rng_seed) + "\n";
  meta += "svm_seed = " + std::to_string(config.svm.rng_seed) + "\n";
  meta += "test_split_hash = " + summary.split.TestHash() + "\n";
  meta += "wall_seconds = " + FormatDouble(summary.wall_seconds) + "\n";
  for (int h = 0; h < 2; ++h) {
    const TrainReport &r = summary.reports[h];
    const std::string p = "ded" + std::to_string(h) + ".";
    meta += p + "rows = " + std::to_string(summary.ded_rows[h].size()) + "\n";
    meta += p + "initial_stacked_loss = " + FormatDouble(r.initial_stacked_loss) + "\n";
    meta += p + "final_stacked_loss = " + FormatDouble(r.final_stacked_loss) + "\n";
    meta += p + "stop_reason = " + StopReasonName(r.stop_reason) + "\n";
    meta += p + "final_gradient_norm = " + FormatDouble(r.final_gradient_norm) + "\n";
    meta += p + "pretrain_losses = " + JoinLosses(r.pretrain.final_losses) + "\n";
  }
  WriteFileAtomic(dir + "/metadata.txt", meta);
  WriteFileAtomic(dir + "/config.cfg", SerializeConfig(config));

  std::string losses = "network,stage,epoch,loss\n";
  for (int h = 0; h < 2; ++h)
    for (const StageReport &s : summary.reports[h].stages)
      for (size_t e = 0; e < s.losses.size(); ++e)
        losses += std::to_string(h) + "," + s.name + "," + std::to_string(e) + "," +
                  FormatDouble(s.losses[e]) + "\n";
  WriteFileAtomic(dir + "/losses.csv", losses);

  // Training-row audit: which dataset rows each network saw.
  std::string audit = "network,row\n";
  for (int h = 0; h < 2; ++h)
    for (int64_t row : summary.ded_rows[h])
      audit += std::to_string(h) + "," + std::to_string(row) + "\n";
  WriteFileAtomic(dir + "/ded_rows.csv", audit);
}

// Scores and labels of one evaluation, checked for matching length.
void LoadScored(const std::string &predictions_path, const std::string &labels_path,
                Predictions *p, FrameLabels *labels) {
  *p = ReadPredictionsCsv(predictions_path);
  *labels = ReadLabelsCsv(labels_path);
  if (p->labels.size() != labels->size())
    throw DataError("'" + predictions_path + "' has " + std::to_string(p->labels.size()) +
                    " frames but '" + labels_path + "' has " +
                    std::to_string(labels->size()));
}

int ExitCode(const Error &e) {
  switch (e.kind()) {
    case Error::Kind::kUsage: return 1;
    case Error::Kind::kData: return 2;
    case Error::Kind::kInternal: return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Voice activity detection with diffusion encoder-decoder networks"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Configuration file (key = value)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Master seed; overrides the config");
  app.add_flag("--per-batch-dm", global.per_batch_dm,
               "Batch mode: embed each batch jointly instead of Nystrom targets");

  // mix
  std::string mix_dir;
  CLI::App *mix = app.add_subcommand("mix", "Synthesize a labeled noisy scene");
  mix->add_option("--out-dir", mix_dir, "Output directory")->required();

  // features
  std::string feat_wav, feat_labels, feat_out;
  CLI::App *features = app.add_subcommand("features", "Extract context features");
  features->add_option("--wav", feat_wav, "Input WAV; the configured scene if absent")
      ->check(CLI::ExistingFile);
  features->add_option("--labels", feat_labels, "Frame labels CSV for --wav")
      ->check(CLI::ExistingFile);
  features->add_option("--out", feat_out, "Feature CSV")->required();

  // train
  std::string train_features, train_out, train_report;
  CLI::App *train = app.add_subcommand("train", "Train a model bundle");
  train->add_option("--features", train_features,
                    "Labeled feature CSV; the configured scene if absent")
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Bundle file")->required();
  train->add_option("--report-dir", train_report,
                    "Directory for run metadata, loss curves and the row audit");

  // infer
  std::string infer_bundle, infer_wav, infer_features, infer_out, infer_mode = "realtime";
  CLI::App *infer = app.add_subcommand("infer", "Per-frame speech decisions");
  infer->add_option("--bundle", infer_bundle, "Bundle file")->required();
  infer->add_option("--mode", infer_mode, "realtime or batch")
      ->check(CLI::IsMember({"realtime", "batch"}));
  auto *wav_opt = infer->add_option("--wav", infer_wav, "Input WAV (8 kHz)");
  auto *feat_opt = infer->add_option("--features", infer_features, "Feature CSV");
  wav_opt->excludes(feat_opt);
  infer->add_option("--out", infer_out, "Prediction CSV")->required();

  // evaluate, roc
  std::string eval_pred, eval_labels, eval_out;
  CLI::App *evaluate = app.add_subcommand("evaluate", "Accuracy and error rates");
  evaluate->add_option("--predictions", eval_pred, "Prediction CSV")
      ->required()->check(CLI::ExistingFile);
  evaluate->add_option("--labels", eval_labels, "CSV with a label column")
      ->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Metrics CSV")->required();

  std::string roc_pred, roc_labels, roc_out;
  CLI::App *roc = app.add_subcommand("roc", "Threshold sweep of the scores");
  roc->add_option("--predictions", roc_pred, "Prediction CSV")
      ->required()->check(CLI::ExistingFile);
  roc->add_option("--labels", roc_labels, "CSV with a label column")
      ->required()->check(CLI::ExistingFile);
  roc->add_option("--out", roc_out, "ROC CSV")->required();

  // grid
  std::string grid_features, grid_out;
  CLI::App *grid = app.add_subcommand("grid", "Training-fraction x speech-ratio sweep");
  grid->add_option("--features", grid_features,
                   "Labeled feature CSV; the configured scene if absent")
      ->check(CLI::ExistingFile);
  grid->add_option("--out", grid_out, "Grid CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig config = EffectiveConfig(global);

    if (*mix) {
      SceneMix scene = MixScene(config.scene);
      std::filesystem::create_directories(mix_dir);
      SaveAudio(scene.noisy, mix_dir + "/noisy.wav");
      SaveAudio(scene.clean, mix_dir + "/clean.wav");
      SaveAudio(scene.stationary, mix_dir + "/stationary.wav");
      SaveAudio(scene.transient, mix_dir + "/transient.wav");
      WriteLabelsCsv(scene.labels, mix_dir + "/labels.csv");
    } else if (*features) {
      Dataset data;
      if (feat_wav.empty()) {
        if (!feat_labels.empty()) throw Error(Error::Kind::kUsage, "--labels needs --wav");
        data = LoadOrMix("", config);
      } else {
        AudioSignal signal = LoadAudio(feat_wav, config.scene.sample_rate_hz, false);
        data.features = ExtractFeatures(
            FrameSignal(signal, config.scene.frame_length, config.scene.hop), config.mfcc);
        if (!feat_labels.empty()) {
          data.labels = ReadLabelsCsv(feat_labels);
          if (static_cast<int64_t>(data.labels.size()) != data.features.rows())
            throw DataError("'" + feat_labels + "' has " +
                            std::to_string(data.labels.size()) + " labels for " +
                            std::to_string(data.features.rows()) + " frames");
        }
      }
      WriteFeatureCsv(data, feat_out);
    } else if (*train) {
      Dataset data = LoadOrMix(train_features, config);
      TrainingSummary summary;
      ModelBundle bundle = TrainPipeline(data, config, &summary);
      SaveBundle(bundle, train_out);
      if (!train_report.empty()) WriteTrainReport(train_report, config, bundle, summary);
      std::cout << BundleHash(bundle) << "\n";
    } else if (*infer) {
      if (infer_wav.empty() && infer_features.empty())
        throw Error(Error::Kind::kUsage, "infer needs --wav or --features");
      if (!std::filesystem::exists(infer_bundle))
        throw DataError("bundle '" + infer_bundle + "' does not exist; run train first");
      const ModelBundle bundle = LoadBundle(infer_bundle);
      const ErrorMode mode = ParseErrorMode(infer_mode);
      Predictions p;
      if (!infer_wav.empty() && mode == ErrorMode::kRealtime) {
        p = InferRealtimeStream(LoadAudio(infer_wav, bundle.sample_rate_hz, false), bundle);
      } else {
        RowMatrix raw;
        if (!infer_wav.empty()) {
          AudioSignal signal = LoadAudio(infer_wav, bundle.sample_rate_hz, false);
          raw = ExtractFeatures(FrameSignal(signal, bundle.frame_length, bundle.hop),
                                bundle.mfcc);
        } else {
          raw = ReadFeatureCsv(infer_features).features;
        }
        p = InferFeatures(raw, bundle, mode, config.per_batch_dm);
      }
      WritePredictionsCsv(p, infer_out);
    } else if (*evaluate) {
      Predictions p;
      FrameLabels labels;
      LoadScored(eval_pred, eval_labels, &p, &labels);
      Metrics m = ComputeMetrics(p.labels, labels);
      WriteMetricsCsv(m, eval_out);
      std::cout << "accuracy " << FormatDouble(m.accuracy) << "\n";
    } else if (*roc) {
      Predictions p;
      FrameLabels labels;
      LoadScored(roc_pred, roc_labels, &p, &labels);
      RocCurve curve = Roc(p.scores, labels);
      WriteRocCsv(curve, roc_out);
      std::cout << "auc " << FormatDouble(curve.auc) << "\n";
    } else if (*grid) {
      Dataset data = LoadOrMix(grid_features, config);
      GridResult result = RunGrid(data, config);
      WriteGridCsv(result, grid_out);
    }
  } catch (const Error &e) {
    std::cerr << "dvad: " << e.what() << "\n";
    return ExitCode(e);
  } catch (const std::exception &e) {
    std::cerr << "dvad: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
