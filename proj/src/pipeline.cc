// src/pipeline.cc

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

#include "dvad/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "dvad/config.h"
#include "dvad/io-util.h"

namespace dvad {

namespace {

// Sub-seed streams.
enum SeedStream : uint64_t {
  kSceneSeed = 1,
  kSplitSeed = 2,
  kDiffusionSeed = 3,
  kDedSeed = 4,
  kSvmSeed = 5,
};

RowMatrix GatherRows(const RowMatrix &m, const std::vector<int64_t> &rows) {
  RowMatrix out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows()) throw DataError("row index out of range");
    out.row(i) = m.row(rows[i]);
  }
  return out;
}

FrameLabels GatherLabels(const FrameLabels &labels, const std::vector<int64_t> &rows) {
  FrameLabels out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
  return out;
}

std::vector<int64_t> Merge(const std::vector<int64_t> &a, const std::vector<int64_t> &b) {
  std::vector<int64_t> out(a);
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Attaches the stage that failed to an error message, keeping its kind.
template <typename F>
auto Stage(const std::string &name, F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error &e) {
    const std::string what = name + ": " + e.what();
    if (e.kind() == Error::Kind::kInternal) throw InternalError(what);
    throw DataError(what);
  }
}

}  // namespace

void SplitSpec::Check() const {
  for (double f : {ded_train_fraction, classifier_fraction, test_fraction})
    if (!(f > 0.0 && f < 1.0)) throw DataError("split fractions must be in (0, 1)");
  if (std::abs(ded_train_fraction + classifier_fraction + test_fraction - 1.0) > 1e-9)
    throw DataError("split fractions must sum to 1");
}

std::vector<int64_t> DatasetSplit::ClassifierRows() const {
  return Merge(classifier[0], classifier[1]);
}

std::vector<int64_t> DatasetSplit::TestRows() const { return Merge(test[0], test[1]); }

std::string DatasetSplit::TestHash() const {
  std::string text;
  for (int64_t i : TestRows()) text += std::to_string(i) + "\n";
  return Sha256Hex(text);
}

DatasetSplit SplitDataset(const FrameLabels &labels, const SplitSpec &spec) {
  spec.Check();
  DatasetSplit split;
  std::mt19937_64 rng(spec.rng_seed);
  for (int h = 0; h < 2; ++h) {
    std::vector<int64_t> rows;
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == h) rows.push_back(static_cast<int64_t>(i));
    const int64_t n = static_cast<int64_t>(rows.size());
    const int64_t n_ded = std::llround(spec.ded_train_fraction * n);
    const int64_t n_cls = std::llround(spec.classifier_fraction * n);
    if (n_ded < 1 || n_cls < 1 || n - n_ded - n_cls < 1)
      throw DataError("too few frames of hypothesis " + std::to_string(h) +
                      " to split (" + std::to_string(n) + ")");
    std::shuffle(rows.begin(), rows.end(), rng);
    split.ded_train[h].assign(rows.begin(), rows.begin() + n_ded);
    split.classifier[h].assign(rows.begin() + n_ded, rows.begin() + n_ded + n_cls);
    split.test[h].assign(rows.begin() + n_ded + n_cls, rows.end());
    for (auto *part : {&split.ded_train[h], &split.classifier[h], &split.test[h]})
      std::sort(part->begin(), part->end());
  }
  return split;
}

std::vector<int> PipelineConfig::DedDims() const {
  std::vector<int> dims{FeatureDim()};
  dims.insert(dims.end(), hidden_widths.begin(), hidden_widths.end());
  dims.push_back(diffusion.dimension);
  return dims;
}

void PipelineConfig::DeriveSeeds() {
  scene.rng_seed = DeriveSeed(seed, kSceneSeed);
  split.rng_seed = DeriveSeed(seed, kSplitSeed);
  diffusion.seed = DeriveSeed(seed, kDiffusionSeed);
  train.rng_seed = DeriveSeed(seed, kDedSeed);
  svm.rng_seed = DeriveSeed(seed, kSvmSeed);
}

Dataset DatasetFromScene(const SceneMix &mix, const PipelineConfig &config) {
  FrameSequence frames =
      FrameSignal(mix.noisy, config.scene.frame_length, config.scene.hop);
  Dataset data;
  data.features = ExtractFeatures(frames, config.mfcc);
  data.labels = mix.labels;
  if (static_cast<int64_t>(data.labels.size()) != data.features.rows())
    throw InternalError("label and feature counts differ");
  return data;
}

void WriteFeatureCsv(const Dataset &data, const std::string &path) {
  const bool labeled = !data.labels.empty();
  if (labeled && static_cast<int64_t>(data.labels.size()) != data.features.rows())
    throw DataError("label and feature counts differ");
  std::string out;
  for (Eigen::Index j = 0; j < data.features.cols(); ++j)
    out += (j ? ",f" : "f") + std::to_string(j);
  out += labeled ? ",label\n" : "\n";
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      if (j) out += ',';
      out += FormatDouble(data.features(i, j));
    }
    if (labeled) out += "," + std::to_string(data.labels[i]);
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

Dataset ReadFeatureCsv(const std::string &path) {
  CsvTable table = ReadCsv(path);
  const int label_col = table.Column("label");
  std::vector<int> feature_cols;
  for (size_t j = 0; j < table.header.size(); ++j)
    if (static_cast<int>(j) != label_col) feature_cols.push_back(static_cast<int>(j));
  if (feature_cols.empty() || table.rows.empty())
    throw DataError("feature file " + path + " has no data");
  Dataset data;
  data.features.resize(table.rows.size(), feature_cols.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    for (size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string &cell = table.rows[i][feature_cols[j]];
      try {
        size_t used = 0;
        data.features(i, j) = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::logic_error &) {
        throw DataError(path + ": bad number '" + cell + "' on data row " +
                        std::to_string(i + 1));
      }
    }
    if (label_col >= 0) {
      const std::string &cell = table.rows[i][label_col];
      if (cell != "0" && cell != "1")
        throw DataError(path + ": label must be 0 or 1 on data row " +
                        std::to_string(i + 1));
      data.labels.push_back(cell == "1");
    }
  }
  return data;
}

void ModelBundle::Check() const {
  if (sample_rate_hz <= 0 || frame_length <= 0 || hop <= 0)
    throw DataError("bundle framing is invalid");
  mfcc.Check(frame_length);
  ded0.Check();
  ded1.Check();
  if (ded0.hypothesis != Hypothesis::kAbsent || ded1.hypothesis != Hypothesis::kPresent)
    throw DataError("bundle networks carry the wrong hypothesis tags");
  const int dim = standardizer.dim();
  if (dim != 9 * mfcc.num_ceps || ded0.input_dim() != dim || ded1.input_dim() != dim)
    throw DataError("bundle feature dimensions are inconsistent");
  if (svm_realtime.mode != ErrorMode::kRealtime || svm_realtime.weights.size() != 2 ||
      svm_batch.mode != ErrorMode::kBatch || svm_batch.weights.size() != 4)
    throw DataError("bundle classifiers are not mode-consistent");
  for (const DiffusionEmbedding *e : {&embedding0, &embedding1}) {
    if (e->dimension() != ded0.bottleneck_dim() ||
        e->reference.points.cols() != dim ||
        e->reference.points.rows() != e->right_vectors.rows() ||
        e->eigenvalues.size() != e->dimension() + 1)
      throw DataError("bundle embedding is inconsistent");
  }
}

ModelBundle TrainOnRows(const Dataset &data,
                        const std::array<std::vector<int64_t>, 2> &ded_rows,
                        const std::vector<int64_t> &classifier_rows,
                        const PipelineConfig &config, TrainingSummary *summary) {
  const auto start = std::chrono::steady_clock::now();
  if (data.features.cols() != config.FeatureDim())
    throw DataError("features have " + std::to_string(data.features.cols()) +
                    " columns, configuration expects " +
                    std::to_string(config.FeatureDim()));
  for (int h = 0; h < 2; ++h)
    for (int64_t i : ded_rows[h])
      if (data.labels.at(i) != h)
        throw InternalError("training row of the wrong hypothesis");

  ModelBundle bundle;
  bundle.sample_rate_hz = config.scene.sample_rate_hz;
  bundle.frame_length = config.scene.frame_length;
  bundle.hop = config.scene.hop;
  bundle.mfcc = config.mfcc;

  const RowMatrix pooled = GatherRows(data.features, Merge(ded_rows[0], ded_rows[1]));
  bundle.standardizer = Stage("standardizer", [&] { return FitStandardizer(pooled); });

  std::array<TrainReport, 2> reports;
  for (int h = 0; h < 2; ++h) {
    const std::string tag = "hypothesis " + std::to_string(h);
    const RowMatrix raw = GatherRows(data.features, ded_rows[h]);
    const RowMatrix z = bundle.standardizer.StandardizeRows(raw);
    const RowMatrix r = bundle.standardizer.ApplyRows(raw);
    DiffusionOptions dm = config.diffusion;
    dm.seed = DeriveSeed(config.diffusion.seed, h);
    DiffusionFit fit =
        Stage("diffusion maps (" + tag + ")", [&] { return FitDiffusionEmbedding(z, dm); });
    TrainConfig tc = config.train;
    tc.rng_seed = DeriveSeed(config.train.rng_seed, h);
    auto [model, report] = Stage("network training (" + tag + ")", [&] {
      return TrainDed(r, fit.targets, tc, ToHypothesis(h), config.DedDims());
    });
    (h ? bundle.ded1 : bundle.ded0) = std::move(model);
    (h ? bundle.embedding1 : bundle.embedding0) = std::move(fit.embedding);
    reports[h] = std::move(report);
  }

  const RowMatrix cls_raw = GatherRows(data.features, classifier_rows);
  const FrameLabels cls_labels = GatherLabels(data.labels, classifier_rows);
  const RowMatrix cls_r = bundle.standardizer.ApplyRows(cls_raw);
  const RowMatrix cls_z = bundle.standardizer.StandardizeRows(cls_raw);
  ErrorMap realtime = BuildErrorMap(cls_r, bundle.ded0, bundle.ded1, ErrorMode::kRealtime);
  std::array<RowMatrix, 2> targets = Stage("classifier targets", [&] {
    return DiffusionTargets(cls_z, bundle, config.per_batch_dm, cls_labels);
  });
  ErrorMap batch = BuildErrorMap(cls_r, bundle.ded0, bundle.ded1, ErrorMode::kBatch,
                                 &targets[0], &targets[1]);
  SvmTrainConfig svm_config = config.svm;
  bundle.svm_realtime = Stage("realtime classifier",
                              [&] { return TrainSvm(realtime, cls_labels, svm_config); });
  svm_config.rng_seed = DeriveSeed(config.svm.rng_seed, 1);
  bundle.svm_batch =
      Stage("batch classifier", [&] { return TrainSvm(batch, cls_labels, svm_config); });

  bundle.metadata.seed = config.seed;
  bundle.metadata.config_hash = ConfigHash(config);
  bundle.metadata.per_batch_dm = config.per_batch_dm;
  bundle.metadata.ded_rows0 = static_cast<int64_t>(ded_rows[0].size());
  bundle.metadata.ded_rows1 = static_cast<int64_t>(ded_rows[1].size());
  bundle.metadata.classifier_rows = static_cast<int64_t>(classifier_rows.size());
  bundle.Check();

  if (summary) {
    summary->ded_rows = ded_rows;
    summary->reports = std::move(reports);
    summary->classifier_realtime = std::move(realtime);
    summary->classifier_batch = std::move(batch);
    summary->wall_seconds = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
  }
  return bundle;
}

ModelBundle TrainPipeline(const Dataset &data, const PipelineConfig &config,
                          TrainingSummary *summary) {
  if (static_cast<int64_t>(data.labels.size()) != data.features.rows())
    throw DataError("training needs one label per feature row");
  DatasetSplit split = Stage("split", [&] { return SplitDataset(data.labels, config.split); });
  ModelBundle bundle =
      TrainOnRows(data, split.ded_train, split.ClassifierRows(), config, summary);
  if (summary) summary->split = std::move(split);
  return bundle;
}

std::array<RowMatrix, 2> DiffusionTargets(const RowMatrix &z, const ModelBundle &bundle,
                                          bool per_batch_dm,
                                          const FrameLabels &presence) {
  const int64_t n = z.rows();
  if (per_batch_dm) {
    int64_t speech = 0;
    for (int l : presence) speech += l;
    const double share =
        presence.empty() ? 0.5 : static_cast<double>(speech) / presence.size();
    if (n < kMinPerBatchDmFrames) {
      Warn("batch of " + std::to_string(n) + " frames is below " +
           std::to_string(kMinPerBatchDmFrames) +
           "; per-batch diffusion maps disabled, using Nystrom targets");
      per_batch_dm = false;
    } else if (share < 0.05 || share > 0.95) {
      Warn("batch is essentially single-hypothesis (speech share " +
           std::to_string(share) +
           "); its joint embedding degenerates, using Nystrom targets");
      per_batch_dm = false;
    }
  }
  std::array<RowMatrix, 2> out;
  if (per_batch_dm) {
    DiffusionOptions dm;
    dm.k = bundle.embedding0.reference.k;
    dm.dimension = bundle.embedding0.dimension();
    dm.max_points = static_cast<int>(std::max<int64_t>(n, 1));
    out[0] = FitDiffusionEmbedding(z, dm).targets;
    out[1] = out[0];
    return out;
  }
  for (int h = 0; h < 2; ++h) {
    const DiffusionEmbedding &e = h ? bundle.embedding1 : bundle.embedding0;
    out[h].resize(n, e.dimension());
    for (int64_t i = 0; i < n; ++i)
      out[h].row(i) = NystromExtend(e, z.row(i).transpose()).transpose();
  }
  return out;
}

ErrorMap ComputeErrorMap(const RowMatrix &raw_features, const ModelBundle &bundle,
                         ErrorMode mode, bool per_batch_dm) {
  if (raw_features.cols() != bundle.standardizer.dim())
    throw DataError("feature dimension does not match the bundle");
  const RowMatrix r = bundle.standardizer.ApplyRows(raw_features);
  if (mode == ErrorMode::kRealtime)
    return BuildErrorMap(r, bundle.ded0, bundle.ded1, mode);
  FrameLabels presence;
  if (per_batch_dm) {
    // Predicted presence stands in for labels in the single-hypothesis check.
    presence = Classify(BuildErrorMap(r, bundle.ded0, bundle.ded1, ErrorMode::kRealtime),
                        bundle)
                   .labels;
  }
  const std::array<RowMatrix, 2> targets = DiffusionTargets(
      bundle.standardizer.StandardizeRows(raw_features), bundle, per_batch_dm, presence);
  return BuildErrorMap(r, bundle.ded0, bundle.ded1, mode, &targets[0], &targets[1]);
}

Predictions Classify(const ErrorMap &map, const ModelBundle &bundle) {
  const SvmModel &svm =
      map.mode == ErrorMode::kRealtime ? bundle.svm_realtime : bundle.svm_batch;
  Predictions p;
  p.labels.resize(map.size());
  p.scores.resize(map.size());
  for (int64_t i = 0; i < map.size(); ++i) {
    const ErrorCoordinate c = map.Row(i);
    p.scores[i] = Score(c, svm);
    p.labels[i] = ToInt(Classify(c, svm));
  }
  return p;
}

Predictions InferFeatures(const RowMatrix &raw_features, const ModelBundle &bundle,
                          ErrorMode mode, bool per_batch_dm) {
  return Classify(ComputeErrorMap(raw_features, bundle, mode, per_batch_dm), bundle);
}

void WritePredictionsCsv(const Predictions &p, const std::string &path) {
  std::string out = "frame_index,label,score\n";
  for (size_t i = 0; i < p.labels.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(p.labels[i]) + "," +
           FormatDouble(p.scores[i]) + "\n";
  WriteFileAtomic(path, out);
}

Predictions ReadPredictionsCsv(const std::string &path) {
  CsvTable table = ReadCsv(path);
  const int label_col = table.Column("label");
  const int score_col = table.Column("score");
  if (label_col < 0) throw DataError(path + ": missing label column");
  Predictions p;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const std::string &l = table.rows[i][label_col];
    if (l != "0" && l != "1")
      throw DataError(path + ": label must be 0 or 1 on data row " + std::to_string(i + 1));
    p.labels.push_back(l == "1");
    if (score_col >= 0) {
      try {
        p.scores.push_back(std::stod(table.rows[i][score_col]));
      } catch (const std::logic_error &) {
        throw DataError(path + ": bad score on data row " + std::to_string(i + 1));
      }
    }
  }
  return p;
}

RealtimeDetector::RealtimeDetector(const ModelBundle &bundle)
    : bundle_(bundle), stream_(bundle.mfcc, bundle.frame_length) {}

FrameDecision RealtimeDetector::Decide(const Eigen::VectorXd &raw_features) {
  const Eigen::VectorXd r = ApplyStandardizer(raw_features, bundle_.standardizer);
  const ErrorCoordinate c = RealtimeCoordinate(r, bundle_.ded0, bundle_.ded1);
  FrameDecision d;
  d.index = next_index_++;
  d.score = Score(c, bundle_.svm_realtime);
  d.label = ToInt(Classify(c, bundle_.svm_realtime));
  return d;
}

std::vector<FrameDecision> RealtimeDetector::Push(std::span<const double> frame) {
  if (static_cast<int>(frame.size()) != bundle_.frame_length)
    throw DataError("stream underrun: got " + std::to_string(frame.size()) +
                    " samples, need " + std::to_string(bundle_.frame_length));
  std::vector<FrameDecision> out;
  for (const Eigen::VectorXd &row : stream_.Push(frame)) out.push_back(Decide(row));
  return out;
}

std::vector<FrameDecision> RealtimeDetector::Flush() {
  std::vector<FrameDecision> out;
  for (const Eigen::VectorXd &row : stream_.Flush()) out.push_back(Decide(row));
  return out;
}

Predictions InferRealtimeStream(const AudioSignal &signal, const ModelBundle &bundle) {
  if (signal.sample_rate_hz != bundle.sample_rate_hz)
    throw DataError("signal sample rate does not match the bundle");
  const FrameSequence frames = FrameSignal(signal, bundle.frame_length, bundle.hop);
  RealtimeDetector detector(bundle);
  Predictions p;
  auto take = [&](const std::vector<FrameDecision> &ds) {
    for (const FrameDecision &d : ds) {
      p.labels.push_back(d.label);
      p.scores.push_back(d.score);
    }
  };
  for (int64_t n = 0; n < frames.NumFrames(); ++n)
    take(detector.Push(
        std::span<const double>(frames.frames.row(n).data(), frames.frame_length)));
  take(detector.Flush());
  return p;
}

}  // namespace dvad
