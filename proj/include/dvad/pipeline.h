// dvad/pipeline.h

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

#ifndef DVAD_PIPELINE_H_
#define DVAD_PIPELINE_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvad/audio-scene.h"
#include "dvad/common.h"
#include "dvad/ded-model.h"
#include "dvad/diffusion-maps.h"
#include "dvad/error-map.h"
#include "dvad/linear-svm.h"
#include "dvad/mel-features.h"

namespace dvad {

inline constexpr char kLibraryVersion[] = "1.0.0";

struct SplitSpec {
  double ded_train_fraction = 0.70;
  double classifier_fraction = 0.15;
  double test_fraction = 0.15;
  uint64_t rng_seed = 1;

  void Check() const;
};

/// Frame indices, per hypothesis, of the three disjoint parts.
struct DatasetSplit {
  std::array<std::vector<int64_t>, 2> ded_train;
  std::array<std::vector<int64_t>, 2> classifier;
  std::array<std::vector<int64_t>, 2> test;

  /// Both hypotheses merged, ascending.
  std::vector<int64_t> ClassifierRows() const;
  std::vector<int64_t> TestRows() const;
  /// SHA-256 of the ascending test indices.
  std::string TestHash() const;
};

/// Per-hypothesis seeded shuffle, then rounded 70/15/15 partition (the test
/// part takes the remainder).
DatasetSplit SplitDataset(const FrameLabels &labels, const SplitSpec &spec);

/// Every tunable of the pipeline. Sub-seeds are derived from `seed`.
struct PipelineConfig {
  SceneSpec scene;
  MfccConfig mfcc;
  DiffusionOptions diffusion;
  std::vector<int> hidden_widths = {200, 200};
  TrainConfig train;
  SvmTrainConfig svm;
  SplitSpec split;
  std::vector<double> grid_fractions = {0.25, 0.5, 0.75, 1.0};
  std::vector<double> grid_ratios = {0.2, 0.35, 0.5, 0.65, 0.8};
  bool per_batch_dm = false;
  uint64_t seed = 1;

  PipelineConfig() { DeriveSeeds(); }

  /// (2J + 1) * 3 * num_ceps with J = 1.
  int FeatureDim() const { return 9 * mfcc.num_ceps; }
  /// Encoder widths: feature dim, hidden widths, embedding dimension.
  std::vector<int> DedDims() const;
  /// Re-derives every sub-seed from `seed`.
  void DeriveSeeds();
};

/// Raw (unstandardized) features with one label per row.
struct Dataset {
  RowMatrix features;
  FrameLabels labels;
};

Dataset DatasetFromScene(const SceneMix &mix, const PipelineConfig &config);
void WriteFeatureCsv(const Dataset &data, const std::string &path);
/// The label column is optional; missing labels come back empty.
Dataset ReadFeatureCsv(const std::string &path);

struct BundleMetadata {
  uint64_t seed = 0;
  std::string config_hash;
  std::string library_version = kLibraryVersion;
  bool per_batch_dm = false;
  int64_t ded_rows0 = 0;
  int64_t ded_rows1 = 0;
  int64_t classifier_rows = 0;
};

/// Everything inference needs; no side-channel configuration.
struct ModelBundle {
  int sample_rate_hz = 8000;
  int frame_length = 634;
  int hop = 317;
  MfccConfig mfcc;
  Standardizer standardizer;
  DedModel ded0;
  DedModel ded1;
  SvmModel svm_realtime;
  SvmModel svm_batch;
  DiffusionEmbedding embedding0;
  DiffusionEmbedding embedding1;
  BundleMetadata metadata;

  /// Throws DataError when components are missing or inconsistent.
  void Check() const;
  const DedModel &Ded(int h) const { return h ? ded1 : ded0; }
};

struct TrainingSummary {
  DatasetSplit split;
  /// Dataset rows each network was trained on (audit log).
  std::array<std::vector<int64_t>, 2> ded_rows;
  std::array<TrainReport, 2> reports;
  ErrorMap classifier_realtime;
  ErrorMap classifier_batch;
  double wall_seconds = 0.0;
};

/// Split, then TrainOnRows.
ModelBundle TrainPipeline(const Dataset &data, const PipelineConfig &config,
                          TrainingSummary *summary = nullptr);

/// Fits the standardizer on the union of ded_rows, one embedding and network
/// per hypothesis on ded_rows[h], then both classifiers on classifier_rows.
ModelBundle TrainOnRows(const Dataset &data,
                        const std::array<std::vector<int64_t>, 2> &ded_rows,
                        const std::vector<int64_t> &classifier_rows,
                        const PipelineConfig &config,
                        TrainingSummary *summary = nullptr);

/// Batches smaller than this fall back to Nystrom targets.
inline constexpr int64_t kMinPerBatchDmFrames = 200;

/// Diffusion targets of standardized rows `z` for both networks. Default:
/// Nystrom extension into each hypothesis' training embedding. With
/// `per_batch_dm`, one joint embedding of the batch serves both networks;
/// `presence` (predicted or true labels) is used to warn about a batch that
/// is essentially single-hypothesis.
std::array<RowMatrix, 2> DiffusionTargets(const RowMatrix &z,
                                          const ModelBundle &bundle,
                                          bool per_batch_dm,
                                          const FrameLabels &presence);

struct Predictions {
  FrameLabels labels;
  std::vector<double> scores;
};

/// Error map of raw feature rows under the bundle.
ErrorMap ComputeErrorMap(const RowMatrix &raw_features, const ModelBundle &bundle,
                         ErrorMode mode, bool per_batch_dm = false);

Predictions Classify(const ErrorMap &map, const ModelBundle &bundle);

/// Offline inference over precomputed raw features.
Predictions InferFeatures(const RowMatrix &raw_features, const ModelBundle &bundle,
                          ErrorMode mode, bool per_batch_dm = false);

void WritePredictionsCsv(const Predictions &p, const std::string &path);
Predictions ReadPredictionsCsv(const std::string &path);

struct FrameDecision {
  int64_t index = 0;
  int label = 0;
  double score = 0.0;
};

/// Frame-by-frame realtime detector. A decision for frame n is available once
/// frame n + FeatureStream::kLookaheadFrames has been pushed. The bundle must
/// outlive the detector and may be shared by any number of detectors.
class RealtimeDetector {
 public:
  explicit RealtimeDetector(const ModelBundle &bundle);

  /// `frame` must hold exactly frame_length samples ("stream underrun"
  /// otherwise).
  std::vector<FrameDecision> Push(std::span<const double> frame);
  /// Decisions for the frames still waiting on look-ahead.
  std::vector<FrameDecision> Flush();

 private:
  FrameDecision Decide(const Eigen::VectorXd &raw_features);

  const ModelBundle &bundle_;
  FeatureStream stream_;
  int64_t next_index_ = 0;
};

/// Frames `signal` and streams it through a RealtimeDetector.
Predictions InferRealtimeStream(const AudioSignal &signal,
                                const ModelBundle &bundle);

}  // namespace dvad

#endif  // DVAD_PIPELINE_H_
