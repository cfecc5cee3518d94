// dvad/mel-features.h

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

#ifndef DVAD_MEL_FEATURES_H_
#define DVAD_MEL_FEATURES_H_

#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "dvad/audio-scene.h"
#include "dvad/common.h"

namespace dvad {

struct MfccConfig {
  int num_ceps = 8;
  int num_mel_filters = 26;
  int fft_length = 1024;
  int sample_rate_hz = 8000;
  double low_hz = 0.0;
  double high_hz = 4000.0;
  double log_floor = 1e-10;
  bool weighting_enabled = true;
  // Minimum-statistics noise tracker.
  int noise_window_frames = 50;
  double noise_bias = 1.5;
  double noise_smoothing = 0.7;

  /// Throws DataError when inconsistent with itself or with `frame_length`.
  void Check(int frame_length) const;
};

/// Hamming window, zero padding, power spectrum and triangular mel filters.
class MelFilterbank {
 public:
  MelFilterbank(const MfccConfig &config, int frame_length);

  /// Filter energies of one frame (length == frame_length).
  Eigen::VectorXd BandPowers(std::span<const double> frame) const;

  int frame_length() const { return frame_length_; }
  int num_bins() const { return config_.fft_length / 2 + 1; }
  /// num_mel_filters x num_bins triangular weights.
  const RowMatrix &weights() const { return weights_; }
  const Eigen::VectorXd &window() const { return window_; }

 private:
  MfccConfig config_;
  int frame_length_;
  Eigen::VectorXd window_;
  RowMatrix weights_;
};

/// Causal minimum-statistics noise power tracker: recursive smoothing of the
/// band powers, minimum over the last `noise_window_frames` smoothed values,
/// times `noise_bias`, floored at `log_floor`.
class NoiseTracker {
 public:
  explicit NoiseTracker(const MfccConfig &config);
  Eigen::VectorXd Update(const Eigen::VectorXd &band_powers);

 private:
  MfccConfig config_;
  Eigen::VectorXd smoothed_;
  std::deque<Eigen::VectorXd> history_;
};

/// Per-frame, per-band noise power (num_frames x num_mel_filters).
RowMatrix EstimateNoisePsd(const FrameSequence &frames,
                           const MfccConfig &config);

/// Weighted MFCCs (coefficients 1..num_ceps) from precomputed band powers.
Eigen::VectorXd MfccFromBandPowers(const Eigen::VectorXd &band_powers,
                                   const Eigen::VectorXd &noise_psd,
                                   const MfccConfig &config);

/// Weighted MFCCs of a single frame.
Eigen::VectorXd ComputeMfcc(std::span<const double> frame,
                            const Eigen::VectorXd &noise_psd,
                            const MfccConfig &config);

/// [c, delta c, delta-delta c] per row; central differences with edge
/// replication.
RowMatrix AppendDeltas(const RowMatrix &mfcc);

/// Row n becomes [a_{n-J}, ..., a_n, ..., a_{n+J}], replicating edge rows.
RowMatrix ConcatContext(const RowMatrix &base, int context = 1);

/// Full raw (unstandardized) context features for a frame sequence.
RowMatrix ExtractFeatures(const FrameSequence &frames,
                          const MfccConfig &config);

/// Frame-by-frame version of ExtractFeatures. Context row n is released once
/// frame n + 3 has been pushed (the deltas and the context window each look
/// one frame ahead); Flush() releases the tail. The released rows are
/// bitwise identical to ExtractFeatures on the same frames.
class FeatureStream {
 public:
  FeatureStream(const MfccConfig &config, int frame_length);

  /// Returns zero or one completed feature row.
  std::vector<Eigen::VectorXd> Push(std::span<const double> frame);
  std::vector<Eigen::VectorXd> Flush();

  static constexpr int kLookaheadFrames = 3;

 private:
  Eigen::VectorXd Emit(int64_t index, int64_t last);
  const Eigen::VectorXd &Mfcc(int64_t i) const;

  MfccConfig config_;
  MelFilterbank filterbank_;
  NoiseTracker tracker_;
  std::deque<Eigen::VectorXd> mfcc_;
  int64_t first_index_ = 0;  // absolute index of mfcc_.front()
  int64_t pushed_ = 0;
  int64_t emitted_ = 0;
};

/// Per-dimension standardization followed by a [0, 1] range map learned on
/// the fit set.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  Eigen::VectorXd range_lo;
  Eigen::VectorXd range_hi;
  std::vector<bool> degenerate;

  int dim() const { return static_cast<int>(mean.size()); }
  /// z = (v - mean) / stddev.
  Eigen::VectorXd Standardize(const Eigen::VectorXd &v) const;
  /// clamp((z - lo) / (hi - lo), 0, 1); 0.5 where hi == lo.
  Eigen::VectorXd RangeMap(const Eigen::VectorXd &z) const;
  RowMatrix StandardizeRows(const RowMatrix &rows) const;
  RowMatrix ApplyRows(const RowMatrix &rows) const;
};

Standardizer FitStandardizer(const RowMatrix &training_features);
Eigen::VectorXd ApplyStandardizer(const Eigen::VectorXd &v,
                                  const Standardizer &s);

}  // namespace dvad

#endif  // DVAD_MEL_FEATURES_H_
