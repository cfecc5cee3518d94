// src/mel-features.cc

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

#include "dvad/mel-features.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace dvad {

void MfccConfig::Check(int frame_length) const {
  if (num_ceps < 1) throw DataError("num_ceps must be >= 1");
  if (num_mel_filters < 2) throw DataError("num_mel_filters must be >= 2");
  if (num_ceps > num_mel_filters)
    throw DataError("num_ceps must not exceed num_mel_filters");
  if (fft_length < frame_length)
    throw DataError("fft_length (" + std::to_string(fft_length) +
                    ") must be >= frame length (" +
                    std::to_string(frame_length) + ")");
  if (sample_rate_hz <= 0) throw DataError("sample rate must be positive");
  if (!(low_hz >= 0.0) || !(high_hz > low_hz) ||
      high_hz > sample_rate_hz / 2.0)
    throw DataError("mel band edges must satisfy 0 <= low < high <= rate/2");
  if (!(log_floor > 0.0)) throw DataError("log_floor must be positive");
  if (noise_window_frames < 1)
    throw DataError("noise_window_frames must be >= 1");
  if (!(noise_bias > 0.0)) throw DataError("noise_bias must be positive");
  if (!(noise_smoothing >= 0.0 && noise_smoothing < 1.0))
    throw DataError("noise_smoothing must lie in [0, 1)");
}

namespace {
double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}
}  // namespace

MelFilterbank::MelFilterbank(const MfccConfig &config, int frame_length)
    : config_(config), frame_length_(frame_length) {
  config.Check(frame_length);
  window_.resize(frame_length);
  for (int i = 0; i < frame_length; ++i)
    window_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                        (frame_length - 1));
  const int bins = num_bins();
  const int filters = config.num_mel_filters;
  std::vector<double> edges(filters + 2);
  const double mel_lo = HzToMel(config.low_hz), mel_hi = HzToMel(config.high_hz);
  for (int i = 0; i < filters + 2; ++i)
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (filters + 1));
  weights_ = RowMatrix::Zero(filters, bins);
  for (int b = 0; b < filters; ++b) {
    const double left = edges[b], center = edges[b + 1], right = edges[b + 2];
    for (int k = 0; k < bins; ++k) {
      const double f =
          static_cast<double>(k) * config.sample_rate_hz / config.fft_length;
      if (f > left && f < right)
        weights_(b, k) = f <= center ? (f - left) / (center - left)
                                     : (right - f) / (right - center);
    }
  }
}

Eigen::VectorXd MelFilterbank::BandPowers(std::span<const double> frame) const {
  if (static_cast<int>(frame.size()) != frame_length_)
    throw DataError("frame length mismatch in filterbank");
  std::vector<double> padded(config_.fft_length, 0.0);
  for (int i = 0; i < frame_length_; ++i) {
    if (!std::isfinite(frame[i])) throw DataError("non-finite frame sample");
    padded[i] = frame[i] * window_[i];
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  Eigen::VectorXd power(num_bins());
  for (int k = 0; k < num_bins(); ++k) power[k] = std::norm(spectrum[k]);
  return weights_ * power;
}

NoiseTracker::NoiseTracker(const MfccConfig &config) : config_(config) {}

Eigen::VectorXd NoiseTracker::Update(const Eigen::VectorXd &band_powers) {
  if (smoothed_.size() == 0)
    smoothed_ = band_powers;
  else
    smoothed_ = config_.noise_smoothing * smoothed_ +
                (1.0 - config_.noise_smoothing) * band_powers;
  history_.push_back(smoothed_);
  if (static_cast<int>(history_.size()) > config_.noise_window_frames)
    history_.pop_front();
  Eigen::VectorXd minimum = history_.front();
  for (const auto &h : history_) minimum = minimum.cwiseMin(h);
  return (config_.noise_bias * minimum).cwiseMax(config_.log_floor);
}

RowMatrix EstimateNoisePsd(const FrameSequence &frames,
                           const MfccConfig &config) {
  if (frames.NumFrames() < 1) throw DataError("no frames for noise estimate");
  MelFilterbank bank(config, frames.frame_length);
  NoiseTracker tracker(config);
  RowMatrix out(frames.NumFrames(), config.num_mel_filters);
  for (int64_t n = 0; n < frames.NumFrames(); ++n) {
    std::span<const double> row(frames.frames.row(n).data(), frames.frame_length);
    out.row(n) = tracker.Update(bank.BandPowers(row)).transpose();
  }
  return out;
}

Eigen::VectorXd MfccFromBandPowers(const Eigen::VectorXd &band_powers,
                                   const Eigen::VectorXd &noise_psd,
                                   const MfccConfig &config) {
  const int bands = config.num_mel_filters;
  Eigen::VectorXd log_energy(bands);
  for (int b = 0; b < bands; ++b) {
    double e = band_powers[b];
    if (config.weighting_enabled && e > 0.0)
      e *= std::max(1.0 - noise_psd[b] / e, 0.1);
    log_energy[b] = std::log(std::max(e, config.log_floor));
  }
  // Orthonormal DCT-II, coefficients 1..num_ceps.
  Eigen::VectorXd ceps(config.num_ceps);
  const double scale = std::sqrt(2.0 / bands);
  for (int k = 1; k <= config.num_ceps; ++k) {
    double acc = 0.0;
    for (int b = 0; b < bands; ++b)
      acc += log_energy[b] *
             std::cos(std::numbers::pi * k * (b + 0.5) / bands);
    ceps[k - 1] = scale * acc;
  }
  return ceps;
}

Eigen::VectorXd ComputeMfcc(std::span<const double> frame,
                            const Eigen::VectorXd &noise_psd,
                            const MfccConfig &config) {
  MelFilterbank bank(config, static_cast<int>(frame.size()));
  return MfccFromBandPowers(bank.BandPowers(frame), noise_psd, config);
}

namespace {

int64_t Clamp(int64_t i, int64_t last) { return std::clamp<int64_t>(i, 0, last); }

// The single place where the difference arithmetic lives, so the batch and
// streaming paths agree bit for bit.
template <typename Row>
Eigen::VectorXd CentralDifference(const Row &next, const Row &prev) {
  return (next - prev) / 2.0;
}

}  // namespace

RowMatrix AppendDeltas(const RowMatrix &mfcc) {
  const int64_t n = mfcc.rows();
  const int64_t c = mfcc.cols();
  if (n < 1) throw DataError("no frames for deltas");
  RowMatrix delta(n, c), delta2(n, c);
  for (int64_t i = 0; i < n; ++i)
    delta.row(i) = CentralDifference<Eigen::VectorXd>(
                       mfcc.row(Clamp(i + 1, n - 1)).transpose(),
                       mfcc.row(Clamp(i - 1, n - 1)).transpose())
                       .transpose();
  for (int64_t i = 0; i < n; ++i)
    delta2.row(i) = CentralDifference<Eigen::VectorXd>(
                        delta.row(Clamp(i + 1, n - 1)).transpose(),
                        delta.row(Clamp(i - 1, n - 1)).transpose())
                        .transpose();
  RowMatrix out(n, 3 * c);
  out << mfcc, delta, delta2;
  return out;
}

RowMatrix ConcatContext(const RowMatrix &base, int context) {
  const int64_t n = base.rows();
  const int64_t c = base.cols();
  if (n < 1) throw DataError("no frames for context");
  if (context < 0) throw DataError("context must be nonnegative");
  const int width = 2 * context + 1;
  RowMatrix out(n, width * c);
  for (int64_t i = 0; i < n; ++i)
    for (int j = -context; j <= context; ++j)
      out.block(i, (j + context) * c, 1, c) = base.row(Clamp(i + j, n - 1));
  return out;
}

RowMatrix ExtractFeatures(const FrameSequence &frames,
                          const MfccConfig &config) {
  const int64_t n = frames.NumFrames();
  if (n < 1) throw DataError("no frames to extract features from");
  MelFilterbank bank(config, frames.frame_length);
  NoiseTracker tracker(config);
  RowMatrix mfcc(n, config.num_ceps);
  for (int64_t i = 0; i < n; ++i) {
    std::span<const double> frame(frames.frames.row(i).data(), frames.frame_length);
    Eigen::VectorXd bands = bank.BandPowers(frame);
    mfcc.row(i) =
        MfccFromBandPowers(bands, tracker.Update(bands), config).transpose();
  }
  return ConcatContext(AppendDeltas(mfcc), 1);
}

// ---------------------------------------------------------------------------

FeatureStream::FeatureStream(const MfccConfig &config, int frame_length)
    : config_(config), filterbank_(config, frame_length), tracker_(config) {}

const Eigen::VectorXd &FeatureStream::Mfcc(int64_t i) const {
  return mfcc_[static_cast<size_t>(i - first_index_)];
}

Eigen::VectorXd FeatureStream::Emit(int64_t index, int64_t last) {
  auto delta = [&](int64_t i) {
    return CentralDifference<Eigen::VectorXd>(Mfcc(Clamp(i + 1, last)),
                                              Mfcc(Clamp(i - 1, last)));
  };
  auto base = [&](int64_t i) {
    const int64_t c = config_.num_ceps;
    Eigen::VectorXd row(3 * c);
    row.segment(0, c) = Mfcc(i);
    row.segment(c, c) = delta(i);
    row.segment(2 * c, c) = CentralDifference<Eigen::VectorXd>(
        delta(Clamp(i + 1, last)), delta(Clamp(i - 1, last)));
    return row;
  };
  const int64_t c3 = 3 * config_.num_ceps;
  Eigen::VectorXd out(3 * c3);
  out.segment(0, c3) = base(Clamp(index - 1, last));
  out.segment(c3, c3) = base(index);
  out.segment(2 * c3, c3) = base(Clamp(index + 1, last));
  return out;
}

std::vector<Eigen::VectorXd> FeatureStream::Push(
    std::span<const double> frame) {
  Eigen::VectorXd bands = filterbank_.BandPowers(frame);
  mfcc_.push_back(MfccFromBandPowers(bands, tracker_.Update(bands), config_));
  ++pushed_;
  std::vector<Eigen::VectorXd> out;
  const int64_t last = pushed_ - 1;
  if (last - emitted_ >= kLookaheadFrames) {
    out.push_back(Emit(emitted_, last));
    ++emitted_;
  }
  // Keep what the next emission can touch: indices >= emitted_ - 3.
  while (first_index_ < emitted_ - kLookaheadFrames) {
    mfcc_.pop_front();
    ++first_index_;
  }
  return out;
}

std::vector<Eigen::VectorXd> FeatureStream::Flush() {
  std::vector<Eigen::VectorXd> out;
  const int64_t last = pushed_ - 1;
  while (emitted_ <= last) {
    out.push_back(Emit(emitted_, last));
    ++emitted_;
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd Standardizer::Standardize(const Eigen::VectorXd &v) const {
  if (v.size() != mean.size())
    throw DataError("feature dimension mismatch in standardizer");
  return ((v - mean).array() / stddev.array()).matrix();
}

Eigen::VectorXd Standardizer::RangeMap(const Eigen::VectorXd &z) const {
  Eigen::VectorXd r(z.size());
  for (Eigen::Index l = 0; l < z.size(); ++l) {
    const double span = range_hi[l] - range_lo[l];
    r[l] = span > 0.0 ? std::clamp((z[l] - range_lo[l]) / span, 0.0, 1.0)
                      : 0.5;
  }
  return r;
}

RowMatrix Standardizer::StandardizeRows(const RowMatrix &rows) const {
  RowMatrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.row(i) = Standardize(rows.row(i).transpose()).transpose();
  return out;
}

RowMatrix Standardizer::ApplyRows(const RowMatrix &rows) const {
  RowMatrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.row(i) = ApplyStandardizer(rows.row(i).transpose(), *this).transpose();
  return out;
}

Standardizer FitStandardizer(const RowMatrix &training_features) {
  const Eigen::Index n = training_features.rows();
  const Eigen::Index d = training_features.cols();
  if (n < 2) throw DataError("standardizer needs at least 2 observations");
  Standardizer s;
  s.mean = training_features.colwise().mean().transpose();
  s.stddev.resize(d);
  s.degenerate.assign(d, false);
  for (Eigen::Index l = 0; l < d; ++l) {
    const double var =
        (training_features.col(l).array() - s.mean[l]).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      s.stddev[l] = sd;
    } else {
      s.stddev[l] = 1.0;
      s.degenerate[l] = true;
    }
  }
  s.range_lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  s.range_hi = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd z = s.Standardize(training_features.row(i).transpose());
    s.range_lo = s.range_lo.cwiseMin(z);
    s.range_hi = s.range_hi.cwiseMax(z);
  }
  return s;
}

Eigen::VectorXd ApplyStandardizer(const Eigen::VectorXd &v,
                                  const Standardizer &s) {
  return s.RangeMap(s.Standardize(v));
}

}  // namespace dvad
