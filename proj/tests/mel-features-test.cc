// tests/mel-features-test.cc

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

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dvad/audio-scene.h"
#include "dvad/mel-features.h"
#include "test-util.h"

namespace dvad {
namespace {

using testing::NaiveDft;
using testing::RandomMatrix;

constexpr int kM = 634;

FrameSequence FramesOf(const std::vector<double> &x) {
  AudioSignal s;
  s.samples = x;
  return FrameSignal(s, kM, 317);
}

std::vector<double> WhiteNoise(int64_t n, double sd, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (double &v : x) v = g(rng);
  return x;
}

// Windowed, zero-padded naive DFT through the filterbank weights.
Eigen::VectorXd OracleBandPowers(const MelFilterbank &bank, const MfccConfig &c,
                                 std::span<const double> frame) {
  std::vector<double> w(frame.size());
  for (size_t t = 0; t < frame.size(); ++t) w[t] = frame[t] * bank.window()[t];
  auto spec = NaiveDft(w, c.fft_length, c.fft_length / 2 + 1);
  Eigen::VectorXd power(spec.size());
  for (size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]);
  return bank.weights() * power;
}

TEST(Filterbank, MatchesNaiveDftAndConcentratesTone) {
  MfccConfig c;
  c.weighting_enabled = false;
  MelFilterbank bank(c, kM);
  std::vector<double> tone(kM);
  for (int t = 0; t < kM; ++t) tone[t] = std::sin(2.0 * std::numbers::pi * 1000.0 * t / 8000.0);
  Eigen::VectorXd got = bank.BandPowers(tone);
  Eigen::VectorXd ref = OracleBandPowers(bank, c, tone);
  EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-9 * ref.maxCoeff());

  // The two filters whose passbands contain 1 kHz.
  const int bin = static_cast<int>(std::lround(1000.0 / 8000.0 * c.fft_length));
  double spanning = 0.0;
  for (int b = 0; b < c.num_mel_filters; ++b)
    if (bank.weights()(b, bin) > 0.0) spanning += ref[b];
  EXPECT_GE(spanning / ref.sum(), 0.90);
}

TEST(Mfcc, ZeroFrameGivesZeroCoefficients) {
  MfccConfig c;
  std::vector<double> zero(kM, 0.0);
  Eigen::VectorXd m = ComputeMfcc(zero, Eigen::VectorXd::Zero(c.num_mel_filters), c);
  ASSERT_EQ(m.size(), 8);
  EXPECT_LT(m.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mfcc, MatchesDctOracle) {
  MfccConfig c;
  c.weighting_enabled = false;
  std::vector<double> x = WhiteNoise(kM, 0.1, 5);
  MelFilterbank bank(c, kM);
  Eigen::VectorXd e = OracleBandPowers(bank, c, x);
  Eigen::VectorXd m = ComputeMfcc(x, Eigen::VectorXd::Zero(c.num_mel_filters), c);
  const int nb = c.num_mel_filters;
  for (int k = 1; k <= c.num_ceps; ++k) {
    double acc = 0.0;
    for (int b = 0; b < nb; ++b)
      acc += std::log(e[b]) * std::cos(std::numbers::pi * k * (2 * b + 1) / (2.0 * nb));
    EXPECT_NEAR(m[k - 1], std::sqrt(2.0 / nb) * acc, 1e-9);
  }
}

TEST(Mfcc, ZeroNoiseMakesWeightingInert) {
  MfccConfig on, off;
  off.weighting_enabled = false;
  std::vector<double> x = WhiteNoise(kM, 0.2, 6);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(on.num_mel_filters);
  EXPECT_EQ(ComputeMfcc(x, zero, on), ComputeMfcc(x, zero, off));
}

TEST(Mfcc, ScaleShiftsOnlyTheConstantTerm) {
  MfccConfig c;
  c.weighting_enabled = false;
  std::vector<double> x = WhiteNoise(kM, 0.1, 7), y = x;
  for (double &v : y) v *= 3.0;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(c.num_mel_filters);
  EXPECT_LT((ComputeMfcc(x, zero, c) - ComputeMfcc(y, zero, c)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NoisePsd, WhiteNoiseWithinThreeDb) {
  MfccConfig c;
  const double sd = 0.05;
  FrameSequence f = FramesOf(WhiteNoise(317 * 400, sd, 8));
  RowMatrix psd = EstimateNoisePsd(f, c);
  MelFilterbank bank(c, kM);
  // E|X_k|^2 = sd^2 * sum_t w_t^2 for every bin of white noise.
  const double bin_power = sd * sd * bank.window().squaredNorm();
  Eigen::VectorXd truth = bank.weights().rowwise().sum() * bin_power;
  for (int b = 0; b < c.num_mel_filters; ++b) {
    double mean = 0.0;
    for (int64_t n = 100; n < psd.rows(); ++n) mean += psd(n, b);
    mean /= static_cast<double>(psd.rows() - 100);
    EXPECT_LT(std::abs(10.0 * std::log10(mean / truth[b])), 3.0) << "band " << b;
  }
}

TEST(NoisePsd, SilenceSitsAtTheFloor) {
  MfccConfig c;
  RowMatrix psd = EstimateNoisePsd(FramesOf(std::vector<double>(317 * 20, 0.0)), c);
  EXPECT_TRUE((psd.array() == c.log_floor).all());
}

TEST(NoisePsd, BelowMeanPowerForSpeechPlusNoise) {
  SceneSpec s;
  s.speech_duration_s = 30.0;
  s.rng_seed = 4;
  SceneMix mix = MixScene(s);
  MfccConfig c;
  FrameSequence f = FrameSignal(mix.noisy, kM, 317);
  RowMatrix psd = EstimateNoisePsd(f, c);
  MelFilterbank bank(c, kM);
  Eigen::VectorXd mean_power = Eigen::VectorXd::Zero(c.num_mel_filters);
  for (int64_t n = 0; n < f.NumFrames(); ++n)
    mean_power += bank.BandPowers(std::span<const double>(f.frames.row(n).data(), kM));
  mean_power /= static_cast<double>(f.NumFrames());
  Eigen::VectorXd mean_psd = psd.colwise().mean().transpose();
  for (int b = 0; b < c.num_mel_filters; ++b) EXPECT_LE(mean_psd[b], mean_power[b]);
}

TEST(Deltas, ConstantAndRamp) {
  RowMatrix constant = RowMatrix::Constant(6, 8, 2.5);
  RowMatrix d = AppendDeltas(constant);
  ASSERT_EQ(d.cols(), 24);
  EXPECT_LT(d.rightCols(16).cwiseAbs().maxCoeff(), 1e-15);

  Eigen::RowVectorXd v = testing::RandomVector(8, 3).transpose();
  RowMatrix ramp(10, 8);
  for (int n = 0; n < 10; ++n) ramp.row(n) = n * v;
  RowMatrix r = AppendDeltas(ramp);
  for (int n = 2; n < 8; ++n) {
    EXPECT_LT((r.row(n).segment(8, 8) - v).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(r.row(n).segment(16, 8).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Deltas, MatchLoopOracle) {
  RowMatrix c = RandomMatrix(15, 8, 9, -3, 3);
  RowMatrix got = AppendDeltas(c);
  const int n = 15;
  auto at = [&](const RowMatrix &m, int i, int j) { return m(std::clamp(i, 0, n - 1), j); };
  RowMatrix delta(n, 8), delta2(n, 8);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 8; ++j) delta(i, j) = (at(c, i + 1, j) - at(c, i - 1, j)) / 2.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 8; ++j) delta2(i, j) = (at(delta, i + 1, j) - at(delta, i - 1, j)) / 2.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 8; ++j) {
      EXPECT_EQ(got(i, j), c(i, j));
      EXPECT_EQ(got(i, 8 + j), delta(i, j));
      EXPECT_EQ(got(i, 16 + j), delta2(i, j));
    }
}

TEST(Context, ReplicationAndSlices) {
  RowMatrix one = RandomMatrix(1, 24, 10);
  RowMatrix c1 = ConcatContext(one, 1);
  ASSERT_EQ(c1.cols(), 72);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(c1.row(0).segment(24 * k, 24), one.row(0));

  RowMatrix base = RandomMatrix(9, 24, 11);
  RowMatrix c = ConcatContext(base, 1);
  for (int n = 1; n < 8; ++n) {
    EXPECT_EQ(c.row(n).segment(0, 24), base.row(n - 1));
    EXPECT_EQ(c.row(n).segment(24, 24), base.row(n));
    EXPECT_EQ(c.row(n).segment(48, 24), base.row(n + 1));
  }
}

TEST(Standardizer, HandComputedPopulationStd) {
  RowMatrix x(2, 2);
  x << 0.0, 5.0, 2.0, 5.0;
  Standardizer s = FitStandardizer(x);
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
  Eigen::VectorXd z0 = s.Standardize(x.row(0).transpose());
  Eigen::VectorXd z1 = s.Standardize(x.row(1).transpose());
  EXPECT_DOUBLE_EQ(z0[0], -1.0);
  EXPECT_DOUBLE_EQ(z1[0], 1.0);
  // Constant dimension.
  EXPECT_TRUE(s.degenerate[1]);
  EXPECT_FALSE(s.degenerate[0]);
  EXPECT_DOUBLE_EQ(s.stddev[1], 1.0);
  EXPECT_DOUBLE_EQ(z0[1], 0.0);
}

TEST(Standardizer, FitSetMomentsAndRange) {
  RowMatrix x = RandomMatrix(500, 72, 12, -4, 9);
  Standardizer s = FitStandardizer(x);
  RowMatrix z = s.StandardizeRows(x);
  for (int l = 0; l < 72; ++l) {
    const double mean = z.col(l).mean();
    const double sd = std::sqrt((z.col(l).array() - mean).square().mean());
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_NEAR(sd, 1.0, 1e-6);
  }
  RowMatrix r = s.ApplyRows(RandomMatrix(200, 72, 13, -20, 30));
  EXPECT_GE(r.minCoeff(), 0.0);
  EXPECT_LE(r.maxCoeff(), 1.0);
}

TEST(Standardizer, MeanMapsToOffsetAndClampBelow) {
  RowMatrix x = RandomMatrix(50, 4, 14, 0, 1);
  Standardizer s = FitStandardizer(x);
  Eigen::VectorXd r = ApplyStandardizer(s.mean, s);
  for (int l = 0; l < 4; ++l)
    EXPECT_NEAR(r[l], (0.0 - s.range_lo[l]) / (s.range_hi[l] - s.range_lo[l]), 1e-15);
  Eigen::VectorXd below = x.colwise().minCoeff().transpose().array() - 1.0;
  EXPECT_TRUE((ApplyStandardizer(below, s).array() == 0.0).all());
}

TEST(Standardizer, InRangeValuesInvert) {
  RowMatrix x = RandomMatrix(80, 6, 15, -2, 2);
  Standardizer s = FitStandardizer(x);
  for (int i = 0; i < 80; ++i) {
    Eigen::VectorXd z = s.Standardize(x.row(i).transpose());
    Eigen::VectorXd r = s.RangeMap(z);
    Eigen::VectorXd back =
        s.range_lo.array() + r.array() * (s.range_hi - s.range_lo).array();
    EXPECT_LT((back - z).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FeatureStream, BitIdenticalToBatchExtraction) {
  SceneSpec spec;
  spec.speech_duration_s = 15.0;
  spec.rng_seed = 21;
  SceneMix mix = MixScene(spec);
  MfccConfig c;
  FrameSequence f = FrameSignal(mix.noisy, kM, 317);
  RowMatrix batch = ExtractFeatures(f, c);
  ASSERT_EQ(batch.cols(), 72);
  FeatureStream stream(c, kM);
  std::vector<Eigen::VectorXd> rows;
  for (int64_t n = 0; n < f.NumFrames(); ++n) {
    auto out = stream.Push(std::span<const double>(f.frames.row(n).data(), kM));
    EXPECT_EQ(rows.size() + out.size(),
              static_cast<size_t>(std::max<int64_t>(0, n + 1 - FeatureStream::kLookaheadFrames)));
    rows.insert(rows.end(), out.begin(), out.end());
  }
  auto tail = stream.Flush();
  rows.insert(rows.end(), tail.begin(), tail.end());
  ASSERT_EQ(static_cast<int64_t>(rows.size()), batch.rows());
  for (int64_t n = 0; n < batch.rows(); ++n)
    ASSERT_TRUE((rows[n].transpose().array() == batch.row(n).array()).all()) << n;
  EXPECT_EQ(ExtractFeatures(f, c), batch);
}

}  // namespace
}  // namespace dvad
