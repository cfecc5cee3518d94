// tests/classifier-test.cc

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

// Error map, linear SVM and evaluation metrics.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "dvad/error-map.h"
#include "dvad/linear-svm.h"
#include "dvad/metrics.h"
#include "oracles.h"
#include "test-util.h"

namespace dvad {
namespace {

using testing::Blobs;
using testing::RandomMatrix;
using testing::RandomVector;

TEST(ErrorMap, EncoderErrorExamples) {
  Eigen::Vector3d a(0.5, 0.3, 0.2), b(0.4, 0.4, 0.2);
  EXPECT_NEAR(EncoderError(a, b), 0.2, 1e-15);
  EXPECT_EQ(EncoderError(a, a), 0.0);
  for (uint64_t s = 0; s < 50; ++s)
    EXPECT_GE(EncoderError(RandomVector(3, s, -1, 1), RandomVector(3, s + 99, -1, 1)), 0.0);
}

TEST(ErrorMap, DecoderErrorExamples) {
  Eigen::VectorXd x = RandomVector(72, 1);
  EXPECT_EQ(DecoderError(x, x), 0.0);
  Eigen::VectorXd y = x;
  y[17] += 1.0;
  EXPECT_NEAR(DecoderError(x, y), 1.0, 1e-15);
  Eigen::VectorXd r = RandomVector(72, 2);
  double loop = 0.0;
  for (int i = 0; i < 72; ++i) loop += std::abs(x[i] - r[i]);
  EXPECT_EQ(DecoderError(x, r), loop);
}

TEST(ErrorMap, DimensionsAndProjection) {
  TrainConfig cfg;
  cfg.init_std = 0.3;
  DedModel d0 = InitializeDed(kDefaultDedDims, Hypothesis::kAbsent, cfg);
  DedModel d1 = InitializeDed(kDefaultDedDims, Hypothesis::kPresent, cfg);
  RowMatrix x = RandomMatrix(30, 72, 5);
  RowMatrix t0 = RandomMatrix(30, 3, 6), t1 = RandomMatrix(30, 3, 7);
  ErrorMap rt = BuildErrorMap(x, d0, d1, ErrorMode::kRealtime);
  ErrorMap bt = BuildErrorMap(x, d0, d1, ErrorMode::kBatch, &t0, &t1);
  ASSERT_EQ(rt.coords.cols(), 2);
  ASSERT_EQ(bt.coords.cols(), 4);
  EXPECT_THROW(BuildErrorMap(x, d0, d1, ErrorMode::kBatch), DataError);
  for (Eigen::Index i = 0; i < 30; ++i) {
    // Realtime coordinates are the decoder components of the batch ones.
    EXPECT_EQ(rt.coords(i, 0), bt.coords(i, 1));
    EXPECT_EQ(rt.coords(i, 1), bt.coords(i, 3));
    EXPECT_GE(bt.coords.row(i).minCoeff(), 0.0);
    EXPECT_NO_THROW(bt.Row(i).Check());
    const Eigen::VectorXd xi = x.row(i).transpose();
    EXPECT_EQ(bt.coords(i, 0), EncoderError(t0.row(i).transpose(), Forward(d0, xi).bottleneck));
    EXPECT_EQ(bt.coords(i, 2), EncoderError(t1.row(i).transpose(), Forward(d1, xi).bottleneck));
    ErrorCoordinate c = RealtimeCoordinate(xi, d0, d1);
    EXPECT_EQ(c.values[0], rt.coords(i, 0));
    EXPECT_EQ(c.values[1], rt.coords(i, 1));
  }
}

TEST(ErrorMap, CoordinateCheckRejectsBadValues) {
  ErrorCoordinate c{ErrorMode::kRealtime, Eigen::Vector2d(0.1, -0.2)};
  EXPECT_THROW(c.Check(), DataError);
  c.values = Eigen::Vector3d(0.1, 0.2, 0.3);
  EXPECT_THROW(c.Check(), DataError);
  EXPECT_THROW(ParseErrorMode("offline"), DataError);
  EXPECT_EQ(ParseErrorMode("batch"), ErrorMode::kBatch);
}

TEST(Svm, SeparableBlobsAreFullyLearned) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    FrameLabels y;
    // Centers 2 apart along the diagonal, spread clipped by construction.
    ErrorMap m = Blobs(60, 1.5, 0.2, seed, &y);
    SvmModel svm = TrainSvm(m, y, SvmTrainConfig());
    int correct = 0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      correct += ToInt(Classify(m.Row(i), svm)) == y[i];
    EXPECT_EQ(correct, m.size()) << "seed " << seed;
  }
}

TEST(Svm, SingleClassThrows) {
  ErrorMap m;
  m.coords = RandomMatrix(10, 2, 1);
  FrameLabels y(10, 1);
  EXPECT_THROW(TrainSvm(m, y, SvmTrainConfig()), DataError);
  y.assign(10, 0);
  EXPECT_THROW(TrainSvm(m, y, SvmTrainConfig()), DataError);
}

TEST(Svm, SameSeedSameModel) {
  FrameLabels y;
  ErrorMap m = Blobs(40, 0.5, 1.0, 3, &y);
  SvmModel a = TrainSvm(m, y, SvmTrainConfig());
  SvmModel b = TrainSvm(m, y, SvmTrainConfig());
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_FALSE(a.weights.isZero(0.0));
}

TEST(Svm, ObjectiveMatchesLoopOracle) {
  FrameLabels y;
  ErrorMap m = Blobs(31, 0.5, 1.0, 4, &y);
  SvmTrainConfig cfg;
  for (bool weighted : {false, true}) {
    cfg.class_weighting = weighted;
    EXPECT_NEAR(SvmObjective(m.coords, y, Eigen::Vector2d(0.7, -0.3), 0.2, cfg),
                testing::SvmObjectiveOracle(m.coords, y, cfg.c, weighted, 0.7, -0.3, 0.2),
                1e-12);
  }
}

// Noisy overlapping instances, N <= 50: the trained model's objective is
// within 1% of a dense grid search.
TEST(Svm, ObjectiveNearGridOracle) {
  SvmTrainConfig cfg;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    FrameLabels y;
    ErrorMap m = Blobs(20 + static_cast<int>(seed), 0.6, 1.0, 100 + seed, &y);
    SvmModel svm = TrainSvm(m, y, cfg);
    const double got = SvmObjective(m.coords, y, svm.weights, svm.bias, cfg);
    const double oracle = testing::SvmGridOracle(m.coords, y, cfg.c, cfg.class_weighting);
    EXPECT_LE(got, 1.01 * oracle) << "seed " << seed << " ratio " << got / oracle;
  }
}

TEST(Classify, SignRuleAndBoundary) {
  SvmModel svm;
  svm.weights = Eigen::Vector2d(1.0, -1.0);
  svm.bias = 0.0;
  EXPECT_EQ(Classify({ErrorMode::kRealtime, Eigen::Vector2d(0.3, 0.3)}, svm),
            Hypothesis::kAbsent);
  EXPECT_EQ(Classify({ErrorMode::kRealtime, Eigen::Vector2d(0.5, 0.3)}, svm),
            Hypothesis::kPresent);
  EXPECT_THROW(Score({ErrorMode::kBatch, Eigen::Vector4d::Zero()}, svm), DataError);
  svm.weights = Eigen::Vector2d(0.8, -1.3);
  svm.bias = 0.05;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    ErrorCoordinate c{ErrorMode::kRealtime, Eigen::Vector2d(u(rng), u(rng))};
    const double s = Score(c, svm);
    EXPECT_NEAR(s, 0.8 * c.values[0] - 1.3 * c.values[1] + 0.05, 1e-15);
    EXPECT_EQ(Classify(c, svm), s > 0.0 ? Hypothesis::kPresent : Hypothesis::kAbsent);
    // Positive scaling of the model leaves the decision unchanged.
    SvmModel scaled = svm;
    scaled.weights *= 3.0;
    scaled.bias *= 3.0;
    EXPECT_EQ(Classify(c, scaled), Classify(c, svm));
  }
}

TEST(Metrics, Examples) {
  FrameLabels y(100);
  for (int i = 0; i < 100; ++i) y[i] = i % 2;
  EXPECT_EQ(ComputeMetrics(y, y).accuracy, 1.0);
  FrameLabels flipped = y;
  for (int &v : flipped) v = 1 - v;
  EXPECT_EQ(ComputeMetrics(flipped, y).accuracy, 0.0);
  FrameLabels half = y;
  for (int i = 0; i < 50; ++i) half[i] = 1 - half[i];
  Metrics m = ComputeMetrics(half, y);
  EXPECT_EQ(m.accuracy, 0.5);
  EXPECT_EQ(m.positives, 50);
  EXPECT_NEAR(m.tp_rate + m.fn_rate, 1.0, 1e-15);
  EXPECT_NEAR(m.tn_rate + m.fp_rate, 1.0, 1e-15);
  EXPECT_THROW(ComputeMetrics(FrameLabels(3, 1), FrameLabels(4, 1)), DataError);
  EXPECT_THROW(ComputeMetrics(FrameLabels(4, 1), FrameLabels(4, 1)), DataError);
}

TEST(Metrics, PermutationInvariant) {
  std::mt19937_64 rng(2);
  FrameLabels p(200), y(200);
  for (int i = 0; i < 200; ++i) {
    p[i] = rng() % 2;
    y[i] = i % 3 == 0;
  }
  Metrics a = ComputeMetrics(p, y);
  std::vector<int> idx(200);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  FrameLabels p2(200), y2(200);
  for (int i = 0; i < 200; ++i) {
    p2[i] = p[idx[i]];
    y2[i] = y[idx[i]];
  }
  Metrics b = ComputeMetrics(p2, y2);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.tp_rate, b.tp_rate);
  EXPECT_EQ(a.fp_rate, b.fp_rate);
}

void ExpectStaircase(const RocCurve &roc) {
  ASSERT_GE(roc.points.size(), 2u);
  EXPECT_EQ(roc.points.front().fp_rate, 0.0);
  EXPECT_EQ(roc.points.front().tp_rate, 0.0);
  EXPECT_EQ(roc.points.back().fp_rate, 1.0);
  EXPECT_EQ(roc.points.back().tp_rate, 1.0);
  for (size_t i = 1; i < roc.points.size(); ++i) {
    EXPECT_GE(roc.points[i].fp_rate, roc.points[i - 1].fp_rate);
    EXPECT_GE(roc.points[i].tp_rate, roc.points[i - 1].tp_rate);
    EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
  }
  EXPECT_GE(roc.auc, 0.0);
  EXPECT_LE(roc.auc, 1.0);
}

TEST(Roc, PerfectRanking) {
  std::vector<double> s = {0.1, 0.2, 0.3, 0.8, 0.9};
  FrameLabels y = {0, 0, 0, 1, 1};
  RocCurve roc = Roc(s, y);
  ExpectStaircase(roc);
  EXPECT_EQ(roc.auc, 1.0);
  bool corner = false;
  for (const RocPoint &p : roc.points) corner = corner || (p.fp_rate == 0.0 && p.tp_rate == 1.0);
  EXPECT_TRUE(corner);
}

TEST(Roc, RandomScoresNearHalf) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(10000);
  FrameLabels y(10000);
  for (int i = 0; i < 10000; ++i) {
    s[i] = u(rng);
    y[i] = i % 2;
  }
  RocCurve roc = Roc(s, y);
  ExpectStaircase(roc);
  EXPECT_GE(roc.auc, 0.45);
  EXPECT_LE(roc.auc, 0.55);
}

// AUC equals the probability that a random positive outranks a random
// negative, ties counting one half.
TEST(Roc, AucMatchesPairCountOracle) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> s(300);
    FrameLabels y(300);
    for (int i = 0; i < 300; ++i) {
      y[i] = rng() % 3 == 0;
      s[i] = static_cast<double>(rng() % 40) + (y[i] ? 5.0 : 0.0);  // with ties
    }
    double wins = 0.0, pairs = 0.0;
    for (int i = 0; i < 300; ++i)
      for (int j = 0; j < 300; ++j)
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1.0;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    RocCurve roc = Roc(s, y);
    ExpectStaircase(roc);
    EXPECT_NEAR(roc.auc, wins / pairs, 1e-12);
  }
}

TEST(Roc, SingleClassThrows) {
  EXPECT_THROW(Roc({0.1, 0.2}, {1, 1}), DataError);
}

}  // namespace
}  // namespace dvad
