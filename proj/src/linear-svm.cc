// src/linear-svm.cc

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

#include "dvad/linear-svm.h"

#include <algorithm>
#include <numeric>
#include <random>

namespace dvad {

namespace {

std::vector<double> ClassWeights(const FrameLabels &labels, bool enabled) {
  const double n = static_cast<double>(labels.size());
  const double n1 = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n0 = n - n1;
  std::vector<double> c(labels.size(), 1.0);
  if (enabled)
    for (size_t i = 0; i < labels.size(); ++i)
      c[i] = labels[i] ? n / (2.0 * n1) : n / (2.0 * n0);
  return c;
}

void CheckLabels(const FrameLabels &labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows)
    throw DataError("label count does not match the error map");
  int n1 = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
    n1 += l;
  }
  if (n1 == 0 || n1 == static_cast<int>(labels.size()))
    throw DataError("SVM training needs both classes (single-class input)");
}

// The unregularized bias gets no strong convexity from the objective and the
// 1/t steps leave it short of its optimum. For fixed w the objective in b is
// convex and piecewise linear with a kink at y_i - f_i for every sample, each
// raising the slope by c_i / N, so the minimizer is a weighted median.
double OptimalBias(const Eigen::VectorXd &f, const FrameLabels &labels,
                   const std::vector<double> &c) {
  std::vector<std::pair<double, double>> kinks;
  kinks.reserve(labels.size());
  double slope = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double y = labels[i] ? 1.0 : -1.0;
    kinks.emplace_back(y - f[static_cast<Eigen::Index>(i)], c[i]);
    if (labels[i]) slope -= c[i];
  }
  std::sort(kinks.begin(), kinks.end());
  for (const auto &[b, weight] : kinks) {
    slope += weight;
    if (slope >= 0.0) return b;
  }
  return kinks.back().first;
}

}  // namespace

void SvmTrainConfig::Check() const {
  if (!(c > 0.0)) throw DataError("svm C must be positive");
  if (epochs < 1) throw DataError("svm epochs must be >= 1");
}

double SvmObjective(const RowMatrix &x, const FrameLabels &labels,
                    const Eigen::VectorXd &weights, double bias,
                    const SvmTrainConfig &config) {
  CheckLabels(labels, x.rows());
  const std::vector<double> c = ClassWeights(labels, config.class_weighting);
  const Eigen::VectorXd f = x * weights;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double y = labels[i] ? 1.0 : -1.0;
    hinge += c[i] * std::max(0.0, 1.0 - y * (f[i] + bias));
  }
  return 0.5 / config.c * weights.squaredNorm() +
         hinge / static_cast<double>(x.rows());
}

SvmModel TrainSvm(const ErrorMap &map, const FrameLabels &labels,
                  const SvmTrainConfig &config) {
  config.Check();
  CheckLabels(labels, map.size());
  if (!map.coords.allFinite()) throw DataError("non-finite error coordinates");
  const Eigen::Index n = map.size();
  const Eigen::Index d = map.coords.cols();
  const std::vector<double> c = ClassWeights(labels, config.class_weighting);

  // The bias is unregularized, so centering the data changes nothing but the
  // bias parametrization and keeps the bias steps well scaled.
  const Eigen::RowVectorXd center = map.coords.colwise().mean();
  const RowMatrix x = map.coords.rowwise() - center;
  const double lambda = 1.0 / config.c;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d), w_avg = w;
  double b = 0.0, b_avg = 0.0;
  Eigen::VectorXd best_w = w;
  double best_b = 0.0;
  double best = SvmObjective(x, labels, w, b, config);

  std::mt19937_64 rng(config.rng_seed);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  int64_t t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double y = labels[i] ? 1.0 : -1.0;
      const double margin = y * (x.row(i).dot(w) + b);
      w *= 1.0 - eta * lambda;
      if (margin < 1.0) {
        w += (eta * c[i] * y) * x.row(i).transpose();
        b += eta * c[i] * y;
      }
      const double mix = 1.0 / static_cast<double>(t);
      w_avg += mix * (w - w_avg);
      b_avg += mix * (b - b_avg);
    }
    for (const auto &[cw, cb] : {std::pair{&w, b}, std::pair{&w_avg, b_avg}}) {
      const double obj = SvmObjective(x, labels, *cw, cb, config);
      if (obj < best) {
        best = obj;
        best_w = *cw;
        best_b = cb;
      }
    }
  }
  if (best_w.isZero(0.0)) Warn("linear SVM converged to a zero weight vector");
  best_b = OptimalBias(x * best_w, labels, c);

  SvmModel model;
  model.mode = map.mode;
  model.weights = best_w;
  model.bias = best_b - center.dot(best_w.transpose());
  return model;
}

double Score(const ErrorCoordinate &coord, const SvmModel &svm) {
  if (coord.mode != svm.mode)
    throw DataError("error coordinate mode " + ErrorModeName(coord.mode) +
                    " does not match classifier mode " + ErrorModeName(svm.mode));
  if (coord.values.size() != svm.weights.size())
    throw DataError("error coordinate dimension does not match classifier");
  return svm.weights.dot(coord.values) + svm.bias;
}

Hypothesis Classify(const ErrorCoordinate &coord, const SvmModel &svm) {
  return Score(coord, svm) > 0.0 ? Hypothesis::kPresent : Hypothesis::kAbsent;
}

}  // namespace dvad
