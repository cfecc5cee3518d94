// dvad/linear-svm.h

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

#ifndef DVAD_LINEAR_SVM_H_
#define DVAD_LINEAR_SVM_H_

#include <cstdint>

#include "dvad/common.h"
#include "dvad/error-map.h"

namespace dvad {

struct SvmTrainConfig {
  double c = 1.0;
  int epochs = 200;
  /// Inverse-frequency class weights N / (2 N_class).
  bool class_weighting = true;
  uint64_t rng_seed = 1;

  void Check() const;
};

/// Decision function w . e + b; positive side is speech presence.
struct SvmModel {
  ErrorMode mode = ErrorMode::kRealtime;
  Eigen::VectorXd weights;
  double bias = 0.0;
};

/// Primal objective (1 / 2C) ||w||^2 + (1/N) sum_i c_i max(0, 1 - y_i f(x_i))
/// with y in {-1, +1}.
double SvmObjective(const RowMatrix &x, const FrameLabels &labels,
                    const Eigen::VectorXd &weights, double bias,
                    const SvmTrainConfig &config);

/// Seeded stochastic subgradient descent (step 1 / (lambda t), lambda = 1/C,
/// unregularized bias). Keeps the weights of the iterate with the lowest
/// objective among the epoch-end and running-average iterates, then sets the
/// bias to its exact minimizer for those weights.
SvmModel TrainSvm(const ErrorMap &map, const FrameLabels &labels,
                  const SvmTrainConfig &config);

double Score(const ErrorCoordinate &coord, const SvmModel &svm);
/// Presence iff Score > 0; the boundary goes to absence.
Hypothesis Classify(const ErrorCoordinate &coord, const SvmModel &svm);

}  // namespace dvad

#endif  // DVAD_LINEAR_SVM_H_
