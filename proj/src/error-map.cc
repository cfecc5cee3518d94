// src/error-map.cc

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

#include "dvad/error-map.h"

#include <cmath>

namespace dvad {

std::string ErrorModeName(ErrorMode mode) {
  return mode == ErrorMode::kRealtime ? "realtime" : "batch";
}

ErrorMode ParseErrorMode(const std::string &name) {
  if (name == "realtime") return ErrorMode::kRealtime;
  if (name == "batch") return ErrorMode::kBatch;
  throw DataError("unknown mode '" + name + "' (expected realtime or batch)");
}

void ErrorCoordinate::Check() const {
  if (values.size() != ErrorDim(mode))
    throw DataError("error coordinate has the wrong dimension for its mode");
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]) || values[i] < 0.0)
      throw DataError("error coordinate entries must be finite and >= 0");
}

ErrorCoordinate ErrorMap::Row(int64_t i) const {
  return {mode, coords.row(i).transpose()};
}

double EncoderError(const Eigen::VectorXd &target,
                    const Eigen::VectorXd &predicted) {
  if (target.size() != predicted.size())
    throw DataError("encoder error: size mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i)
    sum += std::abs(target[i] - predicted[i]);
  return sum;
}

double DecoderError(const Eigen::VectorXd &input,
                    const Eigen::VectorXd &reconstruction) {
  if (input.size() != reconstruction.size())
    throw DataError("decoder error: size mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < input.size(); ++i)
    sum += std::abs(input[i] - reconstruction[i]);
  return sum;
}

ErrorCoordinate RealtimeCoordinate(const Eigen::VectorXd &features,
                                   const DedModel &ded0, const DedModel &ded1) {
  ErrorCoordinate c;
  c.mode = ErrorMode::kRealtime;
  c.values.resize(2);
  c.values[0] = DecoderError(features, Forward(ded0, features).reconstruction);
  c.values[1] = DecoderError(features, Forward(ded1, features).reconstruction);
  return c;
}

ErrorMap BuildErrorMap(const RowMatrix &features, const DedModel &ded0,
                       const DedModel &ded1, ErrorMode mode,
                       const RowMatrix *targets0, const RowMatrix *targets1) {
  const Eigen::Index n = features.rows();
  if (mode == ErrorMode::kBatch) {
    if (!targets0 || !targets1)
      throw DataError("batch error map needs diffusion targets");
    if (targets0->rows() != n || targets1->rows() != n)
      throw DataError("diffusion targets do not match the feature rows");
  }
  ErrorMap map;
  map.mode = mode;
  map.coords.resize(n, ErrorDim(mode));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = features.row(i).transpose();
    const DedOutput out0 = Forward(ded0, x);
    const DedOutput out1 = Forward(ded1, x);
    const double de0 = DecoderError(x, out0.reconstruction);
    const double de1 = DecoderError(x, out1.reconstruction);
    if (mode == ErrorMode::kRealtime) {
      map.coords(i, 0) = de0;
      map.coords(i, 1) = de1;
    } else {
      map.coords(i, 0) =
          EncoderError(targets0->row(i).transpose(), out0.bottleneck);
      map.coords(i, 1) = de0;
      map.coords(i, 2) =
          EncoderError(targets1->row(i).transpose(), out1.bottleneck);
      map.coords(i, 3) = de1;
    }
  }
  return map;
}

}  // namespace dvad
