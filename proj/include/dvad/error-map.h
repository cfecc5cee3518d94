// dvad/error-map.h

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

#ifndef DVAD_ERROR_MAP_H_
#define DVAD_ERROR_MAP_H_

#include <cstdint>
#include <string>

#include "dvad/common.h"
#include "dvad/ded-model.h"

namespace dvad {

/// Realtime coordinates are (e_de0, e_de1); batch coordinates are
/// (e_en0, e_de0, e_en1, e_de1).
enum class ErrorMode { kRealtime, kBatch };

std::string ErrorModeName(ErrorMode mode);
ErrorMode ParseErrorMode(const std::string &name);
inline int ErrorDim(ErrorMode mode) { return mode == ErrorMode::kRealtime ? 2 : 4; }

struct ErrorCoordinate {
  ErrorMode mode = ErrorMode::kRealtime;
  Eigen::VectorXd values;

  /// Throws DataError unless values match the mode and are finite and >= 0.
  void Check() const;
};

/// One row per frame.
struct ErrorMap {
  ErrorMode mode = ErrorMode::kRealtime;
  RowMatrix coords;

  int64_t size() const { return coords.rows(); }
  ErrorCoordinate Row(int64_t i) const;
};

/// l1 distance between a diffusion target and the encoder output.
double EncoderError(const Eigen::VectorXd &target,
                    const Eigen::VectorXd &predicted);
/// l1 distance between a network input and its reconstruction.
double DecoderError(const Eigen::VectorXd &input,
                    const Eigen::VectorXd &reconstruction);

/// Runs every row of `features` (already standardized and range-mapped)
/// through both networks. Batch mode needs one target row per feature row
/// for each hypothesis; targets0/targets1 may be the same matrix.
ErrorMap BuildErrorMap(const RowMatrix &features, const DedModel &ded0,
                       const DedModel &ded1, ErrorMode mode,
                       const RowMatrix *targets0 = nullptr,
                       const RowMatrix *targets1 = nullptr);

/// Realtime coordinate of a single row.
ErrorCoordinate RealtimeCoordinate(const Eigen::VectorXd &features,
                                   const DedModel &ded0, const DedModel &ded1);

}  // namespace dvad

#endif  // DVAD_ERROR_MAP_H_
