// dvad/lanczos.h

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

#ifndef DVAD_LANCZOS_H_
#define DVAD_LANCZOS_H_

#include <cstdint>

#include <Eigen/Sparse>

#include "dvad/common.h"

namespace dvad {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LanczosOptions {
  int max_iterations = 3000;
  /// Residual bound |beta_m * s_m| on every returned Ritz pair.
  double tolerance = 1e-11;
  /// Ritz convergence is tested every `check_interval` steps.
  int check_interval = 10;
  uint64_t seed = 0x5eed;
};

struct LanczosResult {
  Eigen::VectorXd values;   // sorted by decreasing magnitude
  Eigen::MatrixXd vectors;  // unit-norm columns
  int iterations = 0;
};

/// Largest-magnitude eigenpairs of a symmetric sparse matrix by Lanczos with
/// full reorthogonalization. Throws InternalError("eigensolver failed") when
/// the iteration cap is hit before convergence.
LanczosResult LanczosLargestMagnitude(const SparseMatrix &a, int count,
                                      const LanczosOptions &options = {});

}  // namespace dvad

#endif  // DVAD_LANCZOS_H_
