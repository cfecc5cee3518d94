// src/lanczos.cc

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

#include "dvad/lanczos.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

namespace dvad {

namespace {

Eigen::VectorXd RandomUnitVector(Eigen::Index n, std::mt19937_64 *rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(*rng);
  return v.normalized();
}

// Two passes of classical Gram-Schmidt against the first `m` columns.
void Reorthogonalize(const Eigen::MatrixXd &basis, Eigen::Index m,
                     Eigen::VectorXd *w) {
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd coeffs = basis.leftCols(m).transpose() * (*w);
    *w -= basis.leftCols(m) * coeffs;
  }
}

}  // namespace

LanczosResult LanczosLargestMagnitude(const SparseMatrix &a, int count,
                                      const LanczosOptions &options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DataError("Lanczos needs a square matrix");
  if (count < 1 || count > n)
    throw DataError("requested eigenpair count out of range");
  const Eigen::Index cap =
      std::min<Eigen::Index>(n, std::max(options.max_iterations, count));

  std::mt19937_64 rng(options.seed);
  Eigen::MatrixXd basis(n, std::min<Eigen::Index>(cap, 64 + 4 * count));
  std::vector<double> alpha, beta;  // beta[j] couples q_j and q_{j+1}
  basis.col(0) = RandomUnitVector(n, &rng);

  Eigen::VectorXd ritz_values;
  Eigen::MatrixXd ritz_vectors;
  std::vector<Eigen::Index> order;
  bool converged = false;
  Eigen::Index m = 0;
  while (m < cap) {
    Eigen::VectorXd w = a * basis.col(m);
    const double a_m = basis.col(m).dot(w);
    alpha.push_back(a_m);
    w -= a_m * basis.col(m);
    if (m > 0) w -= beta[m - 1] * basis.col(m - 1);
    Reorthogonalize(basis, m + 1, &w);
    double b_m = w.norm();
    ++m;

    const bool exhausted = m == cap;
    const bool check = exhausted || (m >= count && (m % options.check_interval == 0 ||
                                                    b_m < 1e-12));
    if (check) {
      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
      for (Eigen::Index j = 0; j + 1 < m; ++j) sub[j] = beta[j];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      if (tri.info() != Eigen::Success)
        throw InternalError("eigensolver failed: tridiagonal solve");
      ritz_values = tri.eigenvalues();
      ritz_vectors = tri.eigenvectors();
      order.resize(m);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
        return std::abs(ritz_values[i]) > std::abs(ritz_values[j]);
      });
      bool all_good = true;
      for (int c = 0; c < count; ++c) {
        const double residual = std::abs(b_m * ritz_vectors(m - 1, order[c]));
        if (residual > options.tolerance) all_good = false;
      }
      // At m == n the Krylov space is the whole space and the pairs are exact.
      if (all_good || m == n) {
        converged = true;
        break;
      }
    }
    if (exhausted) break;

    if (m >= basis.cols())
      basis.conservativeResize(Eigen::NoChange,
                               std::min<Eigen::Index>(cap, 2 * basis.cols()));
    if (b_m < 1e-12) {
      // Invariant subspace: continue from a fresh direction (decoupled).
      Eigen::VectorXd fresh = RandomUnitVector(n, &rng);
      Reorthogonalize(basis, m, &fresh);
      fresh.normalize();
      Reorthogonalize(basis, m, &fresh);
      basis.col(m) = fresh.normalized();
      beta.push_back(0.0);
    } else {
      basis.col(m) = w / b_m;
      beta.push_back(b_m);
    }
  }
  if (!converged)
    throw InternalError("eigensolver failed: Lanczos did not converge in " +
                        std::to_string(cap) + " iterations");

  LanczosResult result;
  result.iterations = static_cast<int>(m);
  result.values.resize(count);
  result.vectors.resize(n, count);
  for (int c = 0; c < count; ++c) {
    result.values[c] = ritz_values[order[c]];
    result.vectors.col(c) =
        (basis.leftCols(m) * ritz_vectors.col(order[c])).normalized();
  }
  return result;
}

}  // namespace dvad
