// tests/markov-oracle.h

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

#ifndef DVAD_TESTS_MARKOV_ORACLE_H_
#define DVAD_TESTS_MARKOV_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dvad/common.h"

namespace dvad::testing {

inline Eigen::MatrixXd Distances(const RowMatrix &x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  return d;
}

// Dense reimplementation of graph construction and two-stage normalization.
struct DenseOracle {
  Eigen::MatrixXd w, p;
  Eigen::VectorXd d_tilde;

  DenseOracle(const RowMatrix &x, int k) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd dist = Distances(x);
    Eigen::VectorXd sigma(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) row.push_back(dist(i, j));
      std::sort(row.begin(), row.end());
      sigma[i] = row[k - 1];
    }
    w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i == j)
          w(i, j) = 1.0;
        else if (dist(i, j) <= sigma[i] || dist(i, j) <= sigma[j])
          w(i, j) = std::exp(-dist(i, j) * dist(i, j) / (sigma[i] * sigma[j]));
    Eigen::VectorXd deg = w.rowwise().sum();
    Eigen::MatrixXd wt = deg.cwiseInverse().asDiagonal() * w * deg.cwiseInverse().asDiagonal();
    d_tilde = wt.rowwise().sum();
    p = d_tilde.cwiseInverse().asDiagonal() * wt;
  }

  // Eigenpairs of P via its symmetric conjugate, sorted by |lambda|, right
  // vectors unit-norm with the largest-magnitude entry positive.
  void Spectrum(Eigen::VectorXd *values, Eigen::MatrixXd *right) const {
    Eigen::VectorXd s = d_tilde.cwiseSqrt();
    Eigen::MatrixXd a = s.asDiagonal() * p * s.cwiseInverse().asDiagonal();
    a = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::Index n = a.rows();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) {
      return std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[j]);
    });
    values->resize(n);
    right->resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      (*values)[c] = es.eigenvalues()[order[c]];
      Eigen::VectorXd psi = s.cwiseInverse().cwiseProduct(es.eigenvectors().col(order[c]));
      psi.normalize();
      Eigen::Index arg;
      psi.cwiseAbs().maxCoeff(&arg);
      if (psi[arg] < 0) psi = -psi;
      right->col(c) = psi;
    }
  }
};

}  // namespace dvad::testing

#endif  // DVAD_TESTS_MARKOV_ORACLE_H_
