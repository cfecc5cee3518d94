// tests/test-util.h

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

#ifndef DVAD_TESTS_TEST_UTIL_H_
#define DVAD_TESTS_TEST_UTIL_H_

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dvad/common.h"

namespace dvad::testing {

inline RowMatrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, uint64_t seed,
                              double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline Eigen::VectorXd RandomVector(Eigen::Index n, uint64_t seed, double lo = 0.0,
                                    double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

/// O(N^2) DFT, bins 0 .. n_bins - 1 of an `n`-point transform of zero-padded x.
inline std::vector<std::complex<double>> NaiveDft(const std::vector<double> &x,
                                                  size_t n, size_t n_bins) {
  std::vector<std::complex<double>> out(n_bins);
  for (size_t k = 0; k < n_bins; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < x.size() && t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n;
      acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::string TempDir(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / ("dvad-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace dvad::testing

#endif  // DVAD_TESTS_TEST_UTIL_H_
