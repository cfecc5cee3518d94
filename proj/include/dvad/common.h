// dvad/common.h

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

#ifndef DVAD_COMMON_H_
#define DVAD_COMMON_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dvad {

/// Row-major dense matrix; one observation per row.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Speech absence (H0) and presence (H1).
enum class Hypothesis : int { kAbsent = 0, kPresent = 1 };

inline int ToInt(Hypothesis h) { return static_cast<int>(h); }
inline Hypothesis ToHypothesis(int label) {
  return label != 0 ? Hypothesis::kPresent : Hypothesis::kAbsent;
}

/// Per-frame binary speech indicator, values in {0, 1}.
using FrameLabels = std::vector<int>;

/// Base class of every error thrown by the library. The category drives the
/// CLI exit status.
class Error : public std::runtime_error {
 public:
  enum class Kind { kUsage, kData, kInternal };
  Error(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Invalid or inconsistent input data, files or configuration.
class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(Kind::kData, what) {}
};

/// Numerical or internal failure (non-convergence, corrupted parameters).
class InternalError : public Error {
 public:
  explicit InternalError(const std::string &what)
      : Error(Kind::kInternal, what) {}
};

/// Warnings go through a replaceable sink (stderr by default).
using WarningSink = std::function<void(const std::string &)>;
void SetWarningSink(WarningSink sink);
void Warn(const std::string &message);

/// Derives an independent seed for a named sub-task from a master seed.
uint64_t DeriveSeed(uint64_t master, uint64_t stream);

}  // namespace dvad

#endif  // DVAD_COMMON_H_
