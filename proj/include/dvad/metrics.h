// dvad/metrics.h

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

#ifndef DVAD_METRICS_H_
#define DVAD_METRICS_H_

#include <string>
#include <vector>

#include "dvad/common.h"

namespace dvad {

struct Metrics {
  double tp_rate = 0.0;
  double tn_rate = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double accuracy = 0.0;
  int64_t positives = 0;
  int64_t negatives = 0;
};

/// Throws DataError on length mismatch, empty input or single-class labels.
Metrics ComputeMetrics(const FrameLabels &predictions, const FrameLabels &labels);

struct RocPoint {
  double threshold;  // +inf for the (0, 0) corner
  double fp_rate;
  double tp_rate;
};

/// Points ordered by decreasing threshold; a frame is positive at threshold
/// t when its score is >= t.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

RocCurve Roc(const std::vector<double> &scores, const FrameLabels &labels);

void WriteMetricsCsv(const Metrics &m, const std::string &path);
void WriteRocCsv(const RocCurve &roc, const std::string &path);

}  // namespace dvad

#endif  // DVAD_METRICS_H_
