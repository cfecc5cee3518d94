// src/metrics.cc

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

#include "dvad/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dvad/io-util.h"

namespace dvad {

namespace {

void CountClasses(const FrameLabels &labels, int64_t *pos, int64_t *neg) {
  *pos = *neg = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
    (l ? *pos : *neg) += 1;
  }
  if (*pos == 0 || *neg == 0)
    throw DataError("rates need both classes in the labels (single-class input)");
}

}  // namespace

Metrics ComputeMetrics(const FrameLabels &predictions, const FrameLabels &labels) {
  if (predictions.size() != labels.size())
    throw DataError("prediction and label counts differ");
  if (labels.empty()) throw DataError("no frames to evaluate");
  Metrics m;
  CountClasses(labels, &m.positives, &m.negatives);
  int64_t tp = 0, tn = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] != 0 && predictions[i] != 1)
      throw DataError("predictions must be 0 or 1");
    if (labels[i] == 1 && predictions[i] == 1) ++tp;
    if (labels[i] == 0 && predictions[i] == 0) ++tn;
  }
  m.tp_rate = static_cast<double>(tp) / m.positives;
  m.fn_rate = static_cast<double>(m.positives - tp) / m.positives;
  m.tn_rate = static_cast<double>(tn) / m.negatives;
  m.fp_rate = static_cast<double>(m.negatives - tn) / m.negatives;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  return m;
}

RocCurve Roc(const std::vector<double> &scores, const FrameLabels &labels) {
  if (scores.size() != labels.size())
    throw DataError("score and label counts differ");
  int64_t pos, neg;
  CountClasses(labels, &pos, &neg);
  for (double s : scores)
    if (std::isnan(s)) throw DataError("NaN score");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  int64_t tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    // Every frame tied at this score changes side together.
    for (; i < order.size() && scores[order[i]] == threshold; ++i)
      (labels[order[i]] ? tp : fp) += 1;
    roc.points.push_back({threshold, static_cast<double>(fp) / neg,
                          static_cast<double>(tp) / pos});
  }
  for (size_t i = 1; i < roc.points.size(); ++i) {
    const RocPoint &a = roc.points[i - 1], &b = roc.points[i];
    roc.auc += (b.fp_rate - a.fp_rate) * 0.5 * (a.tp_rate + b.tp_rate);
  }
  return roc;
}

void WriteMetricsCsv(const Metrics &m, const std::string &path) {
  std::string out = "metric,value\n";
  out += "accuracy," + FormatDouble(m.accuracy) + "\n";
  out += "tp_rate," + FormatDouble(m.tp_rate) + "\n";
  out += "tn_rate," + FormatDouble(m.tn_rate) + "\n";
  out += "fp_rate," + FormatDouble(m.fp_rate) + "\n";
  out += "fn_rate," + FormatDouble(m.fn_rate) + "\n";
  out += "positives," + std::to_string(m.positives) + "\n";
  out += "negatives," + std::to_string(m.negatives) + "\n";
  WriteFileAtomic(path, out);
}

void WriteRocCsv(const RocCurve &roc, const std::string &path) {
  std::string out = "threshold,fp,tp\n";
  for (const RocPoint &p : roc.points)
    out += (std::isinf(p.threshold) ? std::string("inf") : FormatDouble(p.threshold)) +
           "," + FormatDouble(p.fp_rate) + "," + FormatDouble(p.tp_rate) + "\n";
  WriteFileAtomic(path, out);
}

}  // namespace dvad
