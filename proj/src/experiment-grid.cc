// src/experiment-grid.cc

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

#include "dvad/experiment-grid.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dvad/io-util.h"
#include "dvad/metrics.h"

namespace dvad {

namespace {

constexpr uint64_t kGridSeed = 6;

std::string CellName(double fraction, double ratio) {
  return "(fraction " + FormatDouble(fraction) + ", ratio " + FormatDouble(ratio) + ")";
}

void CheckUnit(const std::vector<double> &values, const char *what) {
  if (values.empty()) throw DataError(std::string("grid ") + what + " list is empty");
  for (double v : values)
    if (!(v > 0.0 && v <= 1.0))
      throw DataError(std::string("grid ") + what + " must lie in (0, 1]");
}

}  // namespace

int64_t GridReferenceSize(const DatasetSplit &split,
                          const std::vector<double> &ratios) {
  CheckUnit(ratios, "ratios");
  const double n0 = static_cast<double>(split.ded_train[0].size());
  const double n1 = static_cast<double>(split.ded_train[1].size());
  double size = std::numeric_limits<double>::infinity();
  for (double r : ratios) {
    size = std::min(size, n1 / r);
    if (r < 1.0) size = std::min(size, n0 / (1.0 - r));
  }
  return static_cast<int64_t>(std::floor(size));
}

std::array<std::vector<int64_t>, 2> GridCellRows(const DatasetSplit &split,
                                                 int64_t reference_size,
                                                 double fraction, double ratio,
                                                 const PipelineConfig &config) {
  const int64_t total = std::llround(fraction * static_cast<double>(reference_size));
  const int64_t n1 = std::llround(ratio * static_cast<double>(total));
  const int64_t want[2] = {total - n1, n1};
  const int64_t batch = config.train.batch_size;
  if (total < 10 * batch || want[0] < batch || want[1] < batch)
    throw DataError("infeasible grid cell " + CellName(fraction, ratio) + ": " +
                    std::to_string(want[0]) + " non-speech and " +
                    std::to_string(want[1]) + " speech rows, need " +
                    std::to_string(10 * batch) + " in total and " +
                    std::to_string(batch) + " per hypothesis");
  std::array<std::vector<int64_t>, 2> rows;
  for (int h = 0; h < 2; ++h) {
    if (want[h] > static_cast<int64_t>(split.ded_train[h].size()))
      throw DataError("infeasible grid cell " + CellName(fraction, ratio) +
                      ": not enough rows of hypothesis " + std::to_string(h));
    // Nested draws: a smaller fraction at the same ratio takes a prefix of
    // the same permutation.
    std::mt19937_64 rng(DeriveSeed(DeriveSeed(config.seed, kGridSeed),
                                   static_cast<uint64_t>(std::llround(ratio * 1e6)) * 2 + h));
    rows[h] = split.ded_train[h];
    std::shuffle(rows[h].begin(), rows[h].end(), rng);
    rows[h].resize(want[h]);
    std::sort(rows[h].begin(), rows[h].end());
  }
  return rows;
}

GridResult RunGridCells(const Dataset &data, const PipelineConfig &config,
                        const std::vector<std::pair<double, double>> &cells) {
  CheckUnit(config.grid_fractions, "fractions");
  const DatasetSplit split = SplitDataset(data.labels, config.split);
  GridResult result;
  result.test_hash = split.TestHash();
  result.reference_size = GridReferenceSize(split, config.grid_ratios);

  const std::vector<int64_t> test = split.TestRows();
  RowMatrix test_x(test.size(), data.features.cols());
  FrameLabels test_y;
  for (size_t i = 0; i < test.size(); ++i) {
    test_x.row(i) = data.features.row(test[i]);
    test_y.push_back(data.labels[test[i]]);
  }

  for (const auto &[fraction, ratio] : cells) {
    if (!(fraction > 0.0 && fraction <= 1.0) || !(ratio > 0.0 && ratio <= 1.0))
      throw DataError("grid cell " + CellName(fraction, ratio) + " is out of range");
    auto rows = GridCellRows(split, result.reference_size, fraction, ratio, config);
    GridCell cell;
    cell.fraction = fraction;
    cell.ratio = ratio;
    cell.ded_rows0 = static_cast<int64_t>(rows[0].size());
    cell.ded_rows1 = static_cast<int64_t>(rows[1].size());
    ModelBundle bundle = TrainOnRows(data, rows, split.ClassifierRows(), config);
    Predictions p = InferFeatures(test_x, bundle, ErrorMode::kRealtime);
    cell.accuracy = ComputeMetrics(p.labels, test_y).accuracy;
    // The test split is shared by construction; recorded for auditing.
    cell.test_hash = result.test_hash;
    result.cells.push_back(cell);
  }
  return result;
}

GridResult RunGrid(const Dataset &data, const PipelineConfig &config) {
  std::vector<std::pair<double, double>> cells;
  for (double f : config.grid_fractions)
    for (double r : config.grid_ratios) cells.emplace_back(f, r);
  return RunGridCells(data, config, cells);
}

void WriteGridCsv(const GridResult &result, const std::string &path) {
  std::string out = "fraction,ratio,accuracy\n";
  for (const GridCell &c : result.cells)
    out += FormatDouble(c.fraction) + "," + FormatDouble(c.ratio) + "," +
           FormatDouble(c.accuracy) + "\n";
  WriteFileAtomic(path, out);
}

}  // namespace dvad
