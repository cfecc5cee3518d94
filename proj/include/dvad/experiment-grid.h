// dvad/experiment-grid.h

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

#ifndef DVAD_EXPERIMENT_GRID_H_
#define DVAD_EXPERIMENT_GRID_H_

#include <string>
#include <utility>
#include <vector>

#include "dvad/pipeline.h"

namespace dvad {

// Training-fraction x speech-ratio sweep. Every cell draws its DED training
// rows from the fixed DED-training split, retrains both networks and both
// classifiers, and is scored in realtime mode on the fixed test split.
//
// Cell size is fraction * N_ref, where N_ref is the largest size that every
// requested ratio can reach:
//   N_ref = min over ratios r of min(n1 / r, n0 / (1 - r))
// with n0, n1 the DED-training rows per hypothesis.

struct GridCell {
  double fraction = 0.0;
  double ratio = 0.0;
  int64_t ded_rows0 = 0;
  int64_t ded_rows1 = 0;
  double accuracy = 0.0;
  std::string test_hash;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::string test_hash;
  int64_t reference_size = 0;
};

/// Largest total size reachable by all ratios (see above).
int64_t GridReferenceSize(const DatasetSplit &split,
                          const std::vector<double> &ratios);

/// Seeded row subset of the DED-training split for one cell. Throws DataError
/// ("infeasible grid cell ...") when the cell would have fewer than
/// 10 * batch_size rows or fewer than batch_size rows of either hypothesis.
std::array<std::vector<int64_t>, 2> GridCellRows(const DatasetSplit &split,
                                                 int64_t reference_size,
                                                 double fraction, double ratio,
                                                 const PipelineConfig &config);

/// Every (fraction, ratio) pair of the config, fraction-major.
GridResult RunGrid(const Dataset &data, const PipelineConfig &config);

/// Only the listed cells; N_ref still spans all of config.grid_ratios.
GridResult RunGridCells(const Dataset &data, const PipelineConfig &config,
                        const std::vector<std::pair<double, double>> &cells);

/// `fraction,ratio,accuracy` rows.
void WriteGridCsv(const GridResult &result, const std::string &path);

}  // namespace dvad

#endif  // DVAD_EXPERIMENT_GRID_H_
