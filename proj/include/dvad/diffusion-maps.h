// dvad/diffusion-maps.h

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

#ifndef DVAD_DIFFUSION_MAPS_H_
#define DVAD_DIFFUSION_MAPS_H_

#include <cstdint>
#include <vector>

#include "dvad/common.h"
#include "dvad/lanczos.h"

namespace dvad {

/// Self-tuning kNN affinity graph. Node j is a neighbor of i when
/// |x_i - x_j| <= sigma_i, where sigma_i is the distance from i to its k-th
/// nearest other point; an edge exists when either endpoint selects the
/// other, with weight exp(-|x_i - x_j|^2 / (sigma_i sigma_j)). Self weights
/// are 1.
struct AffinityGraph {
  int64_t n_nodes = 0;
  int k = 10;
  Eigen::VectorXd local_scales;
  SparseMatrix weights;
};

AffinityGraph BuildKnnGraph(const RowMatrix &points, int k = 10);

/// Two-stage (density-invariant) normalization:
/// W~ = D^-1 W D^-1, P = D~^-1 W~.
struct MarkovMatrix {
  SparseMatrix transition;         // P, row-stochastic
  SparseMatrix normalized_kernel;  // W~, symmetric
  Eigen::VectorXd kernel_degree;   // row sums of W
  Eigen::VectorXd normalized_degree;  // row sums of W~
};

/// Throws DataError when the graph is disconnected.
MarkovMatrix NormalizeMarkov(const AffinityGraph &graph);

/// Top eigenpairs of P by magnitude. `right_vectors` are right eigenvectors
/// of P with unit Euclidean norm, largest-magnitude entry positive;
/// `conjugate_vectors` are the orthonormal eigenvectors of the symmetric
/// conjugate D~^1/2 P D~^-1/2.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd right_vectors;
  Eigen::MatrixXd conjugate_vectors;
  int lanczos_iterations = 0;
};

SpectralDecomposition Eigendecompose(const MarkovMatrix &markov, int d = 3,
                                     const LanczosOptions &options = {});

/// Row n is (lambda_1 psi_1(n), ..., lambda_d psi_d(n)).
RowMatrix Embed(const SpectralDecomposition &decomposition, int d = 3);

/// Max-subtracted softmax.
Eigen::VectorXd SoftmaxCoords(const Eigen::VectorXd &m);

/// What the out-of-sample extension needs from the training graph.
struct NystromReference {
  RowMatrix points;
  Eigen::VectorXd local_scales;
  Eigen::VectorXd kernel_degree;
  int k = 10;
};

struct DiffusionEmbedding {
  Eigen::VectorXd eigenvalues;    // lambda_0 .. lambda_d
  Eigen::MatrixXd right_vectors;  // psi_0 .. psi_d as columns
  RowMatrix coords;               // N x d
  RowMatrix softmax_coords;       // N x d, rows on the simplex
  NystromReference reference;

  int dimension() const { return static_cast<int>(coords.cols()); }
};

struct DiffusionOptions {
  int k = 10;
  int dimension = 3;
  /// Larger training sets are uniformly subsampled for the graph and the
  /// remaining rows are placed by Nystrom extension.
  int max_points = 6000;
  uint64_t seed = 17;
  LanczosOptions lanczos;
};

struct DiffusionFit {
  DiffusionEmbedding embedding;
  RowMatrix targets;                    // softmax coords for every input row
  std::vector<int64_t> reference_rows;  // input rows used as graph nodes
};

DiffusionFit FitDiffusionEmbedding(const RowMatrix &points,
                                   const DiffusionOptions &options = {});

/// psi_1(x) .. psi_d(x) by Nystrom extension.
Eigen::VectorXd NystromEigenvectors(const DiffusionEmbedding &embedding,
                                    const Eigen::VectorXd &x);

/// Softmax-normalized embedding coordinates of an out-of-sample point.
Eigen::VectorXd NystromExtend(const DiffusionEmbedding &embedding,
                              const Eigen::VectorXd &x);

}  // namespace dvad

#endif  // DVAD_DIFFUSION_MAPS_H_
