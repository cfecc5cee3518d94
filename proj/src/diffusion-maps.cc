// src/diffusion-maps.cc

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

#include "dvad/diffusion-maps.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dvad {

namespace {

// Euclidean distance from row i to every row (entry i is 0).
Eigen::VectorXd DistancesFrom(const RowMatrix &points,
                              const Eigen::RowVectorXd &x) {
  return (points.rowwise() - x).rowwise().norm();
}

// Distance to the k-th nearest point other than `self` (-1: none). A zero
// scale (duplicates) falls back to the smallest nonzero distance.
double LocalScale(const Eigen::VectorXd &dist, Eigen::Index self, int k) {
  std::vector<double> others;
  others.reserve(dist.size());
  for (Eigen::Index j = 0; j < dist.size(); ++j)
    if (j != self) others.push_back(dist[j]);
  if (static_cast<int>(others.size()) < k)
    throw DataError("need more than k points for the kNN graph");
  std::nth_element(others.begin(), others.begin() + (k - 1), others.end());
  double sigma = others[k - 1];
  if (sigma > 0.0) return sigma;
  double smallest = std::numeric_limits<double>::infinity();
  for (double d : others)
    if (d > 0.0) smallest = std::min(smallest, d);
  if (!std::isfinite(smallest)) throw DataError("degenerate geometry: all points identical");
  return smallest;
}

}  // namespace

AffinityGraph BuildKnnGraph(const RowMatrix &points, int k) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw DataError("k must be >= 1");
  if (n <= k)
    throw DataError("kNN graph needs more than k = " + std::to_string(k) +
                    " points, got " + std::to_string(n));
  AffinityGraph graph;
  graph.n_nodes = n;
  graph.k = k;
  graph.local_scales.resize(n);

  // Pass 1: scales. Pass 2: edges (needs every scale).
  for (Eigen::Index i = 0; i < n; ++i)
    graph.local_scales[i] = LocalScale(DistancesFrom(points, points.row(i)), i, k);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(n) * (2 * k + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd dist = DistancesFrom(points, points.row(i));
    triplets.emplace_back(i, i, 1.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (dist[j] <= graph.local_scales[i] || dist[j] <= graph.local_scales[j]) {
        const double w = std::exp(-dist[j] * dist[j] /
                                  (graph.local_scales[i] * graph.local_scales[j]));
        triplets.emplace_back(i, j, w);
      }
    }
  }
  graph.weights.resize(n, n);
  graph.weights.setFromTriplets(triplets.begin(), triplets.end());
  graph.weights.makeCompressed();
  return graph;
}

MarkovMatrix NormalizeMarkov(const AffinityGraph &graph) {
  const Eigen::Index n = graph.weights.rows();
  // Connectivity by breadth-first search over the sparsity pattern.
  std::vector<char> seen(n, 0);
  std::vector<Eigen::Index> queue{0};
  seen[0] = 1;
  for (size_t head = 0; head < queue.size(); ++head) {
    for (SparseMatrix::InnerIterator it(graph.weights, queue[head]); it; ++it) {
      if (it.value() > 0.0 && !seen[it.col()]) {
        seen[it.col()] = 1;
        queue.push_back(it.col());
      }
    }
  }
  if (static_cast<Eigen::Index>(queue.size()) != n)
    throw DataError("affinity graph is disconnected (" +
                    std::to_string(queue.size()) + " of " + std::to_string(n) +
                    " nodes reachable): increase k or data too fragmented");

  MarkovMatrix m;
  m.kernel_degree = graph.weights * Eigen::VectorXd::Ones(n);
  Eigen::VectorXd inv_d = m.kernel_degree.cwiseInverse();
  m.normalized_kernel = inv_d.asDiagonal() * graph.weights * inv_d.asDiagonal();
  m.normalized_kernel.makeCompressed();
  m.normalized_degree = m.normalized_kernel * Eigen::VectorXd::Ones(n);
  m.transition =
      m.normalized_degree.cwiseInverse().asDiagonal() * m.normalized_kernel;
  m.transition.makeCompressed();
  return m;
}

SpectralDecomposition Eigendecompose(const MarkovMatrix &markov, int d,
                                     const LanczosOptions &options) {
  const Eigen::Index n = markov.transition.rows();
  if (d + 1 > n) throw DataError("embedding dimension too large for graph");
  Eigen::VectorXd inv_sqrt = markov.normalized_degree.cwiseSqrt().cwiseInverse();
  SparseMatrix conjugate =
      inv_sqrt.asDiagonal() * markov.normalized_kernel * inv_sqrt.asDiagonal();
  LanczosResult lanczos = LanczosLargestMagnitude(conjugate, d + 1, options);

  SpectralDecomposition out;
  out.lanczos_iterations = lanczos.iterations;
  out.eigenvalues = lanczos.values;
  out.conjugate_vectors = lanczos.vectors;
  out.right_vectors.resize(n, d + 1);
  for (int j = 0; j <= d; ++j) {
    if (std::abs(out.eigenvalues[j]) > 1.0 + 1e-9)
      throw InternalError("eigensolver failed: |lambda| exceeds 1");
    Eigen::VectorXd psi = inv_sqrt.cwiseProduct(lanczos.vectors.col(j));
    psi.normalize();
    Eigen::Index arg = 0;
    psi.cwiseAbs().maxCoeff(&arg);
    if (psi[arg] < 0.0) {
      psi = -psi;
      out.conjugate_vectors.col(j) *= -1.0;
    }
    out.right_vectors.col(j) = psi;
    if (j > 0 && out.eigenvalues[j] <= 0.0)
      Warn("retained diffusion eigenvalue " + std::to_string(j) +
           " is not positive (" + std::to_string(out.eigenvalues[j]) + ")");
  }
  return out;
}

RowMatrix Embed(const SpectralDecomposition &decomposition, int d) {
  if (decomposition.eigenvalues.size() < d + 1)
    throw DataError("decomposition has fewer than d + 1 eigenpairs");
  const Eigen::Index n = decomposition.right_vectors.rows();
  RowMatrix coords(n, d);
  for (int j = 1; j <= d; ++j)
    coords.col(j - 1) =
        decomposition.eigenvalues[j] * decomposition.right_vectors.col(j);
  return coords;
}

Eigen::VectorXd SoftmaxCoords(const Eigen::VectorXd &m) {
  const double shift = m.maxCoeff();
  Eigen::VectorXd e = (m.array() - shift).exp().matrix();
  return e / e.sum();
}

namespace {

// Transition probabilities from x to the reference nodes it connects to:
// p(x, j) is proportional to w(x, j) / D_j, evaluated in the log domain.
void TransitionRow(const NystromReference &ref, const Eigen::VectorXd &x,
                   std::vector<Eigen::Index> *cols, std::vector<double> *probs) {
  if (x.size() != ref.points.cols())
    throw DataError("extension point has the wrong dimension");
  Eigen::VectorXd dist = DistancesFrom(ref.points, x.transpose());
  Eigen::Index self = -1;
  for (Eigen::Index j = 0; j < dist.size(); ++j)
    if (dist[j] == 0.0) {
      self = j;
      break;
    }
  const double sigma_x = LocalScale(dist, self, ref.k);
  cols->clear();
  std::vector<double> logits;
  for (Eigen::Index j = 0; j < dist.size(); ++j) {
    double log_w;
    if (j == self) {
      log_w = 0.0;
    } else if (dist[j] <= sigma_x || dist[j] <= ref.local_scales[j]) {
      log_w = -dist[j] * dist[j] / (sigma_x * ref.local_scales[j]);
    } else {
      continue;
    }
    cols->push_back(j);
    logits.push_back(log_w - std::log(ref.kernel_degree[j]));
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  probs->resize(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    (*probs)[i] = std::exp(logits[i] - top);
    total += (*probs)[i];
  }
  for (double &p : *probs) p /= total;
}

}  // namespace

Eigen::VectorXd NystromEigenvectors(const DiffusionEmbedding &embedding,
                                    const Eigen::VectorXd &x) {
  const int d = embedding.dimension();
  std::vector<Eigen::Index> cols;
  std::vector<double> probs;
  TransitionRow(embedding.reference, x, &cols, &probs);
  Eigen::VectorXd psi(d);
  for (int j = 1; j <= d; ++j) {
    const double lambda = embedding.eigenvalues[j];
    if (std::abs(lambda) < 1e-8)
      throw InternalError("extension ill-conditioned: eigenvalue " +
                          std::to_string(j) + " is below 1e-8");
    double acc = 0.0;
    for (size_t i = 0; i < cols.size(); ++i)
      acc += probs[i] * embedding.right_vectors(cols[i], j);
    psi[j - 1] = acc / lambda;
  }
  return psi;
}

Eigen::VectorXd NystromExtend(const DiffusionEmbedding &embedding,
                              const Eigen::VectorXd &x) {
  Eigen::VectorXd psi = NystromEigenvectors(embedding, x);
  Eigen::VectorXd m(psi.size());
  for (Eigen::Index j = 0; j < psi.size(); ++j)
    m[j] = embedding.eigenvalues[j + 1] * psi[j];
  return SoftmaxCoords(m);
}

DiffusionFit FitDiffusionEmbedding(const RowMatrix &points,
                                   const DiffusionOptions &options) {
  const Eigen::Index n = points.rows();
  DiffusionFit fit;
  if (n > options.max_points) {
    std::vector<int64_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(options.seed);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(options.max_points);
    std::sort(all.begin(), all.end());
    fit.reference_rows = std::move(all);
  } else {
    fit.reference_rows.resize(n);
    std::iota(fit.reference_rows.begin(), fit.reference_rows.end(), 0);
  }
  RowMatrix reference(fit.reference_rows.size(), points.cols());
  for (size_t i = 0; i < fit.reference_rows.size(); ++i)
    reference.row(i) = points.row(fit.reference_rows[i]);

  AffinityGraph graph = BuildKnnGraph(reference, options.k);
  MarkovMatrix markov = NormalizeMarkov(graph);
  SpectralDecomposition spectral =
      Eigendecompose(markov, options.dimension, options.lanczos);

  DiffusionEmbedding &e = fit.embedding;
  e.eigenvalues = spectral.eigenvalues;
  e.right_vectors = spectral.right_vectors;
  e.coords = Embed(spectral, options.dimension);
  e.softmax_coords.resize(e.coords.rows(), e.coords.cols());
  for (Eigen::Index i = 0; i < e.coords.rows(); ++i)
    e.softmax_coords.row(i) = SoftmaxCoords(e.coords.row(i).transpose()).transpose();
  e.reference.points = std::move(reference);
  e.reference.local_scales = graph.local_scales;
  e.reference.kernel_degree = markov.kernel_degree;
  e.reference.k = options.k;

  fit.targets.resize(n, options.dimension);
  std::vector<char> is_reference(n, 0);
  for (size_t i = 0; i < fit.reference_rows.size(); ++i) {
    fit.targets.row(fit.reference_rows[i]) = e.softmax_coords.row(i);
    is_reference[fit.reference_rows[i]] = 1;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!is_reference[i])
      fit.targets.row(i) = NystromExtend(e, points.row(i).transpose()).transpose();
  return fit;
}

}  // namespace dvad
