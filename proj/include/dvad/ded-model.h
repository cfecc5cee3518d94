// dvad/ded-model.h

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

#ifndef DVAD_DED_MODEL_H_
#define DVAD_DED_MODEL_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dvad/common.h"

namespace dvad {

/// Positive saturating linear transfer: clamp(z, 0, 1).
inline double Pslt(double z) { return z <= 0.0 ? 0.0 : (z >= 1.0 ? 1.0 : z); }
/// Subgradient: 1 strictly inside (0, 1), 0 elsewhere (kinks included).
inline double PsltGrad(double z) { return z > 0.0 && z < 1.0 ? 1.0 : 0.0; }

struct LayerParams {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out

  int in() const { return static_cast<int>(weights.cols()); }
  int out() const { return static_cast<int>(weights.rows()); }
};

/// Diffusion encoder-decoder: an encoder whose last layer is pinned to the
/// diffusion coordinates and a mirrored decoder. PSLT follows every layer.
struct DedModel {
  std::vector<LayerParams> encoder;
  std::vector<LayerParams> decoder;
  Hypothesis hypothesis = Hypothesis::kAbsent;

  int input_dim() const { return encoder.front().in(); }
  int bottleneck_dim() const { return encoder.back().out(); }
  /// Throws DataError on a broken dimension chain or non-finite parameters.
  void Check() const;
};

/// Zero-valued model with encoder widths `dims` (e.g. {72, 200, 200, 3}) and
/// the mirrored decoder.
DedModel MakeDedModel(const std::vector<int> &dims, Hypothesis hypothesis);

inline const std::vector<int> kDefaultDedDims = {72, 200, 200, 3};

struct DedOutput {
  Eigen::VectorXd bottleneck;      // m-hat
  Eigen::VectorXd reconstruction;  // a-hat
};

/// Single-observation forward pass. Throws InternalError on non-finite
/// intermediate values.
DedOutput Forward(const DedModel &model, const Eigen::VectorXd &x);

struct TrainConfig {
  int pretrain_epochs = 1;
  double pretrain_lr = 0.1;
  double finetune_lr = 1e-5;
  double momentum = 0.9;
  int max_epochs = 1000;
  double min_gradient = 1e-6;
  int batch_size = 128;
  double l2_weight = 1e-7;
  double sparsity_weight = 4.0;
  double sparsity_target = 0.1;
  double init_std = 0.1;
  // Fine-tuning fit terms are summed over the samples of a minibatch (each
  // sample contributes its mean squared error), so finetune_lr is a
  // per-sample step. Pretraining always averages over the minibatch.
  bool finetune_batch_sum = true;
  uint64_t rng_seed = 1;

  void Check() const;
};

enum class TrainStage { kEncoderOnly, kDecoderOnly, kStacked };
std::string StageName(TrainStage stage);

/// Same shapes as the model's layers.
struct DedGradients {
  std::vector<LayerParams> encoder;
  std::vector<LayerParams> decoder;

  double InfNorm() const;
};

struct LossTerms {
  double total = 0.0;
  double fit = 0.0;
  double l2 = 0.0;
  double sparsity = 0.0;
};

/// Loss = fit + l2_weight * sum ||W||^2 + sparsity_weight * sum_l mean_j
/// KL(rho || rho-hat_j) over each hidden (non-bottleneck, non-output) layer l
/// the stage touches. Fit terms are element-wise MSEs:
///   encoder-only: MSE(m-hat, m~)
///   decoder-only: MSE(a-hat, x), decoder fed with m~
///   stacked:      MSE(m-hat, m~) + MSE(a-hat, x)
/// `batch` is B x in, `targets` is B x bottleneck. Gradients of layers the
/// stage does not touch are zero. Fit terms follow finetune_batch_sum.
LossTerms LossAndGradients(const RowMatrix &batch, const RowMatrix &targets,
                           const DedModel &model, const TrainConfig &config,
                           TrainStage stage, DedGradients *gradients);

/// One-hidden-layer encoder-decoder loss (reconstruct the input), with the
/// same regularizers. Used for layer-wise pretraining.
LossTerms AutoencoderLossAndGradients(const RowMatrix &batch,
                                      const LayerParams &encode,
                                      const LayerParams &decode,
                                      const TrainConfig &config,
                                      bool sparse_hidden,
                                      LayerParams *encode_grad,
                                      LayerParams *decode_grad);

enum class StopReason { kMaxEpochs, kMinGradient };
std::string StopReasonName(StopReason reason);

struct StageReport {
  std::string name;
  std::vector<double> losses;  // per-epoch mean loss
  StopReason stop_reason = StopReason::kMaxEpochs;
  double final_gradient_norm = 0.0;
};

struct PretrainReport {
  std::vector<double> initial_losses;  // per pretrained layer, at random init
  std::vector<double> final_losses;    // after pretraining
};

struct TrainReport {
  PretrainReport pretrain;
  std::vector<StageReport> stages;  // encoder, decoder, stacked
  double initial_stacked_loss = 0.0;  // random initialization
  double final_stacked_loss = 0.0;
  StopReason stop_reason = StopReason::kMaxEpochs;
  double final_gradient_norm = 0.0;
  double wall_seconds = 0.0;
};

/// Seeded normal(0, init_std^2) initialization of every layer.
DedModel InitializeDed(const std::vector<int> &dims, Hypothesis hypothesis,
                       const TrainConfig &config);

/// Greedy layer-wise pretraining: for each encoder width pair an
/// encoder-decoder reconstructing that layer's input is trained; its encoding
/// half becomes the encoder layer and its decoding half the mirrored decoder
/// layer. Starts from InitializeDed(dims, ...).
DedModel PretrainLayerwise(const RowMatrix &data, const std::vector<int> &dims,
                           Hypothesis hypothesis, const TrainConfig &config,
                           PretrainReport *report = nullptr);

/// Full-data loss of one stage, fit terms averaged over rows.
double EvaluateLoss(const RowMatrix &features, const RowMatrix &targets,
                    const DedModel &model, const TrainConfig &config,
                    TrainStage stage);

/// Pretrain, then fine-tune encoder, decoder and the stacked network with
/// momentum SGD.
std::pair<DedModel, TrainReport> TrainDed(
    const RowMatrix &features, const RowMatrix &targets,
    const TrainConfig &config, Hypothesis hypothesis,
    const std::vector<int> &dims = kDefaultDedDims);

}  // namespace dvad

#endif  // DVAD_DED_MODEL_H_
