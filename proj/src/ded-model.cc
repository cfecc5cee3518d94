// src/ded-model.cc

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

#include "dvad/ded-model.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace dvad {

namespace {

constexpr double kRhoClamp = 1e-6;

LayerParams ZeroLayer(int in, int out) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

LayerParams ZerosLike(const LayerParams &p) {
  return ZeroLayer(p.in(), p.out());
}

void CheckLayer(const LayerParams &p, const char *where) {
  if (p.biases.size() != p.out())
    throw DataError(std::string("bias size mismatch in ") + where);
  if (!p.weights.allFinite() || !p.biases.allFinite())
    throw DataError(std::string("non-finite parameters in ") + where);
}

// One layer of a chain, plus what is attached to its output.
struct ChainLayer {
  const LayerParams *params;
  LayerParams *grad;       // null: no gradient wanted
  bool sparse;             // KL sparsity on this layer's activations
  const Eigen::MatrixXd *target;  // null: no fit term (columns = samples)
};

// Forward and backward over a chain of PSLT layers for column-major samples.
LossTerms RunChain(const Eigen::MatrixXd &input,
                   const std::vector<ChainLayer> &chain,
                   const TrainConfig &config, bool batch_sum) {
  const Eigen::Index batch = input.cols();
  // Squared error is divided by this: every element, or only the dimension.
  auto fit_norm = [&](const Eigen::MatrixXd &a) {
    return static_cast<double>(batch_sum ? a.rows() : a.size());
  };
  const size_t depth = chain.size();
  std::vector<Eigen::MatrixXd> pre(depth), act(depth);
  LossTerms loss;

  const Eigen::MatrixXd *prev = &input;
  for (size_t l = 0; l < depth; ++l) {
    const LayerParams &p = *chain[l].params;
    pre[l] = p.weights * (*prev);
    pre[l].colwise() += p.biases;
    act[l] = pre[l].unaryExpr([](double z) { return Pslt(z); });
    prev = &act[l];
  }

  const double rho = config.sparsity_target;
  std::vector<Eigen::VectorXd> sparse_grad(depth);
  for (size_t l = 0; l < depth; ++l) {
    const ChainLayer &c = chain[l];
    if (c.target) {
      loss.fit += (act[l] - *c.target).squaredNorm() / fit_norm(act[l]);
    }
    if (c.sparse) {
      Eigen::VectorXd rho_hat = act[l].rowwise().mean();
      sparse_grad[l].resize(rho_hat.size());
      const double units = static_cast<double>(rho_hat.size());
      for (Eigen::Index j = 0; j < rho_hat.size(); ++j) {
        const double raw = rho_hat[j];
        const double r = std::clamp(raw, kRhoClamp, 1.0 - kRhoClamp);
        loss.sparsity += config.sparsity_weight / units *
                         (rho * std::log(rho / r) +
                          (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r)));
        const bool clamped = raw < kRhoClamp || raw > 1.0 - kRhoClamp;
        sparse_grad[l][j] =
            clamped ? 0.0
                    : config.sparsity_weight *
                          (-rho / r + (1.0 - rho) / (1.0 - r)) /
                          (units * static_cast<double>(batch));
      }
    }
    loss.l2 += config.l2_weight * c.params->weights.squaredNorm();
  }
  loss.total = loss.fit + loss.l2 + loss.sparsity;

  bool any_grad = false;
  for (const ChainLayer &c : chain) any_grad = any_grad || c.grad != nullptr;
  if (!any_grad) return loss;

  Eigen::MatrixXd d_act = Eigen::MatrixXd::Zero(act[depth - 1].rows(), batch);
  for (size_t l = depth; l-- > 0;) {
    const ChainLayer &c = chain[l];
    if (c.target)
      d_act += (2.0 / fit_norm(act[l])) * (act[l] - *c.target);
    if (c.sparse) d_act.colwise() += sparse_grad[l];
    Eigen::MatrixXd d_pre =
        d_act.cwiseProduct(pre[l].unaryExpr([](double z) { return PsltGrad(z); }));
    const Eigen::MatrixXd &below = l == 0 ? input : act[l - 1];
    if (c.grad) {
      c.grad->weights = d_pre * below.transpose() +
                        2.0 * config.l2_weight * c.params->weights;
      c.grad->biases = d_pre.rowwise().sum();
    }
    if (l > 0) d_act = c.params->weights.transpose() * d_pre;
  }
  return loss;
}

void CheckBatch(const RowMatrix &batch, const RowMatrix &targets,
                const DedModel &model) {
  if (batch.rows() == 0) throw DataError("empty training batch");
  if (batch.cols() != model.input_dim())
    throw DataError("feature dimension does not match the model input");
  if (targets.rows() != batch.rows() || targets.cols() != model.bottleneck_dim())
    throw DataError("target matrix does not match batch and bottleneck");
}

DedGradients ZeroGradients(const DedModel &model) {
  DedGradients g;
  for (const auto &p : model.encoder) g.encoder.push_back(ZerosLike(p));
  for (const auto &p : model.decoder) g.decoder.push_back(ZerosLike(p));
  return g;
}

}  // namespace

void DedModel::Check() const {
  if (encoder.empty() || decoder.size() != encoder.size())
    throw DataError("encoder and decoder must have the same non-zero depth");
  for (size_t l = 0; l < encoder.size(); ++l) {
    CheckLayer(encoder[l], "encoder");
    CheckLayer(decoder[l], "decoder");
    if (l > 0 && encoder[l].in() != encoder[l - 1].out())
      throw DataError("encoder dimension chain is broken");
    if (l > 0 && decoder[l].in() != decoder[l - 1].out())
      throw DataError("decoder dimension chain is broken");
  }
  if (decoder.front().in() != bottleneck_dim() ||
      decoder.back().out() != input_dim())
    throw DataError("decoder does not mirror the encoder");
}

DedModel MakeDedModel(const std::vector<int> &dims, Hypothesis hypothesis) {
  if (dims.size() < 2) throw DataError("need at least two layer widths");
  for (int d : dims)
    if (d < 1) throw DataError("layer widths must be positive");
  DedModel model;
  model.hypothesis = hypothesis;
  const size_t depth = dims.size() - 1;
  for (size_t l = 0; l < depth; ++l)
    model.encoder.push_back(ZeroLayer(dims[l], dims[l + 1]));
  for (size_t l = depth; l > 0; --l)
    model.decoder.push_back(ZeroLayer(dims[l], dims[l - 1]));
  return model;
}

DedOutput Forward(const DedModel &model, const Eigen::VectorXd &x) {
  if (x.size() != model.input_dim())
    throw DataError("feature dimension does not match the model input");
  auto apply = [](const LayerParams &p, const Eigen::VectorXd &v) {
    Eigen::VectorXd z = p.weights * v + p.biases;
    if (!z.allFinite())
      throw InternalError("parameter corruption: non-finite activation");
    return Eigen::VectorXd(z.unaryExpr([](double t) { return Pslt(t); }));
  };
  DedOutput out;
  Eigen::VectorXd h = x;
  for (const auto &p : model.encoder) h = apply(p, h);
  out.bottleneck = h;
  for (const auto &p : model.decoder) h = apply(p, h);
  out.reconstruction = std::move(h);
  return out;
}

void TrainConfig::Check() const {
  if (pretrain_epochs < 0) throw DataError("pretrain_epochs must be >= 0");
  if (!(pretrain_lr > 0.0) || !(finetune_lr > 0.0))
    throw DataError("learning rates must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw DataError("momentum must be in [0, 1)");
  if (max_epochs < 1) throw DataError("max_epochs must be >= 1");
  if (!(min_gradient >= 0.0)) throw DataError("min_gradient must be >= 0");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(l2_weight >= 0.0) || !(sparsity_weight >= 0.0))
    throw DataError("regularization weights must be >= 0");
  if (!(sparsity_target > 0.0 && sparsity_target < 1.0))
    throw DataError("sparsity_target must be in (0, 1)");
  if (!(init_std > 0.0)) throw DataError("init_std must be positive");
}

std::string StageName(TrainStage stage) {
  switch (stage) {
    case TrainStage::kEncoderOnly: return "encoder";
    case TrainStage::kDecoderOnly: return "decoder";
    case TrainStage::kStacked: return "stacked";
  }
  return "unknown";
}

std::string StopReasonName(StopReason reason) {
  return reason == StopReason::kMaxEpochs ? "max-epochs" : "min-gradient";
}

double DedGradients::InfNorm() const {
  double m = 0.0;
  for (const auto *group : {&encoder, &decoder})
    for (const auto &p : *group) {
      if (p.weights.size()) m = std::max(m, p.weights.cwiseAbs().maxCoeff());
      if (p.biases.size()) m = std::max(m, p.biases.cwiseAbs().maxCoeff());
    }
  return m;
}

LossTerms LossAndGradients(const RowMatrix &batch, const RowMatrix &targets,
                           const DedModel &model, const TrainConfig &config,
                           TrainStage stage, DedGradients *gradients) {
  CheckBatch(batch, targets, model);
  const Eigen::MatrixXd x = batch.transpose();
  const Eigen::MatrixXd t = targets.transpose();
  if (gradients) *gradients = ZeroGradients(model);
  const size_t depth = model.encoder.size();

  std::vector<ChainLayer> chain;
  const bool use_encoder = stage != TrainStage::kDecoderOnly;
  const bool use_decoder = stage != TrainStage::kEncoderOnly;
  if (use_encoder) {
    for (size_t l = 0; l < depth; ++l) {
      const bool last = l + 1 == depth;
      chain.push_back({&model.encoder[l],
                       gradients ? &gradients->encoder[l] : nullptr, !last,
                       last ? &t : nullptr});
    }
  }
  if (use_decoder) {
    for (size_t l = 0; l < depth; ++l) {
      const bool last = l + 1 == depth;
      chain.push_back({&model.decoder[l],
                       gradients ? &gradients->decoder[l] : nullptr, !last,
                       last ? &x : nullptr});
    }
  }
  return RunChain(stage == TrainStage::kDecoderOnly ? t : x, chain, config,
                  config.finetune_batch_sum);
}

LossTerms AutoencoderLossAndGradients(const RowMatrix &batch,
                                      const LayerParams &encode,
                                      const LayerParams &decode,
                                      const TrainConfig &config,
                                      bool sparse_hidden,
                                      LayerParams *encode_grad,
                                      LayerParams *decode_grad) {
  if (batch.cols() != encode.in() || decode.in() != encode.out() ||
      decode.out() != encode.in())
    throw DataError("autoencoder dimensions do not match the batch");
  const Eigen::MatrixXd x = batch.transpose();
  if (encode_grad) *encode_grad = ZerosLike(encode);
  if (decode_grad) *decode_grad = ZerosLike(decode);
  std::vector<ChainLayer> chain = {{&encode, encode_grad, sparse_hidden, nullptr},
                                   {&decode, decode_grad, false, &x}};
  return RunChain(x, chain, config, false);
}

DedModel InitializeDed(const std::vector<int> &dims, Hypothesis hypothesis,
                       const TrainConfig &config) {
  DedModel model = MakeDedModel(dims, hypothesis);
  std::mt19937_64 rng(DeriveSeed(config.rng_seed, 100 + ToInt(hypothesis)));
  std::normal_distribution<double> gauss(0.0, config.init_std);
  for (auto *group : {&model.encoder, &model.decoder})
    for (auto &p : *group) {
      for (Eigen::Index i = 0; i < p.weights.size(); ++i)
        p.weights.data()[i] = gauss(rng);
      for (Eigen::Index i = 0; i < p.biases.size(); ++i) p.biases[i] = gauss(rng);
    }
  return model;
}

namespace {

RowMatrix GatherRows(const RowMatrix &m, const std::vector<Eigen::Index> &idx,
                     size_t begin, size_t end) {
  RowMatrix out(end - begin, m.cols());
  for (size_t i = begin; i < end; ++i) out.row(i - begin) = m.row(idx[i]);
  return out;
}

RowMatrix ApplyLayer(const LayerParams &p, const RowMatrix &rows) {
  Eigen::MatrixXd z = p.weights * rows.transpose();
  z.colwise() += p.biases;
  return z.transpose().unaryExpr([](double t) { return Pslt(t); });
}

void Axpy(double a, const LayerParams &x, LayerParams *y) {
  y->weights += a * x.weights;
  y->biases += a * x.biases;
}

void Scale(double a, LayerParams *y) {
  y->weights *= a;
  y->biases *= a;
}

}  // namespace

DedModel PretrainLayerwise(const RowMatrix &data, const std::vector<int> &dims,
                           Hypothesis hypothesis, const TrainConfig &config,
                           PretrainReport *report) {
  config.Check();
  DedModel model = InitializeDed(dims, hypothesis, config);
  if (data.cols() != dims.front())
    throw DataError("feature dimension does not match the model input");
  if (data.rows() < config.batch_size)
    throw DataError("pretraining needs at least batch_size rows");
  const size_t depth = model.encoder.size();
  if (report) *report = {};

  std::mt19937_64 rng(DeriveSeed(config.rng_seed, 200 + ToInt(hypothesis)));
  std::vector<Eigen::Index> order(data.rows());
  std::iota(order.begin(), order.end(), 0);

  RowMatrix layer_input = data;
  for (size_t l = 0; l < depth; ++l) {
    LayerParams &enc = model.encoder[l];
    LayerParams &dec = model.decoder[depth - 1 - l];
    // The last hidden layer is the bottleneck, which carries no sparsity.
    const bool sparse = l + 1 < depth;
    if (report)
      report->initial_losses.push_back(
          AutoencoderLossAndGradients(layer_input, enc, dec, config, sparse,
                                      nullptr, nullptr).total);
    LayerParams g_enc, g_dec;
    for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t b = 0; b < order.size(); b += config.batch_size) {
        const size_t e = std::min(order.size(), b + config.batch_size);
        RowMatrix batch = GatherRows(layer_input, order, b, e);
        LossTerms loss =
            AutoencoderLossAndGradients(batch, enc, dec, config, sparse, &g_enc,
                                        &g_dec);
        if (!std::isfinite(loss.total))
          throw InternalError("non-finite loss during pretraining of layer " +
                              std::to_string(l));
        Axpy(-config.pretrain_lr, g_enc, &enc);
        Axpy(-config.pretrain_lr, g_dec, &dec);
      }
    }
    if (report)
      report->final_losses.push_back(
          AutoencoderLossAndGradients(layer_input, enc, dec, config, sparse,
                                      nullptr, nullptr).total);
    if (l + 1 < depth) layer_input = ApplyLayer(enc, layer_input);
  }
  return model;
}

double EvaluateLoss(const RowMatrix &features, const RowMatrix &targets,
                    const DedModel &model, const TrainConfig &config,
                    TrainStage stage) {
  TrainConfig mean_config = config;
  mean_config.finetune_batch_sum = false;
  return LossAndGradients(features, targets, model, mean_config, stage, nullptr)
      .total;
}

namespace {

StageReport FineTuneStage(const RowMatrix &features, const RowMatrix &targets,
                          const TrainConfig &config, TrainStage stage,
                          std::mt19937_64 *rng, DedModel *model) {
  StageReport report;
  report.name = StageName(stage);
  DedGradients velocity = ZeroGradients(*model);
  DedGradients epoch_grad = ZeroGradients(*model);
  DedGradients grad;
  std::vector<Eigen::Index> order(features.rows());
  std::iota(order.begin(), order.end(), 0);
  const size_t n = order.size();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), *rng);
    for (auto *group : {&epoch_grad.encoder, &epoch_grad.decoder})
      for (auto &p : *group) Scale(0.0, &p);
    double loss_sum = 0.0;
    size_t batches = 0;
    for (size_t b = 0; b < n; b += config.batch_size) {
      const size_t e = std::min(n, b + config.batch_size);
      RowMatrix xb = GatherRows(features, order, b, e);
      RowMatrix tb = GatherRows(targets, order, b, e);
      LossTerms loss = LossAndGradients(xb, tb, *model, config, stage, &grad);
      if (!std::isfinite(loss.total))
        throw InternalError("non-finite loss in " + report.name +
                            " stage at epoch " + std::to_string(epoch));
      const double rows = static_cast<double>(e - b);
      // Logged per row, whatever the reduction.
      const double fit = config.finetune_batch_sum ? loss.fit / rows : loss.fit;
      loss_sum += (fit + loss.l2 + loss.sparsity) * rows;
      ++batches;
      for (size_t l = 0; l < model->encoder.size(); ++l) {
        Scale(config.momentum, &velocity.encoder[l]);
        Axpy(-config.finetune_lr, grad.encoder[l], &velocity.encoder[l]);
        Axpy(1.0, velocity.encoder[l], &model->encoder[l]);
        Axpy(1.0, grad.encoder[l], &epoch_grad.encoder[l]);
        Scale(config.momentum, &velocity.decoder[l]);
        Axpy(-config.finetune_lr, grad.decoder[l], &velocity.decoder[l]);
        Axpy(1.0, velocity.decoder[l], &model->decoder[l]);
        Axpy(1.0, grad.decoder[l], &epoch_grad.decoder[l]);
      }
    }
    report.losses.push_back(loss_sum / static_cast<double>(n));
    report.final_gradient_norm =
        epoch_grad.InfNorm() / static_cast<double>(batches);
    if (report.final_gradient_norm < config.min_gradient) {
      report.stop_reason = StopReason::kMinGradient;
      return report;
    }
  }
  report.stop_reason = StopReason::kMaxEpochs;
  return report;
}

}  // namespace

std::pair<DedModel, TrainReport> TrainDed(const RowMatrix &features,
                                          const RowMatrix &targets,
                                          const TrainConfig &config,
                                          Hypothesis hypothesis,
                                          const std::vector<int> &dims) {
  const auto start = std::chrono::steady_clock::now();
  config.Check();
  if (features.rows() == 0) throw DataError("empty training set");
  if (!features.allFinite() || !targets.allFinite())
    throw DataError("non-finite training data");
  TrainReport report;
  report.initial_stacked_loss =
      EvaluateLoss(features, targets, InitializeDed(dims, hypothesis, config),
                   config, TrainStage::kStacked);
  DedModel model =
      PretrainLayerwise(features, dims, hypothesis, config, &report.pretrain);
  CheckBatch(features, targets, model);

  std::mt19937_64 rng(DeriveSeed(config.rng_seed, 300 + ToInt(hypothesis)));
  for (TrainStage stage : {TrainStage::kEncoderOnly, TrainStage::kDecoderOnly,
                           TrainStage::kStacked})
    report.stages.push_back(
        FineTuneStage(features, targets, config, stage, &rng, &model));
  report.stop_reason = report.stages.back().stop_reason;
  report.final_gradient_norm = report.stages.back().final_gradient_norm;
  report.final_stacked_loss =
      EvaluateLoss(features, targets, model, config, TrainStage::kStacked);
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return {std::move(model), std::move(report)};
}

}  // namespace dvad
