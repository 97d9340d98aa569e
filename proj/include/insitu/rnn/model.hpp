// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  Multilayer recurrent classifier: [BN -> cell] x L -> BN -> dense -> softmax.
 *
 * Batch norm on a recurrent layer's input uses statistics over batch x time;
 * the head batch norm normalises the final hidden state over the batch.
 */
#pragma once

#include <insitu/dataset.hpp>
#include <insitu/rnn/batchnorm.hpp>
#include <insitu/rnn/cells.hpp>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace insitu::rnn {

struct ModelSpec {
  std::string name = "gru";
  std::vector<CellType> layers{CellType::Gru, CellType::Gru};
  int hidden = 64;
  int input_dim = kNumChannels;
  int classes = kNumLabels;
  bool norm_inputs = true;
  bool norm_head = true;

  static ModelSpec gru(int hidden = 64);
  static ModelSpec lstm(int hidden = 64);
  /// LSTM layer followed by a GRU layer.
  static ModelSpec stacked(int hidden = 64);
  /// "gru", "lstm" or "stacked".
  static ModelSpec named(const std::string &name, int hidden = 64);

  void validate() const;
  bool operator==(const ModelSpec &) const = default;
};

struct LayerParams {
  BatchNormParams norm;
  CellParams cell;
};

struct HeadParams {
  BatchNormParams norm;
  Matrix weight; // hidden x classes
  Matrix bias;   // 1 x classes
};

struct ModelParams {
  std::vector<LayerParams> layers;
  HeadParams head;

  /// Visits every parameter tensor with a stable name, in a fixed order.
  void for_each(const std::function<void(const std::string &, Matrix &)> &f);
  void for_each(const std::function<void(const std::string &, const Matrix &)> &f) const;

  ModelParams zeros_like() const;
  Eigen::Index size() const;
};

struct RnnModel {
  ModelSpec spec;
  ModelParams params;
  std::vector<BatchNormStats> layer_stats;
  BatchNormStats head_stats;

  static RnnModel init(const ModelSpec &spec, std::uint64_t seed);
  /// Every parameter zero (batch-norm scales included), initial running stats.
  static RnnModel zeros(const ModelSpec &spec);
};

/// A mini-batch laid out time-major: rows [t*B, (t+1)*B) are time step t.
struct Batch {
  Matrix x;
  int steps = 0;
  int size = 0;
  std::vector<int> labels;
};

Batch make_batch(std::span<const Window> windows, std::span<const std::size_t> indices);
Batch make_batch(std::span<const Window> windows);

/// Head input (after the head batch norm), batch x hidden.
Matrix forward_features(const RnnModel &model, const Batch &batch, Mode mode);
/// Logits, batch x classes.
Matrix forward(const RnnModel &model, const Batch &batch, Mode mode);
Matrix softmax(const Matrix &logits);

struct LossAndGrads {
  double loss = 0.0;
  std::size_t correct = 0;
  ModelParams grads;
  // batch statistics seen by each batch-norm, for the running averages
  std::vector<BatchNormCache> layer_norm;
  BatchNormCache head_norm;
};

/// Mean softmax cross-entropy and its gradient via full BPTT (train mode).
/// Throws DivergenceError if the loss is not finite.
LossAndGrads loss_and_grads(const RnnModel &model, const Batch &batch,
                            std::size_t batch_id = 0);

void update_running_stats(RnnModel &model, const LossAndGrads &lg,
                          double momentum = kBatchNormMomentum);

} // namespace insitu::rnn
