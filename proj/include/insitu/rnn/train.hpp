// SPDX-License-Identifier: Apache-2.0
/**
 * @file   train.hpp
 * @brief  Mini-batch training with k-fold cross-validation.
 *
 * Each fold fits its normalisation on the training split only, initialises
 * from a seed derived from the master seed and the fold index, and reshuffles
 * the training windows every epoch. Folds share no mutable state.
 */
#pragma once

#include <insitu/dataset.hpp>
#include <insitu/rnn/model.hpp>
#include <insitu/rnn/optimizer.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace insitu::rnn {

struct TrainConfig {
  double learning_rate = 0.0025;
  int batch_size = 32;
  int epochs = 10;
  int folds = 10;
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::Adam;
  /// Global-norm clip threshold; 0 turns clipping off.
  double clip_norm = 5.0;
  /// Learning rate multiplier applied after every epoch (1 = constant).
  double lr_decay = 1.0;

  void validate() const;
  /// Stable hash of every field, stored in checkpoints.
  std::uint64_t fingerprint() const;
  bool operator==(const TrainConfig &) const = default;
};

struct EpochRecord {
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0; // wall time, never part of reports
};

struct FoldHistory {
  int fold = 0;
  std::vector<EpochRecord> epochs;
  double test_accuracy = 0.0;
  std::size_t test_size = 0;
  std::uint64_t norm_fingerprint = 0;
  std::string error; // set when the fold diverged

  bool diverged() const { return !error.empty(); }
};

struct TrainHistory {
  std::string spec_name;
  std::vector<FoldHistory> folds;
  /// Out-of-fold prediction (label code) per window; -1 for a diverged fold.
  std::vector<int> predictions;
  std::vector<int> fold_of;

  double mean_accuracy() const;
  double std_accuracy() const; // population std over completed folds
  double mean_epoch_seconds() const;
  /// Per-epoch training loss and accuracy averaged over completed folds.
  std::vector<EpochRecord> mean_curve() const;
};

struct FoldModel {
  RnnModel model;
  NormStats norm;
};

struct TrainResult {
  std::vector<FoldModel> models;
  TrainHistory history;
};

struct FitResult {
  RnnModel model;
  std::vector<EpochRecord> epochs;
};

/// Trains one model on already-normalised windows (all of them, or `subset`).
/// Throws DivergenceError carrying the global batch index.
FitResult fit(std::span<const Window> normalized, std::span<const std::size_t> subset,
              const ModelSpec &spec, const TrainConfig &config, std::uint64_t seed);

TrainResult train(std::span<const Window> windows, const ModelSpec &spec,
                  const TrainConfig &config, const FoldPlan &plan);
/// Uses stratified_kfold(windows, config.folds, config.seed).
TrainResult train(std::span<const Window> windows, const ModelSpec &spec,
                  const TrainConfig &config);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> predictions;
};

/// Argmax predictions in inference mode after applying `norm`.
Evaluation evaluate(const RnnModel &model, std::span<const Window> windows,
                    const NormStats &norm);
Evaluation evaluate_normalized(const RnnModel &model, std::span<const Window> normalized,
                               std::span<const std::size_t> subset);

} // namespace insitu::rnn
