// SPDX-License-Identifier: Apache-2.0
/**
 * @file   batchnorm.hpp
 * @brief  Batch normalisation over the rows of a (samples x features) matrix.
 *
 * Train mode normalises with the batch mean and biased variance; infer mode
 * uses running statistics updated as running = m * running + (1 - m) * batch.
 */
#pragma once

#include <insitu/rnn/tensor.hpp>

namespace insitu::rnn {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

enum class Mode { Train, Infer };

struct BatchNormParams {
  Matrix gamma; // 1 x features
  Matrix beta;  // 1 x features

  static BatchNormParams identity(Eigen::Index features);
};

struct BatchNormStats {
  Matrix mean; // 1 x features
  Matrix var;  // 1 x features

  static BatchNormStats initial(Eigen::Index features);
};

/// Batch statistics and normalised input kept for the backward pass.
struct BatchNormCache {
  Matrix mean;
  Matrix var;
  Matrix inv_std;
  Matrix xhat;
};

Matrix batchnorm_train(const Matrix &x, const BatchNormParams &p, BatchNormCache &cache);
Matrix batchnorm_infer(const Matrix &x, const BatchNormParams &p, const BatchNormStats &s);

/// Gradient w.r.t. the input; accumulates d_gamma and d_beta into `grad`.
Matrix batchnorm_backward(const Matrix &dy, const BatchNormParams &p,
                          const BatchNormCache &cache, BatchNormParams &grad);

void update_running_stats(BatchNormStats &s, const BatchNormCache &cache,
                          double momentum = kBatchNormMomentum);

/// Parameters plus running statistics: the stateful form.
struct BatchNorm {
  BatchNormParams params;
  BatchNormStats stats;

  explicit BatchNorm(Eigen::Index features)
    : params(BatchNormParams::identity(features)),
      stats(BatchNormStats::initial(features)) {}

  /// Train mode also updates the running statistics.
  Matrix operator()(const Matrix &x, Mode mode);
};

} // namespace insitu::rnn
