// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <insitu/rnn/model.hpp>

#include <cstdint>
#include <string_view>

namespace insitu::rnn {

enum class OptimizerKind : std::uint8_t { Adam, Sgd };

std::string_view optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// L2 norm over every gradient tensor taken together.
double global_norm(const ModelParams &grads);

/// Rescales `grads` so the global norm is at most `max_norm`; returns the
/// norm before clipping. A non-positive `max_norm` disables clipping.
double clip_global_norm(ModelParams &grads, double max_norm);

class Optimizer {
public:
  Optimizer(OptimizerKind kind, const ModelParams &shape, AdamConfig adam = {});

  /// params -= lr * update(grads)
  void step(ModelParams &params, const ModelParams &grads, double lr);

  OptimizerKind kind() const { return kind_; }
  std::int64_t steps() const { return t_; }

private:
  OptimizerKind kind_;
  AdamConfig adam_;
  ModelParams m_;
  ModelParams v_;
  std::int64_t t_ = 0;
};

} // namespace insitu::rnn
