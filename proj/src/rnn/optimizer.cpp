// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/rnn/optimizer.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace insitu::rnn {

namespace {

std::vector<Matrix *> tensors(ModelParams &p) {
  std::vector<Matrix *> out;
  p.for_each([&out](const std::string &, Matrix &m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix *> tensors(const ModelParams &p) {
  std::vector<const Matrix *> out;
  p.for_each([&out](const std::string &, const Matrix &m) { out.push_back(&m); });
  return out;
}

} // namespace

std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam")
    return OptimizerKind::Adam;
  if (name == "sgd")
    return OptimizerKind::Sgd;
  throw Error("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

double global_norm(const ModelParams &grads) {
  double sq = 0.0;
  grads.for_each([&sq](const std::string &, const Matrix &g) { sq += g.squaredNorm(); });
  return std::sqrt(sq);
}

double clip_global_norm(ModelParams &grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each([scale](const std::string &, Matrix &g) { g *= scale; });
  }
  return norm;
}

Optimizer::Optimizer(OptimizerKind kind, const ModelParams &shape, AdamConfig adam)
    : kind_(kind), adam_(adam), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

void Optimizer::step(ModelParams &params, const ModelParams &grads, double lr) {
  auto p = tensors(params);
  const auto g = tensors(grads);
  if (p.size() != g.size())
    throw Error("optimizer: parameter and gradient layouts differ");
  ++t_;

  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < p.size(); ++i)
      *p[i] -= lr * *g[i];
    return;
  }

  auto m = tensors(m_);
  auto v = tensors(v_);
  const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    *m[i] = adam_.beta1 * *m[i] + (1.0 - adam_.beta1) * *g[i];
    v[i]->array() = adam_.beta2 * v[i]->array() + (1.0 - adam_.beta2) * g[i]->array().square();
    p[i]->array() -=
      lr * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + adam_.epsilon);
  }
}

} // namespace insitu::rnn
