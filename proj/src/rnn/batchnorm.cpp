// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/rnn/batchnorm.hpp>

namespace insitu::rnn {

BatchNormParams BatchNormParams::identity(Eigen::Index features) {
  return {Matrix::Ones(1, features), Matrix::Zero(1, features)};
}

BatchNormStats BatchNormStats::initial(Eigen::Index features) {
  return {Matrix::Zero(1, features), Matrix::Ones(1, features)};
}

Matrix batchnorm_train(const Matrix &x, const BatchNormParams &p, BatchNormCache &c) {
  if (x.rows() < 1)
    throw Error("batch norm needs at least one row in train mode");
  const double n = static_cast<double>(x.rows());
  c.mean = x.colwise().sum() / n;
  Matrix centered = x.rowwise() - c.mean.row(0);
  c.var = centered.array().square().colwise().sum().matrix() / n;
  c.inv_std = (c.var.array() + kBatchNormEpsilon).rsqrt().matrix();
  c.xhat = (centered.array().rowwise() * c.inv_std.row(0).array()).matrix();
  return ((c.xhat.array().rowwise() * p.gamma.row(0).array()).rowwise() +
          p.beta.row(0).array())
    .matrix();
}

Matrix batchnorm_infer(const Matrix &x, const BatchNormParams &p, const BatchNormStats &s) {
  const Matrix scale =
    (p.gamma.array() * (s.var.array() + kBatchNormEpsilon).rsqrt()).matrix();
  const Matrix shift = (p.beta.array() - s.mean.array() * scale.array()).matrix();
  return ((x.array().rowwise() * scale.row(0).array()).rowwise() + shift.row(0).array())
    .matrix();
}

Matrix batchnorm_backward(const Matrix &dy, const BatchNormParams &p,
                          const BatchNormCache &c, BatchNormParams &grad) {
  const double n = static_cast<double>(dy.rows());
  const Matrix sum_dy = dy.colwise().sum();
  const Matrix sum_dy_xhat = dy.cwiseProduct(c.xhat).colwise().sum();
  grad.beta += sum_dy;
  grad.gamma += sum_dy_xhat;

  // dx = gamma * inv_std / n * (n * dy - sum(dy) - xhat * sum(dy * xhat))
  const Eigen::Array<double, 1, Eigen::Dynamic> k =
    p.gamma.row(0).array() * c.inv_std.row(0).array() / n;
  Array t = (n * dy.array()).rowwise() - sum_dy.row(0).array();
  t -= c.xhat.array().rowwise() * sum_dy_xhat.row(0).array();
  return (t.rowwise() * k).matrix();
}

void update_running_stats(BatchNormStats &s, const BatchNormCache &c, double momentum) {
  s.mean = momentum * s.mean + (1.0 - momentum) * c.mean;
  s.var = momentum * s.var + (1.0 - momentum) * c.var;
}

Matrix BatchNorm::operator()(const Matrix &x, Mode mode) {
  if (mode == Mode::Infer)
    return batchnorm_infer(x, params, stats);
  BatchNormCache cache;
  Matrix y = batchnorm_train(x, params, cache);
  update_running_stats(stats, cache);
  return y;
}

} // namespace insitu::rnn
