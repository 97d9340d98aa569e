// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/rnn/cells.hpp>

#include <cmath>
#include <string>

namespace insitu::rnn {

namespace {

using ConstRef = Eigen::Ref<const Matrix>;
using Ref = Eigen::Ref<Matrix>;

/// One GRU step from a precomputed input projection `ax` (bias included).
void gru_cell(const ConstRef &ax, const ConstRef &h_prev, const Matrix &w_rec,
              Ref gates, Ref rh, Ref h) {
  const auto H = h_prev.cols();
  Matrix rz = ax.leftCols(2 * H);
  rz.noalias() += h_prev * w_rec.leftCols(2 * H);
  gates.leftCols(2 * H) = sigmoid(rz);
  rh = gates.leftCols(H).cwiseProduct(h_prev);
  Matrix n = ax.rightCols(H);
  n.noalias() += rh * w_rec.rightCols(H);
  gates.rightCols(H) = n.array().tanh().matrix();
  const auto z = gates.middleCols(H, H);
  h = h_prev + z.cwiseProduct(gates.rightCols(H) - h_prev);
}

void lstm_cell(const ConstRef &ax, const ConstRef &h_prev, const ConstRef &c_prev,
               const Matrix &w_rec, Ref gates, Ref h, Ref c) {
  const auto H = h_prev.cols();
  Matrix a = ax;
  a.noalias() += h_prev * w_rec;
  gates.leftCols(2 * H) = sigmoid(a.leftCols(2 * H));
  gates.middleCols(2 * H, H) = a.middleCols(2 * H, H).array().tanh().matrix();
  gates.rightCols(H) = sigmoid(a.rightCols(H));
  c = gates.middleCols(H, H).cwiseProduct(c_prev) +
      gates.leftCols(H).cwiseProduct(gates.middleCols(2 * H, H));
  h = gates.rightCols(H).cwiseProduct(c.array().tanh().matrix());
}

void check_shapes(const CellParams &p, const Matrix &x, const Matrix &h) {
  if (x.cols() != p.input_dim() || h.cols() != p.hidden() || x.rows() != h.rows())
    throw Error("cell shape mismatch: x " + std::to_string(x.rows()) + "x" +
                std::to_string(x.cols()) + ", h " + std::to_string(h.rows()) + "x" +
                std::to_string(h.cols()));
}

Matrix orthogonal(Eigen::Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  // sign fix makes the draw uniform over the orthogonal group
  const Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (Eigen::Index j = 0; j < n; ++j)
    if (d(j) < 0)
      q.col(j) *= -1.0;
  return q;
}

} // namespace

std::string_view cell_name(CellType c) { return c == CellType::Gru ? "gru" : "lstm"; }

CellType parse_cell(std::string_view name) {
  if (name == "gru")
    return CellType::Gru;
  if (name == "lstm")
    return CellType::Lstm;
  throw Error("unknown cell type '" + std::string(name) + "'");
}

CellParams CellParams::zeros(CellType cell, Eigen::Index input_dim, Eigen::Index hidden) {
  const auto g = gate_count(cell) * hidden;
  return {cell, Matrix::Zero(input_dim, g), Matrix::Zero(hidden, g), Matrix::Zero(1, g)};
}

CellParams CellParams::init(CellType cell, Eigen::Index input_dim, Eigen::Index hidden,
                            std::mt19937_64 &rng) {
  auto p = zeros(cell, input_dim, hidden);
  const double limit = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  std::uniform_real_distribution<double> unif(-limit, limit);
  for (Eigen::Index i = 0; i < p.w_in.rows(); ++i)
    for (Eigen::Index j = 0; j < p.w_in.cols(); ++j)
      p.w_in(i, j) = unif(rng);
  for (int g = 0; g < gate_count(cell); ++g)
    p.w_rec.middleCols(g * hidden, hidden) = orthogonal(hidden, rng);
  if (cell == CellType::Lstm)
    p.bias.middleCols(hidden, hidden).setOnes();
  return p;
}

Matrix gru_step(const CellParams &p, const Matrix &x, const Matrix &h_prev) {
  if (p.cell != CellType::Gru)
    throw Error("gru_step needs GRU parameters");
  check_shapes(p, x, h_prev);
  Matrix ax = x * p.w_in;
  ax.rowwise() += p.bias.row(0);
  Matrix gates(x.rows(), 3 * p.hidden());
  Matrix rh(x.rows(), p.hidden());
  Matrix h(x.rows(), p.hidden());
  gru_cell(ax, h_prev, p.w_rec, gates, rh, h);
  return h;
}

std::pair<Matrix, Matrix> lstm_step(const CellParams &p, const Matrix &x,
                                    const Matrix &h_prev, const Matrix &c_prev) {
  if (p.cell != CellType::Lstm)
    throw Error("lstm_step needs LSTM parameters");
  check_shapes(p, x, h_prev);
  if (c_prev.rows() != h_prev.rows() || c_prev.cols() != h_prev.cols())
    throw Error("cell state shape mismatch");
  Matrix ax = x * p.w_in;
  ax.rowwise() += p.bias.row(0);
  Matrix gates(x.rows(), 4 * p.hidden());
  Matrix h(x.rows(), p.hidden());
  Matrix c(x.rows(), p.hidden());
  lstm_cell(ax, h_prev, c_prev, p.w_rec, gates, h, c);
  return {std::move(h), std::move(c)};
}

Matrix recurrent_forward(const CellParams &p, const Matrix &x, int steps, int batch,
                         RecurrentCache &cache) {
  const Eigen::Index T = steps;
  const Eigen::Index B = batch;
  const auto H = p.hidden();
  if (x.rows() != T * B || x.cols() != p.input_dim())
    throw Error("sequence shape mismatch");

  cache.steps = steps;
  cache.batch = batch;
  cache.x = x;
  cache.h_all.setZero((T + 1) * B, H);
  cache.gates.resize(T * B, gate_count(p.cell) * H);

  Matrix ax = x * p.w_in;
  ax.rowwise() += p.bias.row(0);

  if (p.cell == CellType::Gru) {
    cache.rh.resize(T * B, H);
    for (Eigen::Index t = 0; t < T; ++t)
      gru_cell(ax.middleRows(t * B, B), cache.h_all.middleRows(t * B, B), p.w_rec,
               cache.gates.middleRows(t * B, B), cache.rh.middleRows(t * B, B),
               cache.h_all.middleRows((t + 1) * B, B));
  } else {
    cache.c_all.setZero((T + 1) * B, H);
    for (Eigen::Index t = 0; t < T; ++t)
      lstm_cell(ax.middleRows(t * B, B), cache.h_all.middleRows(t * B, B),
                cache.c_all.middleRows(t * B, B), p.w_rec,
                cache.gates.middleRows(t * B, B), cache.h_all.middleRows((t + 1) * B, B),
                cache.c_all.middleRows((t + 1) * B, B));
  }
  return cache.h_all.bottomRows(T * B);
}

Matrix recurrent_backward(const CellParams &p, const RecurrentCache &cache,
                          const Matrix &d_out, CellParams &grad) {
  const Eigen::Index T = cache.steps;
  const Eigen::Index B = cache.batch;
  const auto H = p.hidden();
  const auto G = gate_count(p.cell);
  Matrix da(T * B, G * H);
  Matrix dh_next = Matrix::Zero(B, H);

  if (p.cell == CellType::Gru) {
    const Matrix u_rz = p.w_rec.leftCols(2 * H);
    const Matrix u_n = p.w_rec.rightCols(H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const auto gates = cache.gates.middleRows(t * B, B);
      const auto h_prev = cache.h_all.middleRows(t * B, B);
      const auto r = gates.leftCols(H).array();
      const auto z = gates.middleCols(H, H).array();
      const auto n = gates.rightCols(H).array();

      const Matrix dh = d_out.middleRows(t * B, B) + dh_next;
      auto da_t = da.middleRows(t * B, B);
      da_t.rightCols(H) = (dh.array() * z * (1.0 - n.square())).matrix();
      da_t.middleCols(H, H) = (dh.array() * (n - h_prev.array()) * z * (1.0 - z)).matrix();
      const Matrix drh = da_t.rightCols(H) * u_n.transpose();
      da_t.leftCols(H) = (drh.array() * h_prev.array() * r * (1.0 - r)).matrix();

      dh_next = (dh.array() * (1.0 - z) + drh.array() * r).matrix();
      dh_next.noalias() += da_t.leftCols(2 * H) * u_rz.transpose();
    }
    grad.w_rec.leftCols(2 * H).noalias() +=
      cache.h_all.topRows(T * B).transpose() * da.leftCols(2 * H);
    grad.w_rec.rightCols(H).noalias() += cache.rh.transpose() * da.rightCols(H);
  } else {
    Matrix dc_next = Matrix::Zero(B, H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const auto gates = cache.gates.middleRows(t * B, B);
      const auto i = gates.leftCols(H).array();
      const auto f = gates.middleCols(H, H).array();
      const auto g = gates.middleCols(2 * H, H).array();
      const auto o = gates.rightCols(H).array();
      const auto c_prev = cache.c_all.middleRows(t * B, B).array();
      const Array tc = cache.c_all.middleRows((t + 1) * B, B).array().tanh();

      const Matrix dh = d_out.middleRows(t * B, B) + dh_next;
      const Array dc = dc_next.array() + dh.array() * o * (1.0 - tc.square());
      auto da_t = da.middleRows(t * B, B);
      da_t.leftCols(H) = (dc * g * i * (1.0 - i)).matrix();
      da_t.middleCols(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
      da_t.middleCols(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
      da_t.rightCols(H) = (dh.array() * tc * o * (1.0 - o)).matrix();

      dc_next = (dc * f).matrix();
      dh_next.noalias() = da_t * p.w_rec.transpose();
    }
    grad.w_rec.noalias() += cache.h_all.topRows(T * B).transpose() * da;
  }

  grad.w_in.noalias() += cache.x.transpose() * da;
  grad.bias += da.colwise().sum();
  return da * p.w_in.transpose();
}

} // namespace insitu::rnn
