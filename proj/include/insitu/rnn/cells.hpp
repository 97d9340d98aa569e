// SPDX-License-Identifier: Apache-2.0
/**
 * @file   cells.hpp
 * @brief  GRU and LSTM cells, single steps and full-sequence forward/backward.
 *
 * Row-vector convention: a batch of inputs is a (batch x input) matrix and
 * every gate pre-activation is x * W + h * U + b.
 *
 * GRU, gate blocks [r | z | n]:
 *   r = sigmoid(x Wr + h Ur + br)
 *   z = sigmoid(x Wz + h Uz + bz)
 *   n = tanh(x Wn + (r . h) Un + bn)
 *   h' = (1 - z) . h + z . n
 *
 * LSTM, gate blocks [i | f | g | o]:
 *   i, f, o = sigmoid(...), g = tanh(...)
 *   c' = f . c + i . g,  h' = o . tanh(c')
 *
 * Sequences are stored time-major: rows [t*B, (t+1)*B) hold time step t.
 */
#pragma once

#include <insitu/rnn/tensor.hpp>

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace insitu::rnn {

enum class CellType : std::uint8_t { Gru, Lstm };

std::string_view cell_name(CellType c);
CellType parse_cell(std::string_view name);
constexpr int gate_count(CellType c) { return c == CellType::Gru ? 3 : 4; }

struct CellParams {
  CellType cell = CellType::Gru;
  Matrix w_in;  // input x (gates * hidden)
  Matrix w_rec; // hidden x (gates * hidden)
  Matrix bias;  // 1 x (gates * hidden)

  Eigen::Index hidden() const { return w_rec.rows(); }
  Eigen::Index input_dim() const { return w_in.rows(); }

  static CellParams zeros(CellType cell, Eigen::Index input_dim, Eigen::Index hidden);
  /// Glorot-uniform input weights, orthogonal recurrent blocks, zero bias
  /// (LSTM forget bias 1).
  static CellParams init(CellType cell, Eigen::Index input_dim, Eigen::Index hidden,
                         std::mt19937_64 &rng);
};

Matrix gru_step(const CellParams &p, const Matrix &x, const Matrix &h_prev);
std::pair<Matrix, Matrix> lstm_step(const CellParams &p, const Matrix &x,
                                    const Matrix &h_prev, const Matrix &c_prev);

struct RecurrentCache {
  int steps = 0;
  int batch = 0;
  Matrix x;     // (T*B) x input
  Matrix h_all; // ((T+1)*B) x H, block 0 is the zero initial state
  Matrix c_all; // LSTM cell states, same layout as h_all
  Matrix gates; // (T*B) x (G*H) post-activation gate values
  Matrix rh;    // GRU: r . h_prev per step
};

/// Runs the cell over T steps from zero state; returns (T*B) x H outputs.
Matrix recurrent_forward(const CellParams &p, const Matrix &x, int steps, int batch,
                         RecurrentCache &cache);

/// Backpropagation through time over all steps. `d_out` is the loss
/// gradient w.r.t. every output h_t; accumulates into `grad`; returns dL/dx.
Matrix recurrent_backward(const CellParams &p, const RecurrentCache &cache,
                          const Matrix &d_out, CellParams &grad);

} // namespace insitu::rnn
