// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace insitu::rnn {

/// Row-major so that a block of consecutive rows (one time step) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Array = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Matrix sigmoid(const Matrix &a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

} // namespace insitu::rnn
