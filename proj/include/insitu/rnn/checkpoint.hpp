// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Text checkpoint container for a trained model.
 *
 * Layout: a first line `INSITU-CKPT <version>`, then one JSON document with
 * the keys `spec`, `config_fingerprint`, `norm` {mean, stddev},
 * `params` {name: {rows, cols, data}}, `layer_stats` and `head_stats`.
 * Doubles are written with round-trip precision, so save/load is bit-exact.
 */
#pragma once

#include <insitu/dataset.hpp>
#include <insitu/rnn/model.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace insitu::rnn {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char *kCheckpointMagic = "INSITU-CKPT";

struct Checkpoint {
  RnnModel model;
  NormStats norm;
  std::uint64_t config_fingerprint = 0;
};

void write_checkpoint(const Checkpoint &ckpt, std::ostream &out);
Checkpoint read_checkpoint(std::istream &in);
void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace insitu::rnn
