// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset.hpp
 * @brief  Fixed-length labelled windows, normalisation and fold plans.
 */
#pragma once

#include <insitu/stream.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace insitu {

enum class OverlapMode : std::uint8_t { Samples, Percent };

struct WindowConfig {
  int length = 100;
  /// Samples shared by consecutive windows, or a percentage of `length`.
  double overlap = 20.0;
  OverlapMode overlap_mode = OverlapMode::Samples;
  double purity_min = 0.6;

  int overlap_samples() const;
  int step() const;
  void validate() const;
};

/// T x 9 channel values, one row per time step.
using WindowMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumChannels, Eigen::RowMajor>;

struct Window {
  WindowMatrix values;
  ActivityLabel label = ActivityLabel::Walking;
  std::string user_id;
  MechanismId mechanism = MechanismId::ThreeButtons;
  std::int64_t start_t_ms = 0;
};

/**
 * Windows start at sample 0, step, 2*step, ...; a window is kept iff it has
 * no unlabelled sample and its modal label covers at least purity_min of it.
 * Ties between modal labels go to the one occurring latest in the window.
 */
std::vector<Window> make_windows(std::span<const LabelledSample> samples,
                                 const WindowConfig &config,
                                 const StreamMeta &meta = {});
std::vector<Window> make_windows(const StreamBundle &bundle, const WindowConfig &config);

/// Number of candidate windows before filtering: max(0, floor((N-T)/step)+1).
std::size_t candidate_window_count(std::size_t n, const WindowConfig &config);

inline constexpr double kNormEpsilon = 1e-6;

struct NormStats {
  std::array<double, kNumChannels> mean{};
  std::array<double, kNumChannels> stddev{};

  /// Stable hash of the statistics (bit patterns), for provenance checks.
  std::uint64_t fingerprint() const;
  bool operator==(const NormStats &) const = default;
};

/// Per-channel mean and population standard deviation over every row.
NormStats fit_norm(std::span<const Window> windows);
NormStats fit_norm(std::span<const Window> windows, std::span<const std::size_t> subset);

/// (x - mean) / max(stddev, kNormEpsilon), in place.
void apply_norm(Window &w, const NormStats &stats);
std::vector<Window> apply_norm(std::span<const Window> windows, const NormStats &stats);

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of; // one entry per window

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Seeded per-class shuffle then round-robin, continuing across classes.
FoldPlan stratified_kfold(std::span<const Window> windows, int k, std::uint64_t seed);
FoldPlan stratified_kfold(std::span<const ActivityLabel> labels, int k, std::uint64_t seed);

/// (windows of `user_id`, every other window). Throws if the user is absent.
std::pair<std::vector<Window>, std::vector<Window>>
split_by_user(std::span<const Window> windows, const std::string &user_id);

std::vector<std::string> user_ids(std::span<const Window> windows);
std::vector<ActivityLabel> window_labels(std::span<const Window> windows);

/// Labels shuffled across windows (a chance-level control); values untouched.
std::vector<Window> permute_labels(std::span<const Window> windows, std::uint64_t seed);

/// Random subsample with every class cut down to the smallest class count.
std::vector<Window> balance_classes(std::span<const Window> windows, std::uint64_t seed);

/// One JSON object per line: start_t_ms, label, user, mechanism, values (T x 9).
void write_windows_jsonl(std::span<const Window> windows, std::ostream &out);

} // namespace insitu
