// SPDX-License-Identifier: Apache-2.0
/**
 * @file   pipeline.hpp
 * @brief  Batch orchestration behind the command-line tool.
 *
 * Dataset directory layout:
 *   <root>/<mechanism>/<user>.csv        fused stream (standard CSV)
 *   <root>/<mechanism>/<user>.truth.csv  ground truth sidecar (simulated only)
 */
#pragma once

#include <insitu/dataset.hpp>
#include <insitu/report.hpp>
#include <insitu/rnn/train.hpp>
#include <insitu/sim_config.hpp>
#include <insitu/simulator.hpp>

#include <filesystem>
#include <utility>
#include <vector>

namespace insitu {

struct PipelineConfig {
  WindowConfig window{};
  std::vector<rnn::ModelSpec> specs{rnn::ModelSpec::gru(), rnn::ModelSpec::lstm(),
                                    rnn::ModelSpec::stacked()};
  rnn::TrainConfig train{};
  double alpha = kDefaultAlpha;

  void validate() const;
};

struct RunConfig {
  SimulationConfig simulation{};
  PipelineConfig pipeline{};
};

/**
 * One key-value file for a whole run. Keys below go to the pipeline, every
 * other key to the simulation (see sim_config.hpp):
 *
 *   window.length = 100
 *   window.overlap = 20
 *   window.overlap_mode = samples      # or percent
 *   window.purity_min = 0.6
 *   train.learning_rate = 0.0025
 *   train.batch_size = 32
 *   train.epochs = 10
 *   train.folds = 10
 *   train.seed = 1
 *   train.optimizer = adam             # or sgd
 *   train.clip_norm = 5                # 0 disables clipping
 *   train.lr_decay = 1
 *   models = gru, lstm, stacked
 *   hidden = 64
 *   alpha = 0.05
 */
RunConfig parse_run_config(std::istream &in);
RunConfig load_run_config(const std::filesystem::path &path);

/// Every session of one mechanism, in user order.
std::vector<SimulatedSession> simulate_mechanism(const SimulationConfig &cfg,
                                                 MechanismId mechanism);

/// Simulates every configured mechanism and user into `out`; returns written CSVs.
std::vector<std::filesystem::path> simulate_dataset(const SimulationConfig &cfg,
                                                    const std::filesystem::path &out);

/// Reads one CSV; the user id is the file stem, the mechanism its directory name
/// when that names a mechanism.
StreamBundle load_stream(const std::filesystem::path &csv, double rate_hz = 50.0);
std::vector<StreamBundle> load_mechanism_dir(const std::filesystem::path &dir,
                                             MechanismId mechanism, double rate_hz = 50.0);
/// Mechanism subdirectories present under `root`, in canonical order.
std::vector<MechanismId> mechanisms_in(const std::filesystem::path &root);

std::vector<Window> windows_from(std::span<const StreamBundle> bundles,
                                 const WindowConfig &config);

using MechanismWindows = std::pair<MechanismId, std::vector<Window>>;

/// Trains every spec per mechanism on one shared fold plan and seed.
ComparisonReport cmd_compare(const std::vector<MechanismWindows> &datasets,
                             const PipelineConfig &config);
ComparisonReport cmd_compare(const std::filesystem::path &root, const PipelineConfig &config);

/// Rate tables from stored CSVs: a single file or a dataset root.
std::vector<RateRow> cmd_rates(const std::filesystem::path &path);
/// Rate tables from scripted maximum-rate input.
std::vector<RateRow> stress_rates(std::span<const MechanismId> mechanisms, double duration_s,
                                  std::int64_t cadence_ms, const MechanismConfig &config = {});

} // namespace insitu
