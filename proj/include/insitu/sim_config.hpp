// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sim_config.hpp
 * @brief  Key-value configuration file for simulation runs.
 *
 * One `key = value` per line; '#' starts a comment. Unknown keys are errors.
 *
 *   seed = 7
 *   rate_hz = 50
 *   users = 10
 *   mechanisms = three_buttons, touch
 *   route = walking:22.5, upstairs:22.5, walking:22.5, downstairs:22.5
 *   noise = 0.4                        # every channel of every activity
 *   gait.<activity>.freq_hz = 1.8      # also accel_amp, pitch_rate_amp,
 *                                      # pitch_offset, noise
 *   labeller.reaction_median_ms = 500
 *   labeller.reaction_sigma = 0.4
 *   labeller.mislabel_p = 0.05
 *   labeller.correction_median_ms = 1500
 *   labeller.correction_sigma = 0.5
 *   labeller.dexterity.<mechanism> = 1.2
 *   labeller.population = true         # draw one labeller per user
 */
#pragma once

#include <insitu/simulator.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace insitu {

struct SimulationConfig {
  std::uint64_t seed = 1;
  double rate_hz = 50.0;
  int users = 10;
  std::vector<MechanismId> mechanisms{MechanismId::ThreeButtons};
  RouteScript route = RouteScript::defaults();
  GaitParams gait = GaitParams::defaults();
  LabellerModel labeller{};
  bool population = true;

  void validate() const;

  /// Labeller for user `index` (population draw or the base model).
  LabellerModel labeller_for(int index) const;
  std::string user_id(int index) const;
  std::uint64_t session_seed(MechanismId m, int index) const;
};

SimulationConfig parse_sim_config(std::istream &in);
SimulationConfig load_sim_config(const std::filesystem::path &path);
void write_sim_config(const SimulationConfig &cfg, std::ostream &out);

} // namespace insitu
