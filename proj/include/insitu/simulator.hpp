// SPDX-License-Identifier: Apache-2.0
/**
 * @file   simulator.hpp
 * @brief  Synthetic 9-DOF gait signals and a simulated human labeller.
 *
 * A session follows a RouteScript. The sensor stream is synthesised from
 * per-activity sinusoidal gait parameters; the labeller reacts to each
 * activity change after a sampled delay by producing raw mechanism inputs
 * (presses, force ramps, slider sweeps), which are replayed through the
 * mechanism state machines to obtain the recorded LabelEvents. The true
 * activity per frame is returned separately and never enters the CSV.
 */
#pragma once

#include <insitu/mechanisms.hpp>
#include <insitu/seed.hpp>
#include <insitu/stream.hpp>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace insitu {

struct ActivityGait {
  double freq_hz = 1.8;
  double accel_amp = 2.0;      // vertical, m/s^2
  double pitch_rate_amp = 30.; // gyro-y, deg/s
  double pitch_offset = 0.0;   // gyro-y bias, deg/s
  std::array<double, kNumChannels> noise_sigma{};
};

struct GaitParams {
  std::array<ActivityGait, kNumLabels> activity{};
  Vec3 heading{20.0, 0.0, 40.0};

  static GaitParams defaults();
  /// Same gait with every noise sigma set to zero.
  GaitParams noise_free() const;
  void set_noise(double sigma);
  void validate() const;

  const ActivityGait &operator[](ActivityLabel l) const {
    return activity[static_cast<std::size_t>(l)];
  }
  ActivityGait &operator[](ActivityLabel l) {
    return activity[static_cast<std::size_t>(l)];
  }
};

/// Noise-free gait value of every channel at time t_s.
std::array<double, kNumChannels> gait_channels(const ActivityGait &g,
                                               const Vec3 &heading, double t_s);

/// Frames at t0_ms + round(k * 1000 / rate_hz) for k < duration_s * rate_hz.
std::vector<SensorFrame> gen_activity_signal(ActivityLabel activity,
                                             double duration_s,
                                             const GaitParams &params,
                                             double rate_hz, std::uint64_t seed,
                                             std::int64_t t0_ms = 0);

struct RouteSegment {
  ActivityLabel activity = ActivityLabel::Walking;
  double duration_s = 0.0;
};

struct RouteScript {
  std::vector<RouteSegment> segments;

  /// 180 s: half walking, a quarter each upstairs and downstairs.
  static RouteScript defaults();
  double total_s() const;
  void validate() const;
};

/// Log-normal delay parameterised by its median; median 0 means no delay.
struct DelayDistribution {
  double median_ms = 0.0;
  double sigma = 0.0;

  double mu() const;
  /// Delay for a standard-normal draw z.
  double at(double z) const;
};

struct LabellerModel {
  DelayDistribution reaction{500.0, 0.4};
  double mislabel_p = 0.05;
  DelayDistribution correction{1500.0, 0.5};
  std::array<double, kAllMechanisms.size()> dexterity = {1.1, 1.3, 1.0,
                                                         1.2, 1.0, 1.2};

  /// Immediate, always-correct labeller.
  static LabellerModel ideal();
  void validate() const;
  double dexterity_for(MechanismId m) const {
    return dexterity[static_cast<std::size_t>(m)];
  }
};

/// The `index`-th simulated participant drawn from a population around `base`.
LabellerModel draw_labeller(const LabellerModel &base, std::uint64_t seed, int index);

struct SessionOptions {
  double rate_hz = 50.0;
  std::string user_id = "user00";
  MechanismConfig mechanism_config{};
};

struct SimulatedSession {
  StreamBundle bundle;
  std::vector<ActivityLabel> truth; // one per sample
  std::vector<InputEvent> inputs;   // raw interactions that produced the events
};

SimulatedSession simulate_session(const RouteScript &route, MechanismId mechanism,
                                  const LabellerModel &labeller,
                                  const GaitParams &params, std::uint64_t seed,
                                  const SessionOptions &options = {});

/// Fraction of samples whose recorded label equals the true activity.
double label_agreement(std::span<const LabelledSample> samples,
                       std::span<const ActivityLabel> truth);

/**
 * Scripted maximum-rate labelling: gestures cycling downstairs, walking,
 * upstairs, walking, ... each starting `cadence_ms` after the previous one
 * (or 50 ms after it finishes, whichever is later).
 */
std::vector<InputEvent> max_rate_script(MechanismId mechanism, double duration_s,
                                        std::int64_t cadence_ms,
                                        const MechanismConfig &config = {});

void write_truth_csv(std::span<const LabelledSample> samples,
                     std::span<const ActivityLabel> truth, std::ostream &out);
std::vector<std::pair<std::int64_t, ActivityLabel>> parse_truth_csv(std::istream &in);

} // namespace insitu
