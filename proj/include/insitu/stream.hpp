// SPDX-License-Identifier: Apache-2.0
/**
 * @file   stream.hpp
 * @brief  Timestamped 9-DOF sensor frames, label events and their fusion.
 *
 * A recording is a sequence of SensorFrames plus a sparse sequence of
 * LabelEvents (one per label press). Fusion forward-fills the most recent
 * label onto every frame. The on-disk form is a CSV with the fixed header
 * kCsvHeader; every data row is one fused sample.
 */
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace insitu {

enum class ActivityLabel : std::int8_t { Downstairs = 0, Walking = 1, Upstairs = 2 };

inline constexpr int kNumLabels = 3;
inline constexpr int kUnlabelled = -1;
inline constexpr std::array<ActivityLabel, kNumLabels> kAllLabels = {
  ActivityLabel::Downstairs, ActivityLabel::Walking, ActivityLabel::Upstairs};

/// A label that may be absent (frames recorded before the first press).
using MaybeLabel = std::optional<ActivityLabel>;

constexpr int label_code(ActivityLabel l) { return static_cast<int>(l); }
constexpr int label_code(MaybeLabel l) { return l ? label_code(*l) : kUnlabelled; }

/// Maps -1/0/1/2 to a MaybeLabel; throws insitu::Error for other codes.
MaybeLabel label_from_code(int code);
ActivityLabel activity_from_code(int code);
std::string_view label_name(ActivityLabel l);
ActivityLabel parse_label_name(std::string_view name);

enum class MechanismId : std::uint8_t {
  TwoAdjacent,
  TwoOpposite,
  ThreeButtons,
  Touch,
  Slider,
  App,
};

inline constexpr std::array<MechanismId, 6> kAllMechanisms = {
  MechanismId::TwoAdjacent, MechanismId::TwoOpposite, MechanismId::ThreeButtons,
  MechanismId::Touch,       MechanismId::Slider,      MechanismId::App};

std::string_view mechanism_name(MechanismId m);
MechanismId parse_mechanism(std::string_view name);

using Vec3 = std::array<double, 3>;

inline constexpr int kNumChannels = 9;

struct SensorFrame {
  std::int64_t t_ms = 0;
  Vec3 accel{}; // m/s^2
  Vec3 gyro{};  // deg/s
  Vec3 mag{};   // uT

  std::array<double, kNumChannels> channels() const;
  static SensorFrame from_channels(std::int64_t t_ms,
                                   std::span<const double, kNumChannels> v);

  bool operator==(const SensorFrame &) const = default;
};

struct LabelEvent {
  std::int64_t t_ms = 0;
  ActivityLabel label = ActivityLabel::Walking;
  MechanismId mechanism = MechanismId::ThreeButtons;

  bool operator==(const LabelEvent &) const = default;
};

struct LabelledSample {
  SensorFrame frame;
  MaybeLabel label;

  bool operator==(const LabelledSample &) const = default;
};

struct StreamMeta {
  std::string user_id = "user00";
  MechanismId mechanism = MechanismId::ThreeButtons;
  double sample_rate_hz = 50.0;

  bool operator==(const StreamMeta &) const = default;
};

/**
 * One recording session. `events` holds the label emissions that produced
 * the sample labels; after a CSV round trip they are the change points of
 * the label column (see change_points()).
 */
struct StreamBundle {
  StreamMeta meta;
  std::vector<LabelledSample> samples;
  std::vector<LabelEvent> events;

  /// Throws insitu::Error if any invariant is violated.
  void validate() const;

  bool operator==(const StreamBundle &) const = default;
};

inline constexpr std::string_view kCsvHeader =
  "t_ms,ax,ay,az,gx,gy,gz,mx,my,mz,label";

/// Significant digits used for sensor values in CSV files.
inline constexpr int kCsvDigits = 6;

/// Rounds to kCsvDigits significant digits (the value a CSV round trip yields).
double quantize(double v);
SensorFrame quantize(const SensorFrame &f);

StreamBundle parse_csv(std::istream &in, const StreamMeta &meta = {});
StreamBundle parse_csv(std::string_view text, const StreamMeta &meta = {});

void emit_csv(const StreamBundle &bundle, std::ostream &out);
std::string emit_csv(const StreamBundle &bundle);

/// Zero-order-hold resampling onto a uniform grid starting at the first frame.
std::vector<SensorFrame> resample_hold(std::span<const SensorFrame> frames,
                                       double target_rate_hz);

/// Forward-fill: each frame takes the latest event with event.t_ms <= t_ms.
std::vector<LabelledSample> fuse(std::span<const SensorFrame> frames,
                                 std::span<const LabelEvent> events);

/// One event at the first sample of every run of equal, present labels.
std::vector<LabelEvent> change_points(std::span<const LabelledSample> samples,
                                      MechanismId mechanism);

} // namespace insitu
