// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mechanisms.hpp
 * @brief  Event-driven state machines for the tangible labelling mechanisms.
 *
 * Every machine is a pure function of (state, config, input event): it
 * consumes one InputEvent and yields at most one LabelEvent. There are no
 * timers. Deadlines (the two-button simultaneity window, the touch hold
 * time) are evaluated lazily on the next event whose timestamp passes them,
 * and flush() settles whatever is still pending at the end of a stream.
 *
 * Button ids:
 *   two-button   kButtonA (Upstairs), kButtonB (Downstairs), both = Walking
 *   three-button the label code of the button (0 down, 1 walk, 2 up)
 */
#pragma once

#include <insitu/stream.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>

namespace insitu {

enum class InputKind : std::uint8_t {
  ButtonDown,
  ButtonUp,
  Force,
  Slider,
  Tap,
  Start,
  Stop,
};

std::string_view input_kind_name(InputKind k);
InputKind parse_input_kind(std::string_view name);

/// One raw interaction. `value` is a button id, a 0-1023 reading, or a label code.
struct InputEvent {
  std::int64_t t_ms = 0;
  InputKind kind = InputKind::ButtonDown;
  int value = 0;

  bool operator==(const InputEvent &) const = default;
};

enum class Led : std::uint8_t { Off, Green, Yellow, Red };

std::string_view led_name(Led led);

enum class ButtonPlacement : std::uint8_t { Adjacent, Opposite };

inline constexpr int kButtonA = 0;
inline constexpr int kButtonB = 1;
inline constexpr int kRawMax = 1023;

struct TwoButtonConfig {
  std::int64_t simultaneity_window_ms = 150;
  std::int64_t lockout_ms = 400;
  ButtonPlacement placement = ButtonPlacement::Adjacent;

  void validate() const;
};

struct TouchConfig {
  int t1 = 300;
  int t2 = 600;
  std::int64_t hold_ms = 200;

  void validate() const;
};

struct SliderConfig {
  int b1 = 341;
  int b2 = 682;
  int hysteresis_margin = 20;

  void validate() const;
};

struct MechanismConfig {
  TwoButtonConfig two_button;
  TouchConfig touch;
  SliderConfig slider;
};

struct PendingPress {
  int button = kButtonA;
  std::int64_t down_t = 0;

  bool operator==(const PendingPress &) const = default;
};

inline constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min();

struct MechanismState {
  MechanismId mechanism = MechanismId::ThreeButtons;
  std::int64_t last_event_t = kNever;

  // two-button
  std::optional<PendingPress> pending;
  std::array<bool, 2> held{};
  std::int64_t lockout_until = kNever;
  std::int64_t last_emission_t = kNever;

  // touch: level 0/1/2 while force > 0
  std::optional<int> touch_level;
  std::int64_t level_entry_t = 0;
  bool level_emitted = false;

  // slider
  MaybeLabel slider_zone;

  // virtual app
  bool recording = false;

  Led led = Led::Off;
  MaybeLabel current_label;

  bool operator==(const MechanismState &) const = default;
};

using Emission = std::optional<LabelEvent>;

/// Both buttons within the window -> Walking; a lone press -> its label once
/// the window expires. Inputs are ignored until lockout_ms after any emission.
Emission step_two_button(MechanismState &state, const TwoButtonConfig &config,
                         const InputEvent &event);
Emission flush_two_button(MechanismState &state, const TwoButtonConfig &config);

Emission step_three_button(MechanismState &state, const InputEvent &event);

/// Force bands [1,t1) [t1,t2) [t2,1023] map to Walking, Downstairs, Upstairs
/// once held for hold_ms. A zero reading releases the sensor.
Emission step_touch(MechanismState &state, const TouchConfig &config,
                    const InputEvent &event);
Emission flush_touch(MechanismState &state, const TouchConfig &config,
                     std::int64_t t_end);

Emission step_slider(MechanismState &state, const SliderConfig &config,
                     const InputEvent &event);

Emission step_virtual_app(MechanismState &state, const InputEvent &event);

Led led_for_touch_level(std::optional<int> level);
int touch_level(const TouchConfig &config, int raw);
ActivityLabel slider_zone(const SliderConfig &config, int raw);

/// A mechanism instance: id, configuration and state. Value type.
class Mechanism {
 public:
  explicit Mechanism(MechanismId id, MechanismConfig config = {});

  /// Throws insitu::Error for inputs the mechanism cannot accept.
  Emission step(const InputEvent &event);

  /// Settles pending deadlines at the end of a stream.
  Emission flush(std::int64_t t_end);

  MechanismId id() const { return state_.mechanism; }
  const MechanismConfig &config() const { return config_; }
  const MechanismState &state() const { return state_; }
  Led led() const { return state_.led; }
  MaybeLabel current_label() const { return state_.current_label; }

 private:
  MechanismConfig config_;
  MechanismState state_;
};

/// Replays `inputs` through a fresh mechanism and flushes at `t_end`.
std::vector<LabelEvent> replay(MechanismId id, const MechanismConfig &config,
                               std::span<const InputEvent> inputs,
                               std::int64_t t_end);

struct LabelStats {
  std::array<std::size_t, kNumLabels> counts{};
  std::size_t total = 0;
  std::size_t changes = 0;
  double duration_s = 0.0;
  double rate_per_min = 0.0;
  double change_rate_per_min = 0.0;
  std::array<double, kNumLabels> label_rate_per_min{};
};

/// Per-label counts, adjacent label changes and per-minute rates.
LabelStats analyze_labels(std::span<const LabelEvent> events, double duration_s);

} // namespace insitu
