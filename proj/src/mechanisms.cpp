// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/mechanisms.hpp>

#include <string>

namespace insitu {

namespace {

constexpr std::array<std::string_view, 7> kInputKindNames = {
  "button_down", "button_up", "force", "slider", "tap", "start", "stop"};

constexpr std::array<std::string_view, 4> kLedNames = {"off", "green", "yellow",
                                                       "red"};

Emission emit(MechanismState &s, ActivityLabel label, std::int64_t t) {
  s.current_label = label;
  s.last_emission_t = t;
  return LabelEvent{t, label, s.mechanism};
}

void check_raw(const InputEvent &e) {
  if (e.value < 0 || e.value > kRawMax)
    throw Error("raw reading " + std::to_string(e.value) + " outside 0-1023");
}

ActivityLabel two_button_label(int button) {
  return button == kButtonA ? ActivityLabel::Upstairs : ActivityLabel::Downstairs;
}

ActivityLabel touch_label(int level) {
  constexpr std::array<ActivityLabel, 3> map = {
    ActivityLabel::Walking, ActivityLabel::Downstairs, ActivityLabel::Upstairs};
  return map[level];
}

void advance_clock(MechanismState &s, const InputEvent &e) {
  if (e.t_ms < s.last_event_t)
    throw Error("input event at t=" + std::to_string(e.t_ms) +
                " precedes the previous event");
  s.last_event_t = e.t_ms;
}

} // namespace

std::string_view input_kind_name(InputKind k) {
  return kInputKindNames[static_cast<std::size_t>(k)];
}

InputKind parse_input_kind(std::string_view name) {
  for (std::size_t i = 0; i < kInputKindNames.size(); ++i)
    if (kInputKindNames[i] == name)
      return static_cast<InputKind>(i);
  throw Error("unknown input kind '" + std::string(name) + "'");
}

std::string_view led_name(Led led) {
  return kLedNames[static_cast<std::size_t>(led)];
}

void TwoButtonConfig::validate() const {
  if (simultaneity_window_ms <= 0 || lockout_ms <= 0)
    throw Error("two-button window and lockout must be positive");
}

void TouchConfig::validate() const {
  if (!(0 < t1 && t1 < t2 && t2 < kRawMax))
    throw Error("touch thresholds must satisfy 0 < t1 < t2 < 1023");
  if (hold_ms < 0)
    throw Error("touch hold time must be non-negative");
}

void SliderConfig::validate() const {
  if (!(0 < b1 && b1 < b2 && b2 < kRawMax))
    throw Error("slider boundaries must satisfy 0 < b1 < b2 < 1023");
  if (hysteresis_margin < 0 || 2 * hysteresis_margin >= b2 - b1)
    throw Error("slider hysteresis margin must be in [0, (b2-b1)/2)");
}

Emission step_two_button(MechanismState &s, const TwoButtonConfig &cfg,
                         const InputEvent &e) {
  if (e.kind != InputKind::ButtonDown && e.kind != InputKind::ButtonUp)
    throw Error("two-button mechanism accepts only button events");
  if (e.value != kButtonA && e.value != kButtonB)
    throw Error("two-button mechanism has no button " + std::to_string(e.value));
  advance_clock(s, e);

  Emission out;
  if (s.pending && e.t_ms > s.pending->down_t + cfg.simultaneity_window_ms) {
    const auto deadline = s.pending->down_t + cfg.simultaneity_window_ms;
    out = emit(s, two_button_label(s.pending->button), deadline);
    s.lockout_until = deadline + cfg.lockout_ms;
    s.pending.reset();
  }

  s.held[e.value] = e.kind == InputKind::ButtonDown;
  if (e.t_ms < s.lockout_until || e.kind != InputKind::ButtonDown)
    return out;

  if (!s.pending) {
    s.pending = PendingPress{e.value, e.t_ms};
  } else if (s.pending->button != e.value) {
    // pending was not expired above, so nothing has been emitted this step
    out = emit(s, ActivityLabel::Walking, e.t_ms);
    s.lockout_until = e.t_ms + cfg.lockout_ms;
    s.pending.reset();
  }
  return out;
}

Emission flush_two_button(MechanismState &s, const TwoButtonConfig &cfg) {
  if (!s.pending)
    return std::nullopt;
  const auto deadline = s.pending->down_t + cfg.simultaneity_window_ms;
  auto out = emit(s, two_button_label(s.pending->button), deadline);
  s.lockout_until = deadline + cfg.lockout_ms;
  s.pending.reset();
  return out;
}

Emission step_three_button(MechanismState &s, const InputEvent &e) {
  if (e.kind != InputKind::ButtonDown && e.kind != InputKind::ButtonUp)
    throw Error("three-button mechanism accepts only button events");
  if (e.value < 0 || e.value >= kNumLabels)
    throw Error("three-button mechanism has no button " + std::to_string(e.value));
  advance_clock(s, e);
  if (e.kind == InputKind::ButtonUp)
    return std::nullopt;
  return emit(s, static_cast<ActivityLabel>(e.value), e.t_ms);
}

int touch_level(const TouchConfig &cfg, int raw) {
  return raw < cfg.t1 ? 0 : raw < cfg.t2 ? 1 : 2;
}

Led led_for_touch_level(std::optional<int> level) {
  if (!level)
    return Led::Off;
  return static_cast<Led>(*level + 1);
}

Emission step_touch(MechanismState &s, const TouchConfig &cfg,
                    const InputEvent &e) {
  if (e.kind != InputKind::Force)
    throw Error("touch mechanism accepts only force readings");
  check_raw(e);
  advance_clock(s, e);

  Emission out;
  if (s.touch_level && !s.level_emitted &&
      e.t_ms - s.level_entry_t >= cfg.hold_ms) {
    out = emit(s, touch_label(*s.touch_level), s.level_entry_t + cfg.hold_ms);
    s.level_emitted = true;
  }

  std::optional<int> level;
  if (e.value > 0)
    level = touch_level(cfg, e.value);
  if (level != s.touch_level) {
    s.touch_level = level;
    s.level_entry_t = e.t_ms;
    s.level_emitted = false;
  }
  s.led = led_for_touch_level(s.touch_level);
  return out;
}

Emission flush_touch(MechanismState &s, const TouchConfig &cfg,
                     std::int64_t t_end) {
  if (s.touch_level && !s.level_emitted &&
      t_end - s.level_entry_t >= cfg.hold_ms) {
    s.level_emitted = true;
    return emit(s, touch_label(*s.touch_level), s.level_entry_t + cfg.hold_ms);
  }
  return std::nullopt;
}

ActivityLabel slider_zone(const SliderConfig &cfg, int raw) {
  if (raw < cfg.b1)
    return ActivityLabel::Downstairs;
  if (raw < cfg.b2)
    return ActivityLabel::Walking;
  return ActivityLabel::Upstairs;
}

Emission step_slider(MechanismState &s, const SliderConfig &cfg,
                     const InputEvent &e) {
  if (e.kind != InputKind::Slider)
    throw Error("slider mechanism accepts only slider readings");
  check_raw(e);
  advance_clock(s, e);

  if (!s.slider_zone) {
    s.slider_zone = slider_zone(cfg, e.value);
    return emit(s, *s.slider_zone, e.t_ms);
  }

  int lo = 0;
  int hi = kRawMax + 1;
  switch (*s.slider_zone) {
  case ActivityLabel::Downstairs: hi = cfg.b1; break;
  case ActivityLabel::Walking: lo = cfg.b1; hi = cfg.b2; break;
  case ActivityLabel::Upstairs: lo = cfg.b2; break;
  }
  const int m = cfg.hysteresis_margin;
  if (e.value >= lo - m && e.value < hi + m)
    return std::nullopt;

  s.slider_zone = slider_zone(cfg, e.value);
  return emit(s, *s.slider_zone, e.t_ms);
}

Emission step_virtual_app(MechanismState &s, const InputEvent &e) {
  advance_clock(s, e);
  switch (e.kind) {
  case InputKind::Start: s.recording = true; return std::nullopt;
  case InputKind::Stop: s.recording = false; return std::nullopt;
  case InputKind::Tap:
    if (!s.recording)
      return std::nullopt;
    return emit(s, activity_from_code(e.value), e.t_ms);
  default: throw Error("virtual app accepts only tap, start and stop");
  }
}

Mechanism::Mechanism(MechanismId id, MechanismConfig config)
  : config_(config) {
  config_.two_button.placement = id == MechanismId::TwoOpposite
                                   ? ButtonPlacement::Opposite
                                   : ButtonPlacement::Adjacent;
  config_.two_button.validate();
  config_.touch.validate();
  config_.slider.validate();
  state_.mechanism = id;
}

Emission Mechanism::step(const InputEvent &e) {
  const auto id = state_.mechanism;
  if (id != MechanismId::App &&
      (e.kind == InputKind::Start || e.kind == InputKind::Stop)) {
    // session control only matters to the virtual app
    advance_clock(state_, e);
    state_.recording = e.kind == InputKind::Start;
    return std::nullopt;
  }
  switch (id) {
  case MechanismId::TwoAdjacent:
  case MechanismId::TwoOpposite:
    return step_two_button(state_, config_.two_button, e);
  case MechanismId::ThreeButtons: return step_three_button(state_, e);
  case MechanismId::Touch: return step_touch(state_, config_.touch, e);
  case MechanismId::Slider: return step_slider(state_, config_.slider, e);
  case MechanismId::App: return step_virtual_app(state_, e);
  }
  return std::nullopt;
}

Emission Mechanism::flush(std::int64_t t_end) {
  switch (state_.mechanism) {
  case MechanismId::TwoAdjacent:
  case MechanismId::TwoOpposite:
    return flush_two_button(state_, config_.two_button);
  case MechanismId::Touch: return flush_touch(state_, config_.touch, t_end);
  default: return std::nullopt;
  }
}

std::vector<LabelEvent> replay(MechanismId id, const MechanismConfig &config,
                               std::span<const InputEvent> inputs,
                               std::int64_t t_end) {
  Mechanism m(id, config);
  std::vector<LabelEvent> out;
  for (const auto &e : inputs)
    if (auto ev = m.step(e))
      out.push_back(*ev);
  if (auto ev = m.flush(t_end))
    out.push_back(*ev);
  return out;
}

LabelStats analyze_labels(std::span<const LabelEvent> events, double duration_s) {
  if (!(duration_s > 0.0))
    throw Error("label analysis needs a positive duration");
  LabelStats st;
  st.duration_s = duration_s;
  for (std::size_t i = 0; i < events.size(); ++i) {
    ++st.counts[label_code(events[i].label)];
    if (i > 0 && events[i].label != events[i - 1].label)
      ++st.changes;
  }
  st.total = events.size();
  const double per_min = 60.0 / duration_s;
  st.rate_per_min = static_cast<double>(st.total) * per_min;
  st.change_rate_per_min = static_cast<double>(st.changes) * per_min;
  for (int l = 0; l < kNumLabels; ++l)
    st.label_rate_per_min[l] = static_cast<double>(st.counts[l]) * per_min;
  return st;
}

} // namespace insitu
