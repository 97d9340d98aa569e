// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace insitu {

namespace {

constexpr double kGravity = 9.81;
constexpr std::int64_t kTouchReadingMs = 50;
constexpr std::int64_t kSliderReadingMs = 30;

std::int64_t to_ms(double ms) { return std::llround(ms); }

std::int64_t frame_time(std::int64_t t0, std::int64_t k, double rate_hz) {
  return t0 + std::llround(static_cast<double>(k) * 1000.0 / rate_hz);
}

/// Uniform draws consumed by one gesture; always drawn so that the random
/// stream does not depend on which branch a labeller takes.
struct GestureDraws {
  std::array<double, 4> u{0.5, 0.5, 0.5, 0.5};
};

GestureDraws draw_gesture(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  GestureDraws d;
  for (double &x : d.u)
    x = unif(rng);
  return d;
}

/// Produces mechanism-appropriate raw inputs for "record label L at time t".
class GestureWriter {
 public:
  GestureWriter(MechanismId mech, const MechanismConfig &cfg, double dexterity,
                std::vector<InputEvent> &out)
    : mech_(mech), cfg_(cfg), dex_(dexterity), out_(out) {}

  /// Returns the time of the gesture's last input.
  std::int64_t perform(ActivityLabel label, std::int64_t t, const GestureDraws &d) {
    switch (mech_) {
    case MechanismId::ThreeButtons: return three_buttons(label, t, d);
    case MechanismId::App: push(t, InputKind::Tap, label_code(label)); return t;
    case MechanismId::TwoAdjacent:
    case MechanismId::TwoOpposite: return two_buttons(label, t, d);
    case MechanismId::Touch: return touch(label, t, d);
    case MechanismId::Slider: return slider(label, t, d);
    }
    return t;
  }

 private:
  void push(std::int64_t t, InputKind k, int v) { out_.push_back({t, k, v}); }

  std::int64_t three_buttons(ActivityLabel l, std::int64_t t, const GestureDraws &d) {
    const auto up = t + to_ms((80.0 + 70.0 * d.u[0]) * dex_);
    push(t, InputKind::ButtonDown, label_code(l));
    push(up, InputKind::ButtonUp, label_code(l));
    return up;
  }

  std::int64_t two_buttons(ActivityLabel l, std::int64_t t, const GestureDraws &d) {
    const auto hold = to_ms((100.0 + 100.0 * d.u[0]) * dex_);
    if (l != ActivityLabel::Walking) {
      const int b = l == ActivityLabel::Upstairs ? kButtonA : kButtonB;
      push(t, InputKind::ButtonDown, b);
      push(t + hold, InputKind::ButtonUp, b);
      return t + hold;
    }
    // opposite faces make the two presses land further apart
    const double spread = mech_ == MechanismId::TwoOpposite ? 200.0 : 80.0;
    const auto jitter = to_ms(spread * d.u[2] * dex_);
    const int first = d.u[1] < 0.5 ? kButtonA : kButtonB;
    const int second = 1 - first;
    push(t, InputKind::ButtonDown, first);
    push(t + jitter, InputKind::ButtonDown, second);
    push(t + jitter + hold, InputKind::ButtonUp, first);
    push(t + jitter + hold, InputKind::ButtonUp, second);
    return t + jitter + hold;
  }

  std::int64_t touch(ActivityLabel l, std::int64_t t, const GestureDraws &d) {
    const auto &c = cfg_.touch;
    const int target = l == ActivityLabel::Walking ? 0 : l == ActivityLabel::Downstairs ? 1 : 2;
    const std::array<int, 3> lo = {1, c.t1, c.t2};
    const std::array<int, 3> hi = {c.t1 - 1, c.t2 - 1, kRawMax};

    // dwell per intermediate band comfortably longer than the hold time
    const double band_ms = (static_cast<double>(c.hold_ms) + 60.0 + 120.0 * d.u[0]) * dex_;
    const double target_ms = static_cast<double>(c.hold_ms) + 150.0 + 100.0 * d.u[1];

    std::int64_t now = t;
    for (int band = 0; band <= target; ++band) {
      const double dwell = band < target ? band_ms : target_ms;
      const int mid = (lo[band] + hi[band]) / 2;
      const int wobble = static_cast<int>((d.u[2] - 0.5) * (hi[band] - lo[band]) * 0.4);
      const int raw = std::clamp(mid + wobble, lo[band], hi[band]);
      const auto band_end = now + to_ms(dwell);
      while (now < band_end) {
        push(now, InputKind::Force, raw);
        now += kTouchReadingMs;
      }
    }
    push(now, InputKind::Force, 0);
    return now;
  }

  std::int64_t slider(ActivityLabel l, std::int64_t t, const GestureDraws &d) {
    const auto &c = cfg_.slider;
    const std::array<int, 3> lo = {0, c.b1, c.b2};
    const std::array<int, 3> hi = {c.b1 - 1, c.b2 - 1, kRawMax};
    const int z = label_code(l);
    const int span = hi[z] - lo[z];
    const int target = std::clamp((lo[z] + hi[z]) / 2 +
                                    static_cast<int>((d.u[0] - 0.5) * span * 0.5),
                                  lo[z], hi[z]);
    if (slider_pos_ < 0) {
      push(t, InputKind::Slider, target);
      slider_pos_ = target;
      return t;
    }
    const double speed = (3000.0 + 3000.0 * d.u[1]) / dex_; // raw units per second
    const double step = speed * static_cast<double>(kSliderReadingMs) / 1000.0;
    double pos = slider_pos_;
    std::int64_t now = t;
    const double dir = target > slider_pos_ ? 1.0 : -1.0;
    while (std::abs(target - pos) > step) {
      pos += dir * step;
      push(now, InputKind::Slider, static_cast<int>(std::lround(pos)));
      now += kSliderReadingMs;
    }
    push(now, InputKind::Slider, target);
    slider_pos_ = target;
    return now;
  }

  MechanismId mech_;
  const MechanismConfig &cfg_;
  double dex_;
  std::vector<InputEvent> &out_;
  int slider_pos_ = -1;
};

ActivityLabel other_label(ActivityLabel l, double u) {
  std::array<ActivityLabel, 2> others{};
  int n = 0;
  for (auto x : kAllLabels)
    if (x != l)
      others[n++] = x;
  return others[u < 0.5 ? 0 : 1];
}

} // namespace

GaitParams GaitParams::defaults() {
  GaitParams p;
  p[ActivityLabel::Walking] = {1.8, 2.0, 30.0, 0.0, {}};
  p[ActivityLabel::Upstairs] = {1.4, 3.0, 40.0, 15.0, {}};
  p[ActivityLabel::Downstairs] = {1.4, 2.5, 35.0, -15.0, {}};
  p.set_noise(0.4);
  return p;
}

GaitParams GaitParams::noise_free() const {
  GaitParams p = *this;
  p.set_noise(0.0);
  return p;
}

void GaitParams::set_noise(double sigma) {
  for (auto &a : activity)
    a.noise_sigma.fill(sigma);
}

void GaitParams::validate() const {
  for (const auto &a : activity) {
    if (!(a.freq_hz > 0.0))
      throw Error("gait frequency must be positive");
    for (double s : a.noise_sigma)
      if (!(s >= 0.0))
        throw Error("gait noise sigma must be non-negative");
  }
}

std::array<double, kNumChannels> gait_channels(const ActivityGait &g,
                                               const Vec3 &heading, double t_s) {
  const double w = 2.0 * std::numbers::pi * g.freq_hz * t_s;
  const double a = g.accel_amp;
  const double p = g.pitch_rate_amp;
  return {0.5 * a * std::sin(2.0 * w),
          0.5 * a * std::cos(w),
          kGravity + a * std::sin(w),
          0.5 * p * std::cos(2.0 * w),
          g.pitch_offset + p * std::sin(w),
          0.25 * p * std::sin(2.0 * w),
          heading[0],
          heading[1],
          heading[2]};
}

namespace {

SensorFrame noisy_frame(const ActivityGait &g, const Vec3 &heading, std::int64_t t_ms,
                        std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto v = gait_channels(g, heading, static_cast<double>(t_ms) / 1000.0);
  for (int c = 0; c < kNumChannels; ++c)
    v[c] += g.noise_sigma[c] * normal(rng);
  return SensorFrame::from_channels(t_ms, v);
}

} // namespace

std::vector<SensorFrame> gen_activity_signal(ActivityLabel activity, double duration_s,
                                             const GaitParams &params, double rate_hz,
                                             std::uint64_t seed, std::int64_t t0_ms) {
  if (!(duration_s > 0.0) || !(rate_hz > 0.0))
    throw Error("signal duration and rate must be positive");
  params.validate();
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::int64_t>(std::llround(duration_s * rate_hz));
  std::vector<SensorFrame> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k)
    out.push_back(noisy_frame(params[activity], params.heading,
                              frame_time(t0_ms, k, rate_hz), rng));
  return out;
}

RouteScript RouteScript::defaults() {
  using enum ActivityLabel;
  RouteScript r;
  for (int lap = 0; lap < 2; ++lap)
    for (auto a : {Walking, Upstairs, Walking, Downstairs})
      r.segments.push_back({a, 22.5});
  return r;
}

double RouteScript::total_s() const {
  double s = 0.0;
  for (const auto &seg : segments)
    s += seg.duration_s;
  return s;
}

void RouteScript::validate() const {
  if (segments.empty())
    throw Error("route has no segments");
  for (const auto &seg : segments)
    if (!(seg.duration_s > 0.0))
      throw Error("route segment durations must be positive");
}

double DelayDistribution::mu() const {
  return median_ms > 0.0 ? std::log(median_ms) : -INFINITY;
}

double DelayDistribution::at(double z) const {
  if (median_ms <= 0.0)
    return 0.0;
  return median_ms * std::exp(sigma * z);
}

LabellerModel LabellerModel::ideal() {
  LabellerModel m;
  m.reaction = {0.0, 0.0};
  m.correction = {0.0, 0.0};
  m.mislabel_p = 0.0;
  m.dexterity.fill(1.0);
  return m;
}

void LabellerModel::validate() const {
  if (!(mislabel_p >= 0.0 && mislabel_p <= 1.0))
    throw Error("mislabel probability must be in [0,1]");
  for (const auto *d : {&reaction, &correction})
    if (d->median_ms < 0.0 || d->sigma < 0.0)
      throw Error("labeller delays must be non-negative");
  for (double x : dexterity)
    if (!(x > 0.0))
      throw Error("dexterity multipliers must be positive");
}

LabellerModel draw_labeller(const LabellerModel &base, std::uint64_t seed, int index) {
  std::mt19937_64 rng(mix_seed(seed, 1000 + static_cast<std::uint64_t>(index)));
  std::normal_distribution<double> normal(0.0, 1.0);
  LabellerModel m = base;
  m.reaction.median_ms *= std::exp(0.35 * normal(rng));
  m.correction.median_ms *= std::exp(0.35 * normal(rng));
  m.mislabel_p = std::clamp(base.mislabel_p * std::exp(0.5 * normal(rng)), 0.0, 0.5);
  for (double &x : m.dexterity)
    x *= std::exp(0.1 * normal(rng));
  return m;
}

SimulatedSession simulate_session(const RouteScript &route, MechanismId mechanism,
                                  const LabellerModel &labeller,
                                  const GaitParams &params, std::uint64_t seed,
                                  const SessionOptions &options) {
  route.validate();
  labeller.validate();
  params.validate();
  if (!(options.rate_hz > 0.0))
    throw Error("sample rate must be positive");

  SimulatedSession out;
  out.bundle.meta = {options.user_id, mechanism, options.rate_hz};

  // segment boundaries in ms
  std::vector<std::int64_t> seg_start;
  double cum = 0.0;
  for (const auto &seg : route.segments) {
    seg_start.push_back(to_ms(cum * 1000.0));
    cum += seg.duration_s;
  }
  const auto route_end = to_ms(cum * 1000.0);

  std::mt19937_64 signal_rng(mix_seed(seed, 1));
  std::vector<SensorFrame> frames;
  std::size_t seg = 0;
  for (std::int64_t k = 0;; ++k) {
    const auto t = frame_time(0, k, options.rate_hz);
    if (t >= route_end)
      break;
    while (seg + 1 < seg_start.size() && seg_start[seg + 1] <= t)
      ++seg;
    const auto activity = route.segments[seg].activity;
    frames.push_back(quantize(noisy_frame(params[activity], params.heading, t, signal_rng)));
    out.truth.push_back(activity);
  }

  std::mt19937_64 label_rng(mix_seed(seed, 2));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double dex = labeller.dexterity_for(mechanism);
  GestureWriter writer(mechanism, options.mechanism_config, dex, out.inputs);

  if (mechanism == MechanismId::App)
    out.inputs.push_back({0, InputKind::Start, 0});

  std::optional<std::int64_t> busy_until;
  std::optional<ActivityLabel> prev;
  for (std::size_t i = 0; i < route.segments.size(); ++i) {
    const auto activity = route.segments[i].activity;
    const double u_mislabel = unif(label_rng);
    const double z_reaction = normal(label_rng);
    const double z_correction = normal(label_rng);
    const double u_wrong = unif(label_rng);
    const auto wrong_draws = draw_gesture(label_rng);
    const auto right_draws = draw_gesture(label_rng);
    if (prev == activity)
      continue;
    prev = activity;

    auto start = seg_start[i] + to_ms(labeller.reaction.at(z_reaction) * dex);
    if (busy_until)
      start = std::max(start, *busy_until + 50);

    std::int64_t end = 0;
    if (u_mislabel < labeller.mislabel_p) {
      end = writer.perform(other_label(activity, u_wrong), start, wrong_draws);
      const auto fix = end + 50 + to_ms(labeller.correction.at(z_correction) * dex);
      end = writer.perform(activity, fix, right_draws);
    } else {
      end = writer.perform(activity, start, right_draws);
    }
    busy_until = end;
  }

  std::int64_t t_end = frames.empty() ? 0 : frames.back().t_ms;
  if (!out.inputs.empty())
    t_end = std::max(t_end, out.inputs.back().t_ms);
  if (mechanism == MechanismId::App)
    out.inputs.push_back({t_end + 1, InputKind::Stop, 0});

  out.bundle.events = replay(mechanism, options.mechanism_config, out.inputs, t_end + 1);
  out.bundle.samples = fuse(frames, out.bundle.events);
  return out;
}

double label_agreement(std::span<const LabelledSample> samples,
                       std::span<const ActivityLabel> truth) {
  if (samples.size() != truth.size())
    throw Error("label agreement needs one truth label per sample");
  if (samples.empty())
    return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    agree += samples[i].label == truth[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(samples.size());
}

std::vector<InputEvent> max_rate_script(MechanismId mechanism, double duration_s,
                                        std::int64_t cadence_ms,
                                        const MechanismConfig &config) {
  if (!(duration_s > 0.0) || cadence_ms <= 0)
    throw Error("max-rate script needs positive duration and cadence");
  using enum ActivityLabel;
  constexpr std::array<ActivityLabel, 4> cycle = {Downstairs, Walking, Upstairs, Walking};

  std::vector<InputEvent> out;
  GestureWriter writer(mechanism, config, 1.0, out);
  const auto limit = to_ms(duration_s * 1000.0);
  if (mechanism == MechanismId::App)
    out.push_back({0, InputKind::Start, 0});

  // a two-button gesture is only committed once the pairing window has passed
  const bool two_button =
    mechanism == MechanismId::TwoAdjacent || mechanism == MechanismId::TwoOpposite;
  const std::int64_t settle = two_button ? config.two_button.simultaneity_window_ms + 1 : 50;
  std::int64_t t = 0;
  for (std::size_t i = 0; t < limit; ++i) {
    const auto end = writer.perform(cycle[i % cycle.size()], t, GestureDraws{});
    t = std::max(t + cadence_ms, end + settle);
  }
  // drop the tail of a gesture that ran past the end of the run
  std::erase_if(out, [limit](const InputEvent &e) { return e.t_ms >= limit; });
  if (mechanism == MechanismId::App)
    out.push_back({limit - 1, InputKind::Stop, 0});
  return out;
}

void write_truth_csv(std::span<const LabelledSample> samples,
                     std::span<const ActivityLabel> truth, std::ostream &out) {
  if (samples.size() != truth.size())
    throw Error("truth sidecar needs one label per sample");
  out << "t_ms,true_label\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    out << samples[i].frame.t_ms << ',' << label_code(truth[i]) << '\n';
}

std::vector<std::pair<std::int64_t, ActivityLabel>> parse_truth_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != "t_ms,true_label")
    throw ParseError(1, "unexpected truth header");
  std::vector<std::pair<std::int64_t, ActivityLabel>> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::istringstream row(line);
    std::int64_t t = 0;
    char comma = 0;
    int code = 0;
    if (!(row >> t >> comma >> code) || comma != ',' || code < 0 || code >= kNumLabels)
      throw ParseError(lineno, "malformed truth row");
    out.emplace_back(t, static_cast<ActivityLabel>(code));
  }
  return out;
}

} // namespace insitu
