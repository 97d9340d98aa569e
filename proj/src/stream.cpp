// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/stream.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace insitu {

namespace {

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
  "downstairs", "walking", "upstairs"};

constexpr std::array<std::string_view, 6> kMechanismNames = {
  "two_adjacent", "two_opposite", "three_buttons", "touch", "slider", "app"};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T> bool parse_number(std::string_view s, T &out) {
  if (s.empty())
    return false;
  const char *first = s.data();
  if (*first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void append_double(std::string &out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, kCsvDigits);
  out.append(buf, ptr);
}

} // namespace

MaybeLabel label_from_code(int code) {
  if (code == kUnlabelled)
    return std::nullopt;
  return activity_from_code(code);
}

ActivityLabel activity_from_code(int code) {
  if (code < 0 || code >= kNumLabels)
    throw Error("invalid activity label code " + std::to_string(code));
  return static_cast<ActivityLabel>(code);
}

std::string_view label_name(ActivityLabel l) {
  return kLabelNames[static_cast<std::size_t>(l)];
}

ActivityLabel parse_label_name(std::string_view name) {
  for (int i = 0; i < kNumLabels; ++i)
    if (kLabelNames[i] == name)
      return static_cast<ActivityLabel>(i);
  throw Error("unknown activity label '" + std::string(name) + "'");
}

std::string_view mechanism_name(MechanismId m) {
  return kMechanismNames[static_cast<std::size_t>(m)];
}

MechanismId parse_mechanism(std::string_view name) {
  for (std::size_t i = 0; i < kMechanismNames.size(); ++i)
    if (kMechanismNames[i] == name)
      return static_cast<MechanismId>(i);
  throw Error("unknown mechanism '" + std::string(name) + "'");
}

std::array<double, kNumChannels> SensorFrame::channels() const {
  return {accel[0], accel[1], accel[2], gyro[0], gyro[1],
          gyro[2],  mag[0],   mag[1],   mag[2]};
}

SensorFrame SensorFrame::from_channels(std::int64_t t,
                                       std::span<const double, kNumChannels> v) {
  SensorFrame f;
  f.t_ms = t;
  f.accel = {v[0], v[1], v[2]};
  f.gyro = {v[3], v[4], v[5]};
  f.mag = {v[6], v[7], v[8]};
  return f;
}

void StreamBundle::validate() const {
  if (meta.user_id.empty())
    throw Error("stream bundle has an empty user id");
  if (!(meta.sample_rate_hz > 0.0))
    throw Error("stream bundle sample rate must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto &f = samples[i].frame;
    if (f.t_ms < 0)
      throw Error("negative timestamp at sample " + std::to_string(i));
    if (i > 0 && f.t_ms <= samples[i - 1].frame.t_ms)
      throw Error("non-monotone timestamp at sample " + std::to_string(i));
    for (double v : f.channels())
      if (!std::isfinite(v))
        throw Error("non-finite sensor value at sample " + std::to_string(i));
  }
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].t_ms < events[i - 1].t_ms)
      throw Error("label events out of order at event " + std::to_string(i));
}

double quantize(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, kCsvDigits);
  double out = 0.0;
  std::from_chars(buf, ptr, out);
  return out;
}

SensorFrame quantize(const SensorFrame &f) {
  SensorFrame q = f;
  for (auto *v : {&q.accel, &q.gyro, &q.mag})
    for (double &x : *v)
      x = quantize(x);
  return q;
}

StreamBundle parse_csv(std::istream &in, const StreamMeta &meta) {
  StreamBundle bundle;
  bundle.meta = meta;

  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line))
    throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != kCsvHeader)
    throw ParseError(1, "unexpected header '" + line + "'");

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;

    auto fields = split_fields(line);
    if (fields.size() != 11)
      throw ParseError(lineno, "expected 11 fields, got " +
                                 std::to_string(fields.size()));

    std::int64_t t = 0;
    if (!parse_number(fields[0], t) || t < 0)
      throw ParseError(lineno, "invalid timestamp '" + std::string(fields[0]) + "'");
    if (!bundle.samples.empty() && t <= bundle.samples.back().frame.t_ms)
      throw ParseError(lineno, "non-monotone timestamp");

    std::array<double, kNumChannels> v{};
    for (int c = 0; c < kNumChannels; ++c) {
      if (!parse_number(fields[c + 1], v[c]) || !std::isfinite(v[c]))
        throw ParseError(lineno, "non-numeric value '" +
                                   std::string(fields[c + 1]) + "'");
    }

    int code = 0;
    if (!parse_number(fields[10], code) || code < kUnlabelled || code >= kNumLabels)
      throw ParseError(lineno, "label outside {-1,0,1,2}");

    bundle.samples.push_back(
      {SensorFrame::from_channels(t, v), label_from_code(code)});
  }

  bundle.events = change_points(bundle.samples, meta.mechanism);
  return bundle;
}

StreamBundle parse_csv(std::string_view text, const StreamMeta &meta) {
  std::istringstream in{std::string(text)};
  return parse_csv(in, meta);
}

void emit_csv(const StreamBundle &bundle, std::ostream &out) {
  std::string row;
  out << kCsvHeader << '\n';
  for (const auto &s : bundle.samples) {
    row.clear();
    row += std::to_string(s.frame.t_ms);
    for (double v : s.frame.channels()) {
      row += ',';
      append_double(row, v);
    }
    row += ',';
    row += std::to_string(label_code(s.label));
    row += '\n';
    out << row;
  }
}

std::string emit_csv(const StreamBundle &bundle) {
  std::ostringstream out;
  emit_csv(bundle, out);
  return out.str();
}

std::vector<SensorFrame> resample_hold(std::span<const SensorFrame> frames,
                                       double target_rate_hz) {
  if (!(target_rate_hz > 0.0))
    throw Error("resample target rate must be positive");
  if (frames.empty())
    throw Error("cannot resample an empty stream");

  const double period = 1000.0 / target_rate_hz;
  const std::int64_t t0 = frames.front().t_ms;
  const std::int64_t t_end = frames.back().t_ms;

  std::vector<SensorFrame> out;
  std::size_t src = 0;
  for (std::int64_t k = 0;; ++k) {
    const std::int64_t t = t0 + std::llround(static_cast<double>(k) * period);
    if (t > t_end)
      break;
    while (src + 1 < frames.size() && frames[src + 1].t_ms <= t)
      ++src;
    SensorFrame f = frames[src];
    f.t_ms = t;
    out.push_back(f);
  }
  return out;
}

std::vector<LabelledSample> fuse(std::span<const SensorFrame> frames,
                                 std::span<const LabelEvent> events) {
  std::vector<LabelledSample> out;
  out.reserve(frames.size());
  std::size_t next = 0;
  MaybeLabel current;
  for (const auto &f : frames) {
    while (next < events.size() && events[next].t_ms <= f.t_ms)
      current = events[next++].label;
    out.push_back({f, current});
  }
  return out;
}

std::vector<LabelEvent> change_points(std::span<const LabelledSample> samples,
                                      MechanismId mechanism) {
  std::vector<LabelEvent> out;
  MaybeLabel prev;
  for (const auto &s : samples) {
    if (s.label && s.label != prev)
      out.push_back({s.frame.t_ms, *s.label, mechanism});
    prev = s.label;
  }
  return out;
}

} // namespace insitu
