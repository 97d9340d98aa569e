// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/sim_config.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace insitu {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos)
      break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(line, "expected a number, got '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view s, std::size_t line) {
  if (s == "true" || s == "1")
    return true;
  if (s == "false" || s == "0")
    return false;
  throw ParseError(line, "expected true/false, got '" + std::string(s) + "'");
}

void set_gait(ActivityGait &g, std::string_view field, double v, std::size_t line) {
  if (field == "freq_hz")
    g.freq_hz = v;
  else if (field == "accel_amp")
    g.accel_amp = v;
  else if (field == "pitch_rate_amp")
    g.pitch_rate_amp = v;
  else if (field == "pitch_offset")
    g.pitch_offset = v;
  else if (field == "noise")
    g.noise_sigma.fill(v);
  else
    throw ParseError(line, "unknown gait field '" + std::string(field) + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

} // namespace

void SimulationConfig::validate() const {
  if (!(rate_hz > 0.0))
    throw Error("rate_hz must be positive");
  if (users < 1)
    throw Error("users must be at least 1");
  if (mechanisms.empty())
    throw Error("at least one mechanism is required");
  route.validate();
  gait.validate();
  labeller.validate();
}

LabellerModel SimulationConfig::labeller_for(int index) const {
  return population ? draw_labeller(labeller, seed, index) : labeller;
}

std::string SimulationConfig::user_id(int index) const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "user%02d", index);
  return buf;
}

std::uint64_t SimulationConfig::session_seed(MechanismId m, int index) const {
  return mix_seed(seed, 100 * (static_cast<std::uint64_t>(m) + 1) +
                          static_cast<std::uint64_t>(index));
}

SimulationConfig parse_sim_config(std::istream &in) {
  SimulationConfig cfg;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(lineno, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));

    try {
      if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_double(value, lineno));
      } else if (key == "rate_hz") {
        cfg.rate_hz = to_double(value, lineno);
      } else if (key == "users") {
        cfg.users = static_cast<int>(to_double(value, lineno));
      } else if (key == "mechanisms") {
        cfg.mechanisms.clear();
        for (auto name : split_list(value))
          cfg.mechanisms.push_back(parse_mechanism(name));
      } else if (key == "route") {
        cfg.route.segments.clear();
        for (auto item : split_list(value)) {
          const auto colon = item.find(':');
          if (colon == std::string_view::npos)
            throw ParseError(lineno, "route items are activity:seconds");
          cfg.route.segments.push_back(
            {parse_label_name(trim(item.substr(0, colon))),
             to_double(trim(item.substr(colon + 1)), lineno)});
        }
      } else if (key == "noise") {
        cfg.gait.set_noise(to_double(value, lineno));
      } else if (key.starts_with("gait.")) {
        auto rest = key.substr(5);
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos)
          throw ParseError(lineno, "expected gait.<activity>.<field>");
        set_gait(cfg.gait[parse_label_name(rest.substr(0, dot))], rest.substr(dot + 1),
                 to_double(value, lineno), lineno);
      } else if (key == "labeller.reaction_median_ms") {
        cfg.labeller.reaction.median_ms = to_double(value, lineno);
      } else if (key == "labeller.reaction_sigma") {
        cfg.labeller.reaction.sigma = to_double(value, lineno);
      } else if (key == "labeller.mislabel_p") {
        cfg.labeller.mislabel_p = to_double(value, lineno);
      } else if (key == "labeller.correction_median_ms") {
        cfg.labeller.correction.median_ms = to_double(value, lineno);
      } else if (key == "labeller.correction_sigma") {
        cfg.labeller.correction.sigma = to_double(value, lineno);
      } else if (key.starts_with("labeller.dexterity.")) {
        const auto m = parse_mechanism(key.substr(19));
        cfg.labeller.dexterity[static_cast<std::size_t>(m)] = to_double(value, lineno);
      } else if (key == "labeller.population") {
        cfg.population = to_bool(value, lineno);
      } else {
        throw ParseError(lineno, "unknown key '" + std::string(key) + "'");
      }
    } catch (const ParseError &) {
      throw;
    } catch (const Error &e) {
      throw ParseError(lineno, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SimulationConfig load_sim_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open simulation config " + path.string());
  return parse_sim_config(in);
}

void write_sim_config(const SimulationConfig &cfg, std::ostream &out) {
  out << "seed = " << cfg.seed << '\n';
  out << "rate_hz = " << fmt(cfg.rate_hz) << '\n';
  out << "users = " << cfg.users << '\n';
  out << "mechanisms = ";
  for (std::size_t i = 0; i < cfg.mechanisms.size(); ++i)
    out << (i ? ", " : "") << mechanism_name(cfg.mechanisms[i]);
  out << "\nroute = ";
  for (std::size_t i = 0; i < cfg.route.segments.size(); ++i)
    out << (i ? ", " : "") << label_name(cfg.route.segments[i].activity) << ':'
        << fmt(cfg.route.segments[i].duration_s);
  out << '\n';
  for (auto l : kAllLabels) {
    const auto &g = cfg.gait[l];
    const std::string p = "gait." + std::string(label_name(l)) + ".";
    out << p << "freq_hz = " << fmt(g.freq_hz) << '\n'
        << p << "accel_amp = " << fmt(g.accel_amp) << '\n'
        << p << "pitch_rate_amp = " << fmt(g.pitch_rate_amp) << '\n'
        << p << "pitch_offset = " << fmt(g.pitch_offset) << '\n'
        << p << "noise = " << fmt(g.noise_sigma[0]) << '\n';
  }
  const auto &lb = cfg.labeller;
  out << "labeller.reaction_median_ms = " << fmt(lb.reaction.median_ms) << '\n'
      << "labeller.reaction_sigma = " << fmt(lb.reaction.sigma) << '\n'
      << "labeller.mislabel_p = " << fmt(lb.mislabel_p) << '\n'
      << "labeller.correction_median_ms = " << fmt(lb.correction.median_ms) << '\n'
      << "labeller.correction_sigma = " << fmt(lb.correction.sigma) << '\n';
  for (auto m : kAllMechanisms)
    out << "labeller.dexterity." << mechanism_name(m) << " = "
        << fmt(lb.dexterity_for(m)) << '\n';
  out << "labeller.population = " << (cfg.population ? "true" : "false") << '\n';
}

} // namespace insitu
