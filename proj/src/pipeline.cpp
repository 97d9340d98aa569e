// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/pipeline.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace insitu {

namespace fs = std::filesystem;

namespace {

bool is_truth_file(const fs::path &p) {
  const auto name = p.filename().string();
  return name.size() > 10 && name.ends_with(".truth.csv");
}

std::vector<fs::path> stream_files(const fs::path &dir) {
  std::vector<fs::path> out;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv" && !is_truth_file(e.path()))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<MechanismId> try_mechanism(const std::string &name) {
  for (auto m : kAllMechanisms)
    if (mechanism_name(m) == name)
      return m;
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double number(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(line, "expected a number, got '" + std::string(s) + "'");
  return v;
}

bool is_pipeline_key(std::string_view key) {
  return key.starts_with("window.") || key.starts_with("train.") || key == "models" ||
         key == "hidden" || key == "alpha";
}

} // namespace

RunConfig parse_run_config(std::istream &in) {
  RunConfig rc;
  std::ostringstream sim_lines;
  std::vector<std::string> model_names;
  int hidden = 64;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    const auto eq = line.find('=');
    const auto key = eq == std::string_view::npos ? line : trim(line.substr(0, eq));
    if (!is_pipeline_key(key)) {
      sim_lines << raw << '\n'; // keeps line numbers aligned for error messages
      continue;
    }
    sim_lines << '\n';
    if (eq == std::string_view::npos)
      throw ParseError(lineno, "expected key = value");
    const auto value = trim(line.substr(eq + 1));
    auto &p = rc.pipeline;
    try {
      if (key == "window.length")
        p.window.length = static_cast<int>(number(value, lineno));
      else if (key == "window.overlap")
        p.window.overlap = number(value, lineno);
      else if (key == "window.overlap_mode") {
        if (value == "samples")
          p.window.overlap_mode = OverlapMode::Samples;
        else if (value == "percent")
          p.window.overlap_mode = OverlapMode::Percent;
        else
          throw ParseError(lineno, "overlap_mode is samples or percent");
      } else if (key == "window.purity_min")
        p.window.purity_min = number(value, lineno);
      else if (key == "train.learning_rate")
        p.train.learning_rate = number(value, lineno);
      else if (key == "train.batch_size")
        p.train.batch_size = static_cast<int>(number(value, lineno));
      else if (key == "train.epochs")
        p.train.epochs = static_cast<int>(number(value, lineno));
      else if (key == "train.folds")
        p.train.folds = static_cast<int>(number(value, lineno));
      else if (key == "train.seed")
        p.train.seed = static_cast<std::uint64_t>(number(value, lineno));
      else if (key == "train.optimizer")
        p.train.optimizer = rnn::parse_optimizer(value);
      else if (key == "train.clip_norm")
        p.train.clip_norm = number(value, lineno);
      else if (key == "train.lr_decay")
        p.train.lr_decay = number(value, lineno);
      else if (key == "models") {
        model_names.clear();
        std::string_view rest = value;
        while (!rest.empty()) {
          const auto comma = rest.find(',');
          model_names.emplace_back(trim(rest.substr(0, comma)));
          if (comma == std::string_view::npos)
            break;
          rest.remove_prefix(comma + 1);
        }
      } else if (key == "hidden")
        hidden = static_cast<int>(number(value, lineno));
      else if (key == "alpha")
        p.alpha = number(value, lineno);
      else
        throw ParseError(lineno, "unknown key '" + std::string(key) + "'");
    } catch (const ParseError &) {
      throw;
    } catch (const Error &e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (model_names.empty())
    model_names = {"gru", "lstm", "stacked"};
  rc.pipeline.specs.clear();
  for (const auto &n : model_names)
    rc.pipeline.specs.push_back(rnn::ModelSpec::named(n, hidden));
  std::istringstream sim_in(sim_lines.str());
  rc.simulation = parse_sim_config(sim_in);
  rc.pipeline.validate();
  return rc;
}

RunConfig load_run_config(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open config " + path.string());
  return parse_run_config(in);
}

void PipelineConfig::validate() const {
  window.validate();
  train.validate();
  if (specs.empty())
    throw Error("pipeline needs at least one model spec");
  for (const auto &s : specs)
    s.validate();
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error("alpha must lie in (0, 1)");
}

std::vector<SimulatedSession> simulate_mechanism(const SimulationConfig &cfg,
                                                 MechanismId mechanism) {
  cfg.validate();
  std::vector<SimulatedSession> out;
  for (int u = 0; u < cfg.users; ++u) {
    SessionOptions opts;
    opts.rate_hz = cfg.rate_hz;
    opts.user_id = cfg.user_id(u);
    out.push_back(simulate_session(cfg.route, mechanism, cfg.labeller_for(u), cfg.gait,
                                   cfg.session_seed(mechanism, u), opts));
  }
  return out;
}

std::vector<fs::path> simulate_dataset(const SimulationConfig &cfg, const fs::path &out) {
  std::vector<fs::path> written;
  for (auto m : cfg.mechanisms) {
    const auto dir = out / std::string(mechanism_name(m));
    fs::create_directories(dir);
    for (const auto &s : simulate_mechanism(cfg, m)) {
      const auto csv = dir / (s.bundle.meta.user_id + ".csv");
      std::ofstream f(csv, std::ios::binary);
      emit_csv(s.bundle, f);
      std::ofstream t(dir / (s.bundle.meta.user_id + ".truth.csv"), std::ios::binary);
      write_truth_csv(s.bundle.samples, s.truth, t);
      if (!f || !t)
        throw Error("failed to write " + csv.string());
      written.push_back(csv);
    }
  }
  std::ofstream c(out / "simulation.cfg", std::ios::binary);
  write_sim_config(cfg, c);
  return written;
}

StreamBundle load_stream(const fs::path &csv, double rate_hz) {
  std::ifstream in(csv, std::ios::binary);
  if (!in)
    throw Error("cannot open " + csv.string());
  StreamMeta meta;
  meta.user_id = csv.stem().string();
  meta.sample_rate_hz = rate_hz;
  if (auto m = try_mechanism(csv.parent_path().filename().string()))
    meta.mechanism = *m;
  try {
    return parse_csv(in, meta);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), csv.string() + ": " + e.what());
  }
}

std::vector<StreamBundle> load_mechanism_dir(const fs::path &dir, MechanismId mechanism,
                                             double rate_hz) {
  if (!fs::is_directory(dir))
    throw Error("no dataset directory " + dir.string());
  std::vector<StreamBundle> out;
  for (const auto &p : stream_files(dir)) {
    auto b = load_stream(p, rate_hz);
    b.meta.mechanism = mechanism;
    out.push_back(std::move(b));
  }
  if (out.empty())
    throw Error("no CSV streams in " + dir.string());
  return out;
}

std::vector<MechanismId> mechanisms_in(const fs::path &root) {
  std::vector<MechanismId> out;
  for (auto m : kAllMechanisms)
    if (fs::is_directory(root / std::string(mechanism_name(m))))
      out.push_back(m);
  return out;
}

std::vector<Window> windows_from(std::span<const StreamBundle> bundles,
                                 const WindowConfig &config) {
  std::vector<Window> out;
  for (const auto &b : bundles) {
    auto w = make_windows(b, config);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

ComparisonReport cmd_compare(const std::vector<MechanismWindows> &datasets,
                             const PipelineConfig &config) {
  config.validate();
  if (config.specs.size() < 2)
    throw Error("compare needs at least two model specs");
  if (datasets.empty())
    throw Error("compare needs at least one mechanism dataset");

  ComparisonReport report;
  report.alpha = config.alpha;
  for (const auto &s : config.specs)
    report.models.push_back(s.name);

  for (const auto &[mech, windows] : datasets) {
    const auto plan = stratified_kfold(windows, config.train.folds, config.train.seed);
    std::vector<int> truth;
    for (const auto &w : windows)
      truth.push_back(label_code(w.label));
    std::vector<ModelRun> runs;
    for (const auto &spec : config.specs)
      runs.push_back({spec.name, rnn::train(windows, spec, config.train, plan).history});
    report.mechanisms.push_back(compare_runs(mech, std::move(truth), std::move(runs)));
  }
  finalize_report(report);
  return report;
}

ComparisonReport cmd_compare(const fs::path &root, const PipelineConfig &config) {
  std::vector<MechanismWindows> datasets;
  for (auto m : mechanisms_in(root)) {
    const auto bundles = load_mechanism_dir(root / std::string(mechanism_name(m)), m);
    datasets.emplace_back(m, windows_from(bundles, config.window));
  }
  if (datasets.empty())
    throw Error("no mechanism directories under " + root.string());
  return cmd_compare(datasets, config);
}

std::vector<RateRow> cmd_rates(const fs::path &path) {
  auto stats_for = [](std::span<const StreamBundle> bundles) {
    double duration_s = 0.0;
    // sessions are concatenated: counts add, changes are counted per session
    LabelStats total;
    for (const auto &b : bundles) {
      if (b.samples.size() < 2)
        continue;
      const double d = static_cast<double>(b.samples.back().frame.t_ms -
                                           b.samples.front().frame.t_ms) / 1000.0;
      const auto s = analyze_labels(b.events, d);
      for (std::size_t k = 0; k < kNumLabels; ++k)
        total.counts[k] += s.counts[k];
      total.total += s.total;
      total.changes += s.changes;
      duration_s += d;
    }
    total.duration_s = duration_s;
    if (duration_s > 0.0) {
      const double mins = duration_s / 60.0;
      total.rate_per_min = static_cast<double>(total.total) / mins;
      total.change_rate_per_min = static_cast<double>(total.changes) / mins;
      for (std::size_t k = 0; k < kNumLabels; ++k)
        total.label_rate_per_min[k] = static_cast<double>(total.counts[k]) / mins;
    }
    return total;
  };

  std::vector<RateRow> rows;
  if (fs::is_regular_file(path)) {
    const auto b = load_stream(path);
    rows.emplace_back(std::string(mechanism_name(b.meta.mechanism)),
                      stats_for(std::span(&b, 1)));
    return rows;
  }
  auto mechs = mechanisms_in(path);
  if (mechs.empty()) {
    // a single mechanism directory
    auto m = try_mechanism(path.filename().string()).value_or(MechanismId::ThreeButtons);
    const auto bundles = load_mechanism_dir(path, m);
    rows.emplace_back(std::string(mechanism_name(m)), stats_for(bundles));
    return rows;
  }
  for (auto m : mechs) {
    const auto bundles = load_mechanism_dir(path / std::string(mechanism_name(m)), m);
    rows.emplace_back(std::string(mechanism_name(m)), stats_for(bundles));
  }
  return rows;
}

std::vector<RateRow> stress_rates(std::span<const MechanismId> mechanisms, double duration_s,
                                  std::int64_t cadence_ms, const MechanismConfig &config) {
  std::vector<RateRow> rows;
  const auto t_end = static_cast<std::int64_t>(duration_s * 1000.0);
  for (auto m : mechanisms) {
    const auto inputs = max_rate_script(m, duration_s, cadence_ms, config);
    const auto events = replay(m, config, inputs, t_end);
    rows.emplace_back(std::string(mechanism_name(m)), analyze_labels(events, duration_s));
  }
  return rows;
}

} // namespace insitu
