// SPDX-License-Identifier: Apache-2.0
// Command-line front end: simulate, ingest, windows, train, evaluate,
// compare, rates, serve, report.
#include <insitu/error.hpp>
#include <insitu/pipeline.hpp>
#include <insitu/rnn/checkpoint.hpp>
#include <insitu/server.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace insitu;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
};

RunConfig run_config(const Globals &g) {
  RunConfig rc = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) {
    rc.simulation.seed = *g.seed;
    rc.pipeline.train.seed = *g.seed;
  }
  return rc;
}

/// A dataset root, one mechanism directory or one CSV file.
std::vector<Window> load_windows(const fs::path &data, const WindowConfig &wc) {
  if (fs::is_regular_file(data)) {
    const auto b = load_stream(data);
    return make_windows(b, wc);
  }
  auto mechs = mechanisms_in(data);
  std::vector<StreamBundle> bundles;
  if (mechs.empty()) {
    const auto name = data.filename().string();
    MechanismId m = MechanismId::ThreeButtons;
    for (auto id : kAllMechanisms)
      if (mechanism_name(id) == name)
        m = id;
    bundles = load_mechanism_dir(data, m);
  } else {
    for (auto m : mechs) {
      auto b = load_mechanism_dir(data / std::string(mechanism_name(m)), m);
      bundles.insert(bundles.end(), b.begin(), b.end());
    }
  }
  return windows_from(bundles, wc);
}

void write_file(const fs::path &path, const std::string &body) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out)
    throw Error("failed to write " + path.string());
}

std::string history_csv(const rnn::TrainHistory &h) {
  std::string s = "fold,epoch,loss,accuracy,test_accuracy\n";
  for (const auto &f : h.folds)
    for (std::size_t e = 0; e < f.epochs.size(); ++e)
      s += std::to_string(f.fold) + ',' + std::to_string(e + 1) + ',' +
           format_fixed(f.epochs[e].loss, 6) + ',' + format_fixed(f.epochs[e].accuracy, 6) +
           ',' + format_fixed(f.test_accuracy, 6) + '\n';
  return s;
}

void print_counts(const std::vector<Window> &windows) {
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto &w : windows)
    ++counts[static_cast<std::size_t>(label_code(w.label))];
  std::cout << windows.size() << " windows";
  for (auto l : kAllLabels)
    std::cout << "  " << label_name(l) << '=' << counts[static_cast<std::size_t>(label_code(l))];
  std::cout << '\n';
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"insitu: labelling mechanisms, simulation, RNN training and comparison"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config file)");
  app.add_option("--config", g.config, "Run configuration file (key = value)")
    ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output file or directory");

  // simulate
  auto *sim = app.add_subcommand("simulate", "Simulate labelled sessions into a dataset dir");
  std::vector<std::string> sim_mechs;
  int sim_users = 0;
  sim->add_option("--mechanisms", sim_mechs, "Mechanisms to simulate")->delimiter(',');
  sim->add_option("--users", sim_users, "Number of simulated users");

  // ingest
  auto *ingest = app.add_subcommand("ingest", "Validate a CSV stream and write it canonically");
  std::string ingest_in;
  double resample = 0.0;
  ingest->add_option("input", ingest_in, "CSV file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--resample", resample, "Zero-order-hold resample to this rate (Hz)");

  // windows
  auto *win = app.add_subcommand("windows", "Cut labelled windows and write them as JSONL");
  std::string win_data;
  win->add_option("--data", win_data, "Dataset root, mechanism dir or CSV")->required();

  // train
  auto *train = app.add_subcommand("train", "Cross-validated training of one model");
  std::string train_data, train_model = "gru";
  train->add_option("--data", train_data, "Dataset root, mechanism dir or CSV")->required();
  train->add_option("--model", train_model, "gru, lstm or stacked");

  // evaluate
  auto *eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  std::string eval_ckpt, eval_data;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Dataset root, mechanism dir or CSV")->required();

  // compare
  auto *cmp = app.add_subcommand("compare", "Train every model per mechanism and compare");
  std::string cmp_data;
  cmp->add_option("--data", cmp_data, "Dataset root with one dir per mechanism")->required();

  // rates
  auto *rates = app.add_subcommand("rates", "Labelling-rate tables");
  std::string rates_data;
  bool stress = false;
  double stress_s = 120.0;
  std::int64_t cadence = 50;
  std::string rates_csv_path;
  rates->add_option("--data", rates_data, "Dataset root, mechanism dir or CSV");
  rates->add_flag("--stress", stress, "Scripted maximum-rate input for every mechanism");
  rates->add_option("--duration", stress_s, "Stress duration in seconds");
  rates->add_option("--cadence", cadence, "Stress gesture cadence in ms");
  rates->add_option("--csv", rates_csv_path, "Also write the table as CSV");

  // serve
  auto *serve = app.add_subcommand("serve", "Live labelling server (line-delimited JSON)");
  ServerOptions sopts;
  int sessions = 1;
  serve->add_option("--host", sopts.host, "Listen address");
  serve->add_option("--port", sopts.port, "Listen port (0 picks one)");
  serve->add_option("--sessions", sessions, "Connections to serve before exiting (0 = forever)");

  // report
  auto *rep = app.add_subcommand("report", "Render the text report from results.json");
  std::string rep_dir;
  rep->add_option("--results", rep_dir, "Directory holding results.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig rc = run_config(g);
    const auto &pc = rc.pipeline;
    const fs::path out = g.out;

    if (*sim) {
      auto cfg = rc.simulation;
      if (!sim_mechs.empty()) {
        cfg.mechanisms.clear();
        for (const auto &m : sim_mechs)
          cfg.mechanisms.push_back(parse_mechanism(m));
      }
      if (sim_users > 0)
        cfg.users = sim_users;
      const auto files = simulate_dataset(cfg, out);
      std::cout << "wrote " << files.size() << " sessions under " << out.string() << '\n';
    } else if (*ingest) {
      auto b = load_stream(ingest_in);
      if (resample > 0.0) {
        std::vector<SensorFrame> frames;
        for (const auto &s : b.samples)
          frames.push_back(s.frame);
        const auto grid = resample_hold(frames, resample);
        b.samples = fuse(grid, b.events);
        b.meta.sample_rate_hz = resample;
      }
      std::size_t unlabelled = 0;
      for (const auto &s : b.samples)
        unlabelled += !s.label.has_value();
      const fs::path target = fs::is_directory(out) ? out / fs::path(ingest_in).filename() : out;
      write_file(target, emit_csv(b));
      std::cout << b.samples.size() << " samples, " << b.events.size() << " label changes, "
                << unlabelled << " unlabelled -> " << target.string() << '\n';
    } else if (*win) {
      const auto windows = load_windows(win_data, pc.window);
      fs::create_directories(out);
      std::ofstream f(out / "windows.jsonl", std::ios::binary);
      write_windows_jsonl(windows, f);
      print_counts(windows);
    } else if (*train) {
      const auto windows = load_windows(train_data, pc.window);
      print_counts(windows);
      const auto spec = rnn::ModelSpec::named(
        train_model, pc.specs.empty() ? 64 : pc.specs.front().hidden);
      const auto result = rnn::train(windows, spec, pc.train);
      fs::create_directories(out);
      for (std::size_t k = 0; k < result.models.size(); ++k) {
        if (result.history.folds[k].diverged())
          continue;
        char name[32];
        std::snprintf(name, sizeof name, "fold_%02zu.ckpt", k);
        rnn::save_checkpoint({result.models[k].model, result.models[k].norm,
                              pc.train.fingerprint()},
                             out / name);
      }
      write_file(out / "history.csv", history_csv(result.history));
      for (const auto &f : result.history.folds)
        if (f.diverged())
          std::cerr << f.error << '\n';
      std::cout << spec.name << " accuracy " << format_fixed(result.history.mean_accuracy(), 4)
                << " +/- " << format_fixed(result.history.std_accuracy(), 4) << '\n';
    } else if (*eval) {
      const auto ck = rnn::load_checkpoint(eval_ckpt);
      const auto windows = load_windows(eval_data, pc.window);
      const auto ev = rnn::evaluate(ck.model, windows, ck.norm);
      std::vector<int> truth;
      for (const auto &w : windows)
        truth.push_back(label_code(w.label));
      const auto cm = confusion(ev.predictions, truth);
      std::cout << "accuracy " << format_fixed(ev.accuracy, 4) << " on " << windows.size()
                << " windows\nconfusion (rows truth, cols prediction)\n";
      for (const auto &row : cm.counts) {
        for (auto v : row)
          std::cout << ' ' << v;
        std::cout << '\n';
      }
    } else if (*cmp) {
      const auto report = cmd_compare(fs::path(cmp_data), pc);
      write_report(report, out);
      std::cout << render_report(report);
    } else if (*rates) {
      std::vector<RateRow> rows;
      if (stress) {
        const std::vector<MechanismId> all(kAllMechanisms.begin(), kAllMechanisms.end());
        rows = stress_rates(all, stress_s, cadence);
      } else if (!rates_data.empty()) {
        rows = cmd_rates(rates_data);
      } else {
        throw Error("rates needs --data or --stress");
      }
      std::cout << render_rates_table(rows);
      if (!rates_csv_path.empty())
        write_file(rates_csv_path, rates_csv(rows));
    } else if (*serve) {
      sopts.output = out.extension() == ".csv" ? out : out / "session.csv";
      if (!out.has_extension())
        fs::create_directories(out);
      sopts.seed = rc.simulation.seed;
      sopts.gait = rc.simulation.gait;
      sopts.rate_hz = rc.simulation.rate_hz;
      Server server(sopts);
      std::cout << "listening on " << sopts.host << ':' << server.port() << std::endl;
      for (int n = 0; sessions == 0 || n < sessions; ++n) {
        const auto summary = server.serve_one();
        for (const auto &p : summary.written)
          std::cout << "wrote " << p.string() << '\n';
        std::cout << "connection closed after " << summary.messages << " messages, "
                  << summary.errors.size() << " errors" << std::endl;
      }
    } else if (*rep) {
      const auto report = load_results(rep_dir);
      std::cout << render_report(report);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
