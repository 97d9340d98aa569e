// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. `--only <name>` runs a subset.

#include "../support/fuzz.hpp"
#include "../support/gradcheck.hpp"
#include "../support/oracles.hpp"

#include <insitu/dataset.hpp>
#include <insitu/golden.hpp>
#include <insitu/mechanisms.hpp>
#include <insitu/pipeline.hpp>
#include <insitu/report.hpp>
#include <insitu/rnn/train.hpp>
#include <insitu/stats.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace insitu;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      if (!detail.empty())
        detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Window> simulated_windows(const SimulationConfig &sim, const WindowConfig &wc) {
  std::vector<StreamBundle> bundles;
  for (auto m : sim.mechanisms)
    for (auto &s : simulate_mechanism(sim, m))
      bundles.push_back(std::move(s.bundle));
  return windows_from(bundles, wc);
}

Outcome gradient_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const char *cell : {"gru", "lstm", "stacked"}) {
    auto spec = rnn::ModelSpec::named(cell, 8);
    spec.norm_inputs = true;
    spec.norm_head = true;
    const auto r = insitu::testing::check_model_gradients(spec, 20, 4, 31);
    o.require(r.max_rel < 1e-4, std::string(cell) + " rel " + fmt("%.2e", r.max_rel) +
                                  " at " + r.worst);
    worst = std::max(worst, r.max_rel);
  }
  const auto bn = insitu::testing::check_batchnorm_gradients(3);
  o.require(bn.max_rel < 1e-4, "batchnorm rel " + fmt("%.2e", bn.max_rel));
  worst = std::max(worst, bn.max_rel);
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "took " + fmt("%.1f", secs) + " s");
  if (o.pass)
    o.detail = "max rel " + fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + " s";
  return o;
}

Outcome statistics_oracles() {
  Outcome o;
  const auto q = cochran_q(insitu::testing::cochran_fixture());
  o.require(std::abs(q.statistic - 3.0) < 1e-12, "Q = " + fmt("%.15g", q.statistic));
  o.require(std::abs(q.p - std::exp(-1.5)) <= 1e-6, "Q p = " + fmt("%.15g", q.p));

  const double mc = mcnemar_exact_p(5, 1);
  o.require(mc == 0.21875, "McNemar(5,1) = " + fmt("%.17g", mc));

  double chi_err = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double x = 0.01 * k;
    chi_err = std::max(chi_err, std::abs(chi2_sf(x, 2.0) - std::exp(-x / 2.0)));
  }
  o.require(chi_err <= 1e-12, "chi2_sf error " + fmt("%.2e", chi_err));

  double f_err = 0.0;
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + trial % 50, l = 2 + trial % 4;
    std::vector<std::vector<int>> rows(n, std::vector<int>(l));
    for (auto &r : rows)
      for (auto &x : r)
        x = coin(rng) ? 1 : 0;
    const auto m = CorrectnessMatrix::from_rows(rows);
    const auto r = rm_anova_f(m);
    if (r.degenerate)
      continue;
    const auto want = insitu::testing::two_pass_anova(m);
    f_err = std::max({f_err, std::abs(r.statistic - want.f), std::abs(r.p - want.p)});
  }
  const auto fx = rm_anova_f(insitu::testing::cochran_fixture());
  const auto fw = insitu::testing::two_pass_anova(insitu::testing::cochran_fixture());
  f_err = std::max({f_err, std::abs(fx.statistic - fw.f), std::abs(fx.p - fw.p)});
  o.require(f_err <= 1e-10, "ANOVA oracle error " + fmt("%.2e", f_err));
  if (o.pass)
    o.detail = "Q 3, p e^-1.5, McNemar 0.21875, chi2 err " + fmt("%.1e", chi_err) +
               ", ANOVA err " + fmt("%.1e", f_err);
  return o;
}

std::vector<LabelledSample> constant_stream(std::size_t n) {
  std::vector<LabelledSample> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].frame.t_ms = static_cast<std::int64_t>(i) * 20;
    s[i].label = ActivityLabel::Walking;
  }
  return s;
}

Outcome windowing() {
  Outcome o;
  WindowConfig cfg;
  cfg.length = 100;
  cfg.overlap = 20;
  const auto w = make_windows(constant_stream(1000), cfg);
  o.require(w.size() == 12, "got " + std::to_string(w.size()) + " windows");
  for (std::size_t i = 0; i < w.size(); ++i)
    o.require(w[i].start_t_ms == static_cast<std::int64_t>(80 * i) * 20,
              "window " + std::to_string(i) + " starts at " + std::to_string(w[i].start_t_ms));

  std::mt19937_64 rng(5);
  int shapes = 0;
  for (; shapes < 1000; ++shapes) {
    WindowConfig c;
    c.length = 1 + static_cast<int>(rng() % 150);
    c.overlap = static_cast<double>(rng() % static_cast<unsigned>(c.length));
    const std::size_t n = rng() % 1200;
    const auto step = static_cast<std::size_t>(c.length) - static_cast<std::size_t>(c.overlap);
    const std::size_t want =
      n < static_cast<std::size_t>(c.length) ? 0 : (n - static_cast<std::size_t>(c.length)) / step + 1;
    const auto got = make_windows(constant_stream(n), c).size();
    if (got != want) {
      o.require(false, "N=" + std::to_string(n) + " T=" + std::to_string(c.length) +
                         " overlap=" + fmt("%.0f", c.overlap) + ": " + std::to_string(got) +
                         " != " + std::to_string(want));
      break;
    }
  }
  if (o.pass)
    o.detail = "12 windows at 0..880, " + std::to_string(shapes) + " random shapes";
  return o;
}

Outcome golden_and_fuzz() {
  Outcome o;
  int files = 0;
  for (const auto &entry : fs::directory_iterator(INSITU_GOLDEN_DIR)) {
    if (entry.path().extension() != ".jsonl")
      continue;
    const auto r = replay_golden(load_golden(entry.path()));
    o.require(r.pass, entry.path().filename().string() + ": " + r.message);
    ++files;
  }
  o.require(files > 0, "no golden vectors found");

  constexpr int kTrials = 10000;
  std::mt19937_64 rng(2024);
  const MechanismConfig cfg;
  int fuzz_fail = 0;
  for (int i = 0; i < kTrials && fuzz_fail == 0; ++i) {
    const auto id = i % 2 ? MechanismId::TwoOpposite : MechanismId::TwoAdjacent;
    const auto trace = insitu::testing::random_two_button_trace(rng);
    const auto out = replay(id, cfg, trace, trace.back().t_ms + 1000);
    const auto why = insitu::testing::check_two_button(cfg.two_button, trace, out);
    if (!why.empty()) {
      o.require(false, "two-button trial " + std::to_string(i) + ": " + why);
      ++fuzz_fail;
    }
  }
  const std::vector<ActivityLabel> cycle = {ActivityLabel::Walking, ActivityLabel::Downstairs,
                                            ActivityLabel::Upstairs};
  for (int i = 0; i < kTrials && fuzz_fail == 0; ++i) {
    const auto trace = insitu::testing::random_touch_ramp(cfg.touch, rng);
    std::vector<ActivityLabel> got;
    for (const auto &e : replay(MechanismId::Touch, cfg, trace, trace.back().t_ms))
      got.push_back(e.label);
    if (got != cycle) {
      o.require(false, "touch trial " + std::to_string(i) + " did not cycle W, D, U");
      ++fuzz_fail;
    }
  }
  if (o.pass)
    o.detail = std::to_string(files) + " vectors, " + std::to_string(kTrials) +
               " two-button and " + std::to_string(kTrials) + " touch sequences";
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  const SimulationConfig sim; // 10 users, 3-minute route, default noise
  const WindowConfig wc;
  const rnn::TrainConfig tc; // lr 0.0025, batch 32, 10 epochs, 10 folds
  const auto windows = simulated_windows(sim, wc);
  const auto gru = rnn::train(windows, rnn::ModelSpec::gru(), tc);
  const double acc = gru.history.mean_accuracy();
  o.require(acc >= 0.85, "GRU accuracy " + fmt("%.4f", acc));

  const auto control = permute_labels(balance_classes(windows, sim.seed), sim.seed + 1);
  const auto perm = rnn::train(control, rnn::ModelSpec::gru(), tc);
  const double chance = perm.history.mean_accuracy();
  o.require(std::abs(chance - 1.0 / 3.0) <= 0.08, "permuted accuracy " + fmt("%.4f", chance));

  const double secs = seconds_since(t0);
  o.require(secs < 600.0, "took " + fmt("%.0f", secs) + " s");
  o.detail = (o.pass ? "" : o.detail + " | ") + "GRU " + fmt("%.4f", acc) + " on " +
             std::to_string(windows.size()) + " windows, permuted " + fmt("%.4f", chance) +
             ", " + fmt("%.0f", secs) + " s";
  return o;
}

Outcome noise_free() {
  Outcome o;
  SimulationConfig sim;
  sim.gait = sim.gait.noise_free();
  sim.labeller = LabellerModel::ideal();
  sim.population = false;
  WindowConfig wc;
  wc.purity_min = 1.0;
  const auto windows = simulated_windows(sim, wc);
  const auto r = rnn::train(windows, rnn::ModelSpec::gru(), rnn::TrainConfig{});
  const double acc = r.history.mean_accuracy();
  o.require(acc == 1.0, "accuracy " + fmt("%.6f", acc));
  o.detail = (o.pass ? "" : o.detail + " | ") + "accuracy " + fmt("%.6f", acc) + " on " +
             std::to_string(windows.size()) + " windows";
  return o;
}

Outcome speed() {
  Outcome o;
  SimulationConfig sim;
  sim.users = 2;
  const auto windows = apply_norm(simulated_windows(sim, WindowConfig{}),
                                  fit_norm(simulated_windows(sim, WindowConfig{})));
  std::vector<std::size_t> subset(std::min<std::size_t>(windows.size(), 256));
  for (std::size_t i = 0; i < subset.size(); ++i)
    subset[i] = i;
  rnn::TrainConfig tc;
  tc.epochs = 2;
  double gru_s = 0.0, lstm_s = 0.0;
  constexpr int kRuns = 5;
  for (int run = 0; run < kRuns; ++run) {
    for (bool is_gru : {true, false}) {
      const auto spec = is_gru ? rnn::ModelSpec::gru() : rnn::ModelSpec::lstm();
      const auto fit = rnn::fit(windows, subset, spec, tc, 100 + static_cast<std::uint64_t>(run));
      double s = 0.0;
      for (const auto &e : fit.epochs)
        s += e.seconds;
      (is_gru ? gru_s : lstm_s) += s / static_cast<double>(fit.epochs.size());
    }
  }
  gru_s /= kRuns;
  lstm_s /= kRuns;
  o.require(gru_s < lstm_s, "GRU epoch not faster");
  o.detail = (o.pass ? "" : o.detail + " | ") + "mean epoch GRU " + fmt("%.3f", gru_s) +
             " s, LSTM " + fmt("%.3f", lstm_s) + " s";
  return o;
}

RunConfig small_run(std::uint64_t seed) {
  RunConfig rc;
  rc.simulation.seed = seed;
  rc.simulation.users = 4;
  rc.simulation.mechanisms = {MechanismId::TwoAdjacent, MechanismId::Slider};
  rc.pipeline.train.epochs = 3;
  rc.pipeline.train.folds = 4;
  rc.pipeline.specs = {rnn::ModelSpec::gru(16), rnn::ModelSpec::lstm(16),
                       rnn::ModelSpec::stacked(16)};
  return rc;
}

ComparisonReport simulate_and_compare(const RunConfig &rc, const fs::path &root) {
  fs::remove_all(root);
  simulate_dataset(rc.simulation, root / "data");
  auto report = cmd_compare(root / "data", rc.pipeline);
  write_report(report, root / "report");
  return report;
}

Outcome report_shape() {
  Outcome o;
  const auto root = fs::temp_directory_path() / "insitu_acceptance_shape";
  const auto r = simulate_and_compare(small_run(3), root);
  o.require(r.mechanisms.size() >= 2, "fewer than two mechanisms");

  const auto dir = root / "report";
  const std::map<std::string, std::string> headers = {
    {"accuracy.csv", "mechanism,model,mean_accuracy,std_accuracy,folds"},
    {"curves.csv", "mechanism,model,fold,epoch,loss,accuracy"},
    {"f1.csv", "mechanism,model,label,precision,recall,f1"},
    {"cochran_f.csv", "mechanism,q,q_df,q_p,q_p_adj,f,f_df1,f_df2,f_p,f_p_adj,degenerate"},
    {"mcnemar.csv", "mechanism,model_a,model_b,b,c,statistic,exact,p,p_adj"},
  };
  for (const auto &[file, header] : headers) {
    const auto text = read_file(dir / file);
    o.require(text.substr(0, text.find('\n')) == header, file + " header");
  }
  const auto count = [](const std::string &s) { return std::count(s.begin(), s.end(), '\n'); };
  const long nm = static_cast<long>(r.mechanisms.size());
  const long nmod = static_cast<long>(r.models.size());
  o.require(count(read_file(dir / "accuracy.csv")) == 1 + nm * nmod, "accuracy.csv rows");
  o.require(count(read_file(dir / "f1.csv")) == 1 + nm * nmod * kNumLabels, "f1.csv rows");
  o.require(count(read_file(dir / "cochran_f.csv")) == 1 + nm, "cochran_f.csv rows");
  o.require(count(read_file(dir / "mcnemar.csv")) == 1 + nm * nmod * (nmod - 1) / 2,
            "mcnemar.csv rows");
  const long folds = r.mechanisms[0].runs[0].history.folds.size();
  const long epochs = r.mechanisms[0].runs[0].history.folds[0].epochs.size();
  o.require(count(read_file(dir / "curves.csv")) == 1 + nm * nmod * (folds + 1) * epochs,
            "curves.csv rows");

  const auto text = read_file(dir / "report.txt");
  for (const char *section : {"## Accuracy", "## F1 per label", "## Cochran's Q", "## McNemar"})
    o.require(text.find(section) != std::string::npos, std::string("missing ") + section);
  const auto grid = render_pairwise_table(r);
  int na = 0;
  std::istringstream lines(grid);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("#", 0) == 0)
      continue; // headings
    for (std::size_t p = line.find(" NA"); p != std::string::npos; p = line.find(" NA", p + 3))
      ++na;
  }
  o.require(na == nm * nmod, "McNemar grid has " + std::to_string(na) + " NA cells");

  StatTestResult q, f;
  q.statistic = 13.241;
  q.p_adjusted = 0.001;
  f.statistic = 6.852;
  f.p_adjusted = 0.001;
  o.require(format_omnibus_row("App", q, f) ==
              "App                   13.241       0.001       6.852       0.001\n",
            "omnibus App row fixture");
  std::vector<std::vector<double>> p(3, std::vector<double>(3, 0.0));
  p[0][1] = 0.228;
  p[0][2] = 0.125;
  p[1][2] = 0.546;
  const auto fixture = render_mcnemar_grid({"GRU", "LSTM", "Stacked"}, p);
  o.require(fixture.find("GRU                       NA       0.228") != std::string::npos &&
              fixture.find("LSTM                   0.228          NA") != std::string::npos,
            "pairwise GRU-LSTM fixture");
  fs::remove_all(root);
  if (o.pass)
    o.detail = std::to_string(nm) + " mechanisms x " + std::to_string(nmod) +
               " models, 6 artifacts, fixtures byte-exact";
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto a = fs::temp_directory_path() / "insitu_acceptance_det_a";
  const auto b = fs::temp_directory_path() / "insitu_acceptance_det_b";
  simulate_and_compare(small_run(42), a);
  simulate_and_compare(small_run(42), b);
  int compared = 0;
  for (const auto &sub : {"data", "report"})
    for (const auto &e : fs::recursive_directory_iterator(a / sub)) {
      if (!e.is_regular_file())
        continue;
      const auto rel = fs::relative(e.path(), a);
      o.require(fs::exists(b / rel) && read_file(e.path()) == read_file(b / rel),
                rel.string() + " differs");
      ++compared;
    }
  fs::remove_all(a);
  fs::remove_all(b);
  if (o.pass)
    o.detail = std::to_string(compared) + " files byte-identical";
  return o;
}

} // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
    {"gradient-oracle", gradient_oracle},
    {"statistics-oracles", statistics_oracles},
    {"windowing", windowing},
    {"golden-and-fuzz", golden_and_fuzz},
    {"end-to-end", end_to_end},
    {"noise-free", noise_free},
    {"gru-faster-than-lstm", speed},
    {"report-shape", report_shape},
    {"determinism", determinism},
  };

  CLI::App app{"Acceptance criteria runner"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only these criteria");
  bool list = false;
  app.add_flag("--list", list, "List criterion names and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto &c : criteria)
      std::printf("%s\n", c.first.c_str());
    return 0;
  }

  int failed = 0;
  for (const auto &[name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end())
      continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception &e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", name.c_str(),
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
