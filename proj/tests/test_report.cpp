// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/pipeline.hpp>
#include <insitu/report.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

using namespace insitu;
namespace fs = std::filesystem;

namespace {

/// A hand-made run: `accuracy` of the windows right, the rest off by one.
ModelRun fake_run(const std::string &name, const std::vector<int> &truth, double accuracy,
                  std::uint64_t seed, int folds = 3) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution right(accuracy);
  ModelRun run;
  run.name = name;
  run.history.spec_name = name;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    run.history.fold_of.push_back(static_cast<int>(i % folds));
    run.history.predictions.push_back(right(rng) ? truth[i] : (truth[i] + 1) % kNumLabels);
  }
  for (int f = 0; f < folds; ++f) {
    rnn::FoldHistory fh;
    fh.fold = f;
    for (int e = 0; e < 2; ++e)
      fh.epochs.push_back({1.0 / (e + 1), 0.5 + 0.1 * e, 0.0});
    std::size_t n = 0, ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (run.history.fold_of[i] == f) {
        ++n;
        ok += run.history.predictions[i] == truth[i] ? 1 : 0;
      }
    fh.test_size = n;
    fh.test_accuracy = static_cast<double>(ok) / static_cast<double>(n);
    run.history.folds.push_back(fh);
  }
  return run;
}

ComparisonReport fake_report() {
  std::vector<int> truth;
  for (int i = 0; i < 90; ++i)
    truth.push_back(i % kNumLabels);
  ComparisonReport r;
  r.models = {"gru", "lstm", "stacked"};
  std::uint64_t seed = 1;
  for (auto m : {MechanismId::TwoOpposite, MechanismId::Slider}) {
    std::vector<ModelRun> runs;
    for (double acc : {0.9, 0.7, 0.8})
      runs.push_back(fake_run(r.models[runs.size()], truth, acc, seed++));
    r.mechanisms.push_back(compare_runs(m, truth, std::move(runs)));
  }
  finalize_report(r);
  return r;
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string &s) { return s.substr(0, s.find('\n')); }

} // namespace

TEST(Format, FixedDecimals) {
  EXPECT_EQ(format_fixed(13.2414, 3), "13.241");
  EXPECT_EQ(format_fixed(0.00049, 3), "0.000");
  EXPECT_EQ(format_fixed(-0.0001, 3), "0.000");
  EXPECT_EQ(format_fixed(0.2275, 2), "0.23");
}

TEST(Format, OmnibusRowFixture) {
  StatTestResult q, f;
  q.statistic = 13.241;
  q.p_adjusted = 0.001;
  f.statistic = 6.852;
  f.p_adjusted = 0.001;
  EXPECT_EQ(format_omnibus_row("App", q, f),
            "App                   13.241       0.001       6.852       0.001\n");
}

TEST(Format, McNemarGridIsSymmetricWithNaDiagonal) {
  const std::vector<std::string> names = {"GRU", "LSTM", "Stacked"};
  std::vector<std::vector<double>> p(3, std::vector<double>(3, 0.0));
  p[0][1] = 0.228;
  p[0][2] = 0.125;
  p[1][2] = 0.546;
  const std::string want = "                         GRU        LSTM     Stacked\n"
                           "----------------------------------------------------\n"
                           "GRU                       NA       0.228       0.125\n"
                           "LSTM                   0.228          NA       0.546\n"
                           "Stacked                0.125       0.546          NA\n";
  EXPECT_EQ(render_mcnemar_grid(names, p), want);
  EXPECT_THROW(render_mcnemar_grid(names, {{1.0}}), Error);
}

TEST(Compare, MisalignedFoldsAreAnInternalError) {
  std::vector<int> truth(30);
  for (int i = 0; i < 30; ++i)
    truth[i] = i % 3;
  auto a = fake_run("a", truth, 0.8, 1, 3);
  auto b = fake_run("b", truth, 0.8, 2, 5);
  try {
    compare_runs(MechanismId::Touch, truth, {a, b});
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("internal: fold misalignment"), std::string::npos);
  }
  EXPECT_THROW(compare_runs(MechanismId::Touch, truth, {a}), Error);
}

TEST(Compare, BonferroniFamilies) {
  const auto r = fake_report();
  for (const auto &mc : r.mechanisms) {
    EXPECT_DOUBLE_EQ(mc.cochran.p_adjusted, std::min(1.0, 2.0 * mc.cochran.p));
    EXPECT_DOUBLE_EQ(mc.anova.p_adjusted, std::min(1.0, 2.0 * mc.anova.p));
    ASSERT_EQ(mc.pairs.size(), 3u);
    for (const auto &pt : mc.pairs)
      EXPECT_DOUBLE_EQ(pt.result.p_adjusted, std::min(1.0, 3.0 * pt.result.p));
  }
}

TEST(Compare, IdenticalSpecsAreDegenerate) {
  std::vector<Window> windows;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    Window w;
    w.values = WindowMatrix(8, kNumChannels);
    for (Eigen::Index k = 0; k < w.values.size(); ++k)
      w.values.data()[k] = normal(rng) + (k % kNumChannels == i % 3 ? 1.5 : 0.0);
    w.label = activity_from_code(i % 3);
    windows.push_back(std::move(w));
  }
  PipelineConfig cfg;
  auto spec = rnn::ModelSpec::gru(4);
  cfg.specs = {spec, spec};
  cfg.specs[1].name = "gru_again";
  cfg.train.epochs = 2;
  cfg.train.folds = 3;
  cfg.train.batch_size = 8;
  const auto r = cmd_compare({{MechanismId::App, windows}}, cfg);
  const auto &mc = r.mechanisms.at(0);
  EXPECT_TRUE(mc.cochran.degenerate);
  EXPECT_EQ(mc.cochran.p, 1.0);
  ASSERT_EQ(mc.pairs.size(), 1u);
  EXPECT_EQ(mc.pairs[0].result.p, 1.0);
  EXPECT_EQ(mc.runs[0].history.predictions, mc.runs[1].history.predictions);
}

TEST(Report, FilesAndSchema) {
  const auto r = fake_report();
  const auto dir = fs::temp_directory_path() / "insitu_report_schema";
  fs::remove_all(dir);
  write_report(r, dir);

  const std::map<std::string, std::string> headers = {
    {"accuracy.csv", "mechanism,model,mean_accuracy,std_accuracy,folds"},
    {"curves.csv", "mechanism,model,fold,epoch,loss,accuracy"},
    {"f1.csv", "mechanism,model,label,precision,recall,f1"},
    {"cochran_f.csv", "mechanism,q,q_df,q_p,q_p_adj,f,f_df1,f_df2,f_p,f_p_adj,degenerate"},
    {"mcnemar.csv", "mechanism,model_a,model_b,b,c,statistic,exact,p,p_adj"},
  };
  for (const auto &[file, header] : headers) {
    const auto text = read_file(dir / file);
    EXPECT_EQ(first_line(text), header) << file;
  }
  auto count_lines = [](const std::string &s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(count_lines(read_file(dir / "accuracy.csv")), 1 + 2 * 3);
  EXPECT_EQ(count_lines(read_file(dir / "f1.csv")), 1 + 2 * 3 * 3);
  EXPECT_EQ(count_lines(read_file(dir / "cochran_f.csv")), 1 + 2);
  EXPECT_EQ(count_lines(read_file(dir / "mcnemar.csv")), 1 + 2 * 3);
  // 3 folds plus a mean row, 2 epochs each
  EXPECT_EQ(count_lines(read_file(dir / "curves.csv")), 1 + 2 * 3 * 4 * 2);
  EXPECT_NE(read_file(dir / "curves.csv").find(",mean,"), std::string::npos);

  const auto report = read_file(dir / "report.txt");
  EXPECT_EQ(report, render_report(r));
  for (const auto *needle : {"## Accuracy", "## F1 per label", "## Cochran's Q", "## McNemar",
                             "### two_opposite", "### slider", "NA"})
    EXPECT_NE(report.find(needle), std::string::npos) << needle;

  const auto j = nlohmann::json::parse(read_file(dir / "results.json"));
  EXPECT_EQ(j.at("models").size(), 3u);
  EXPECT_EQ(j.at("mechanisms").size(), 2u);
  fs::remove_all(dir);
}

TEST(Report, ResultsJsonRoundTrip) {
  const auto r = fake_report();
  const auto json = results_json(r);
  const auto back = parse_results_json(json);
  EXPECT_EQ(results_json(back), json);
  EXPECT_EQ(render_omnibus_table(back), render_omnibus_table(r));
  EXPECT_EQ(render_pairwise_table(back), render_pairwise_table(r));
  EXPECT_EQ(render_accuracy_table(back), render_accuracy_table(r));
  EXPECT_THROW(parse_results_json("{\"models\": 3}"), std::exception);
}

TEST(Rates, TableAndCsv) {
  std::vector<LabelEvent> ev = {{0, ActivityLabel::Walking, MechanismId::Touch},
                                {10, ActivityLabel::Walking, MechanismId::Touch}};
  const std::vector<RateRow> rows = {{"touch", analyze_labels(ev, 120.0)},
                                     {"empty", analyze_labels({}, 120.0)}};
  const auto csv = rates_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto table = render_rates_table(rows);
  EXPECT_NE(table.find("touch"), std::string::npos);
  EXPECT_NE(table.find("downstairs"), std::string::npos);
}
