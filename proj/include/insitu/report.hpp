// SPDX-License-Identifier: Apache-2.0
/**
 * @file   report.hpp
 * @brief  Classifier-comparison results and their table/CSV/JSON renderings.
 *
 * A report directory holds:
 *   report.txt     every section below as aligned plain-text tables
 *   accuracy.csv   mechanism,model,mean_accuracy,std_accuracy,folds
 *   curves.csv     mechanism,model,fold,epoch,loss,accuracy (fold "mean" = average)
 *   f1.csv         mechanism,model,label,precision,recall,f1
 *   cochran_f.csv  mechanism,q,q_df,q_p,q_p_adj,f,f_df1,f_df2,f_p,f_p_adj,degenerate
 *   mcnemar.csv    mechanism,model_a,model_b,b,c,statistic,exact,p,p_adj
 *   results.json   the same content, machine readable
 * Nothing time-dependent is written, so reruns under one seed are byte-identical.
 */
#pragma once

#include <insitu/mechanisms.hpp>
#include <insitu/rnn/train.hpp>
#include <insitu/stats.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace insitu {

struct ModelRun {
  std::string name;
  rnn::TrainHistory history;
};

struct PairwiseTest {
  std::string a;
  std::string b;
  StatTestResult result;
};

struct MechanismComparison {
  MechanismId mechanism = MechanismId::ThreeButtons;
  std::vector<int> truth; // label code per window
  std::vector<ModelRun> runs;
  std::vector<std::array<PrecisionRecall, kNumLabels>> per_label; // one per run
  StatTestResult cochran;
  StatTestResult anova;
  std::vector<PairwiseTest> pairs;
};

struct ComparisonReport {
  std::vector<std::string> models;
  std::vector<MechanismComparison> mechanisms;
  double alpha = kDefaultAlpha;
};

/// Runs must share one fold plan (asserted through fold_of) and cover `truth`.
MechanismComparison compare_runs(MechanismId mechanism, std::vector<int> truth,
                                 std::vector<ModelRun> runs);

/// Bonferroni over the report: Cochran/F p-values with m = number of mechanisms,
/// McNemar p-values with m = number of model pairs.
void finalize_report(ComparisonReport &report);

std::string format_fixed(double v, int decimals);

std::string render_accuracy_table(const ComparisonReport &r);
std::string render_f1_table(const ComparisonReport &r);
/// One Table-3 row: technique, Q, adjusted Q p, F, adjusted F p (3 decimals).
std::string format_omnibus_row(const std::string &technique, const StatTestResult &q,
                              const StatTestResult &f);
std::string render_omnibus_table(const ComparisonReport &r);
/// Symmetric grid of p-values with NA on the diagonal (3 decimals).
std::string render_mcnemar_grid(const std::vector<std::string> &names,
                                const std::vector<std::vector<double>> &p);
std::string render_pairwise_table(const ComparisonReport &r);
std::string render_report(const ComparisonReport &r);

std::string accuracy_csv(const ComparisonReport &r);
std::string curves_csv(const ComparisonReport &r);
std::string f1_csv(const ComparisonReport &r);
std::string cochran_f_csv(const ComparisonReport &r);
std::string mcnemar_csv(const ComparisonReport &r);
std::string results_json(const ComparisonReport &r);

void write_report(const ComparisonReport &r, const std::filesystem::path &dir);

/// Rebuilds what the text tables need from results.json (fold accuracies,
/// per-label metrics, tests). Per-window predictions are not stored there.
ComparisonReport parse_results_json(const std::string &text);
ComparisonReport load_results(const std::filesystem::path &dir);

using RateRow = std::pair<std::string, LabelStats>;
std::string render_rates_table(const std::vector<RateRow> &rows);
std::string rates_csv(const std::vector<RateRow> &rows);

} // namespace insitu
