// SPDX-License-Identifier: Apache-2.0
/**
 * @file   stats.hpp
 * @brief  Classification metrics and paired classifier-comparison tests.
 *
 * Tests operate on a correctness matrix: row i, column j is 1 when
 * classifier j got instance i right. All functions are pure.
 */
#pragma once

#include <insitu/stream.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace insitu {

/// counts[truth][prediction]
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> counts{};

  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const; // trace / total, 0 for an empty matrix
};

/// Label codes in [0, kNumLabels). Throws on a length mismatch or bad code.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truth);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Each ratio is 0 when its denominator is 0.
PrecisionRecall precision_recall_f1(const ConfusionMatrix &cm, int label_code);
PrecisionRecall precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn);

class CorrectnessMatrix {
public:
  CorrectnessMatrix(std::vector<std::string> classifiers, std::size_t rows);

  /// Column j is correct[j][i] = predictions[j][i] == truth[i].
  static CorrectnessMatrix from_predictions(std::vector<std::string> classifiers,
                                            const std::vector<std::vector<int>> &predictions,
                                            std::span<const int> truth);
  static CorrectnessMatrix from_rows(const std::vector<std::vector<int>> &rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string> &classifiers() const { return names_; }

  std::uint8_t at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }
  void set(std::size_t i, std::size_t j, bool v) { data_[i * cols() + j] = v ? 1 : 0; }
  std::vector<std::uint8_t> column(std::size_t j) const;

private:
  std::vector<std::string> names_;
  std::size_t rows_;
  std::vector<std::uint8_t> data_;
};

inline constexpr double kDefaultAlpha = 0.05;

struct StatTestResult {
  double statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0; // F tests only
  double p = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
  bool degenerate = false;
  std::size_t discordant_b = 0; // McNemar only
  std::size_t discordant_c = 0;
  bool exact = false; // McNemar: exact binomial path taken
};

/// Sets p_adjusted = min(1, m * p) and the significance flag at `alpha`.
void apply_bonferroni(StatTestResult &r, std::size_t m, double alpha = kDefaultAlpha);
std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m);

StatTestResult cochran_q(const CorrectnessMatrix &m);
/// One-way repeated-measures ANOVA on the 0/1 entries (classifiers as the factor).
StatTestResult rm_anova_f(const CorrectnessMatrix &m);

inline constexpr std::size_t kMcNemarExactBelow = 25;

/// Discordant b = A right and B wrong, c = A wrong and B right. Exact binomial
/// when b + c < 25, else the continuity-corrected chi-square with one df.
StatTestResult mcnemar(std::span<const std::uint8_t> correct_a,
                       std::span<const std::uint8_t> correct_b);
StatTestResult mcnemar_counts(std::size_t b, std::size_t c);
double mcnemar_exact_p(std::size_t b, std::size_t c);
double mcnemar_chi2_p(std::size_t b, std::size_t c);

/// Chi-square survival function Q(df/2, x/2). Throws for df <= 0.
double chi2_sf(double x, double df);
/// F survival function via the regularised incomplete beta. Throws for d <= 0.
double f_sf(double x, double d1, double d2);

} // namespace insitu
