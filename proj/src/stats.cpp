// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/stats.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace insitu {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto &row : counts)
    for (auto v : row)
      n += v;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i)
    n += counts[i][i];
  return n;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n ? static_cast<double>(trace()) / static_cast<double>(n) : 0.0;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size())
    throw Error("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(truth.size()) + " labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predictions[i];
    const int t = truth[i];
    if (p < 0 || p >= kNumLabels || t < 0 || t >= kNumLabels)
      throw Error("confusion: label code outside [0, 3)");
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

PrecisionRecall precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrecisionRecall r;
  if (tp + fp > 0)
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0)
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

PrecisionRecall precision_recall_f1(const ConfusionMatrix &cm, int label_code) {
  if (label_code < 0 || label_code >= kNumLabels)
    throw Error("precision_recall_f1: label code outside [0, 3)");
  const auto k = static_cast<std::size_t>(label_code);
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    if (j == k)
      continue;
    fp += cm.counts[j][k];
    fn += cm.counts[k][j];
  }
  return precision_recall_f1(cm.counts[k][k], fp, fn);
}

CorrectnessMatrix::CorrectnessMatrix(std::vector<std::string> classifiers, std::size_t rows)
    : names_(std::move(classifiers)), rows_(rows), data_(rows * names_.size(), 0) {}

CorrectnessMatrix
CorrectnessMatrix::from_predictions(std::vector<std::string> classifiers,
                                    const std::vector<std::vector<int>> &predictions,
                                    std::span<const int> truth) {
  if (classifiers.size() != predictions.size())
    throw Error("correctness matrix: one name per prediction column required");
  CorrectnessMatrix m(std::move(classifiers), truth.size());
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (predictions[j].size() != truth.size())
      throw Error("correctness matrix: prediction column " + std::to_string(j) +
                  " is not aligned with the truth vector");
    for (std::size_t i = 0; i < truth.size(); ++i)
      m.set(i, j, predictions[j][i] == truth[i]);
  }
  return m;
}

CorrectnessMatrix CorrectnessMatrix::from_rows(const std::vector<std::vector<int>> &rows) {
  const std::size_t L = rows.empty() ? 0 : rows.front().size();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < L; ++j)
    names.push_back("c" + std::to_string(j));
  CorrectnessMatrix m(std::move(names), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != L)
      throw Error("correctness matrix: ragged rows");
    for (std::size_t j = 0; j < L; ++j) {
      if (rows[i][j] != 0 && rows[i][j] != 1)
        throw Error("correctness matrix: entries must be 0 or 1");
      m.set(i, j, rows[i][j] == 1);
    }
  }
  return m;
}

std::vector<std::uint8_t> CorrectnessMatrix::column(std::size_t j) const {
  std::vector<std::uint8_t> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    out[i] = at(i, j);
  return out;
}

std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m) {
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values)
    out.push_back(std::min(1.0, static_cast<double>(m) * p));
  return out;
}

void apply_bonferroni(StatTestResult &r, std::size_t m, double alpha) {
  r.p_adjusted = std::min(1.0, static_cast<double>(std::max<std::size_t>(m, 1)) * r.p);
  r.significant = r.p_adjusted < alpha;
}

double chi2_sf(double x, double df) {
  if (!(df > 0.0))
    throw Error("chi2_sf: degrees of freedom must be positive");
  if (x <= 0.0)
    return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double f_sf(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw Error("f_sf: degrees of freedom must be positive");
  if (x <= 0.0)
    return 1.0;
  // P(F > x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2)
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x));
}

StatTestResult cochran_q(const CorrectnessMatrix &m) {
  const std::size_t N = m.rows();
  const std::size_t L = m.cols();
  if (N == 0 || L < 2)
    throw Error("cochran_q: need at least one row and two classifiers");
  std::vector<double> G(L, 0.0);
  double T = 0.0;
  double sum_r2 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double R = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      G[j] += m.at(i, j);
      R += m.at(i, j);
    }
    T += R;
    sum_r2 += R * R;
  }
  double sum_g2 = 0.0;
  for (double g : G)
    sum_g2 += g * g;
  const double k = static_cast<double>(L);

  StatTestResult r;
  r.df1 = k - 1.0;
  const double denom = k * T - sum_r2;
  if (denom == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.statistic = (k - 1.0) * (k * sum_g2 - T * T) / denom;
  r.p = chi2_sf(r.statistic, r.df1);
  r.p_adjusted = r.p;
  return r;
}

StatTestResult rm_anova_f(const CorrectnessMatrix &m) {
  const std::size_t N = m.rows();
  const std::size_t L = m.cols();
  if (N < 2 || L < 2)
    throw Error("rm_anova_f: need at least two rows and two classifiers");
  const double n = static_cast<double>(N);
  const double k = static_cast<double>(L);

  // computational formulae on raw sums; entries are 0/1 so x^2 == x
  std::vector<double> col(L, 0.0);
  double sum_row2 = 0.0;
  double T = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double R = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      col[j] += m.at(i, j);
      R += m.at(i, j);
    }
    T += R;
    sum_row2 += R * R;
  }
  double sum_col2 = 0.0;
  for (double c : col)
    sum_col2 += c * c;
  const double correction = T * T / (n * k);
  const double ss_total = T - correction;
  const double ss_cols = sum_col2 / n - correction;
  const double ss_rows = sum_row2 / k - correction;
  const double ss_err = ss_total - ss_cols - ss_rows;

  StatTestResult r;
  r.df1 = k - 1.0;
  r.df2 = (k - 1.0) * (n - 1.0);
  const double ms_cols = ss_cols / r.df1;
  const double ms_err = ss_err / r.df2;
  constexpr double kTiny = 1e-12;
  if (ms_err <= kTiny) {
    r.degenerate = true;
    if (ms_cols <= kTiny)
      return r;
    r.statistic = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.p_adjusted = 0.0;
    return r;
  }
  r.statistic = std::max(0.0, ms_cols / ms_err);
  r.p = f_sf(r.statistic, r.df1, r.df2);
  r.p_adjusted = r.p;
  return r;
}

double mcnemar_exact_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0)
    return 1.0;
  const std::size_t k = std::min(b, c);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i)
    tail += boost::math::binomial_coefficient<double>(static_cast<unsigned>(n),
                                                      static_cast<unsigned>(i));
  return std::min(1.0, 2.0 * std::ldexp(tail, -static_cast<int>(n)));
}

double mcnemar_chi2_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0)
    return 1.0;
  const double d = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  const double stat = d > 0.0 ? d * d / static_cast<double>(n) : 0.0;
  return chi2_sf(stat, 1.0);
}

StatTestResult mcnemar_counts(std::size_t b, std::size_t c) {
  StatTestResult r;
  r.df1 = 1.0;
  r.discordant_b = b;
  r.discordant_c = c;
  const std::size_t n = b + c;
  if (n == 0) {
    r.degenerate = true;
    r.exact = true;
    return r;
  }
  if (n < kMcNemarExactBelow) {
    r.exact = true;
    r.statistic = static_cast<double>(std::min(b, c));
    r.p = mcnemar_exact_p(b, c);
  } else {
    const double d = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
    r.statistic = d > 0.0 ? d * d / static_cast<double>(n) : 0.0;
    r.p = chi2_sf(r.statistic, 1.0);
  }
  r.p_adjusted = r.p;
  return r;
}

StatTestResult mcnemar(std::span<const std::uint8_t> correct_a,
                       std::span<const std::uint8_t> correct_b) {
  if (correct_a.size() != correct_b.size())
    throw Error("mcnemar: vectors differ in length");
  std::size_t b = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    b += correct_a[i] && !correct_b[i];
    c += !correct_a[i] && correct_b[i];
  }
  return mcnemar_counts(b, c);
}

} // namespace insitu
