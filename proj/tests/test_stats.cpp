// SPDX-License-Identifier: Apache-2.0
#include "support/oracles.hpp"

#include <insitu/error.hpp>
#include <insitu/stats.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace insitu;
using insitu::testing::cochran_fixture;

namespace {

CorrectnessMatrix random_matrix(std::size_t n, std::size_t l, std::uint64_t seed, double p = 0.6) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::vector<int>> rows(n, std::vector<int>(l));
  for (auto &r : rows)
    for (auto &x : r)
      x = coin(rng) ? 1 : 0;
  return CorrectnessMatrix::from_rows(rows);
}

CorrectnessMatrix permuted(const CorrectnessMatrix &m, const std::vector<std::size_t> &rows,
                           const std::vector<std::size_t> &cols) {
  CorrectnessMatrix out(m.classifiers(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out.set(i, j, m.at(rows[i], cols[j]));
  return out;
}

} // namespace

TEST(Confusion, PerfectPredictions) {
  const std::vector<int> y = {0, 1, 2, 1, 1, 0};
  const auto cm = confusion(y, y);
  EXPECT_EQ(cm.total(), 6u);
  EXPECT_EQ(cm.trace(), 6u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 1.0);
  for (int c = 0; c < kNumLabels; ++c) {
    const auto pr = precision_recall_f1(cm, c);
    EXPECT_EQ(pr.precision, 1.0);
    EXPECT_EQ(pr.recall, 1.0);
    EXPECT_EQ(pr.f1, 1.0);
  }
}

TEST(Confusion, ZeroDenominatorsAndHandExample) {
  const auto z = precision_recall_f1(0, 0, 3);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  const auto pr = precision_recall_f1(2, 1, 2);
  EXPECT_NEAR(pr.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(pr.recall, 0.5, 1e-15);
  EXPECT_NEAR(pr.f1, 4.0 / 7.0, 1e-15);
}

TEST(Confusion, RowsAreTruth) {
  const std::vector<int> truth = {0, 0, 1, 2};
  const std::vector<int> pred = {0, 1, 1, 1};
  const auto cm = confusion(pred, truth);
  EXPECT_EQ(cm.counts[0][1], 1u);
  EXPECT_EQ(cm.counts[2][1], 1u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 0.5);
  EXPECT_THROW(confusion(pred, std::vector<int>{0, 1}), Error);
  EXPECT_THROW(confusion(std::vector<int>{3}, std::vector<int>{0}), Error);
}

TEST(Cochran, FixtureIsThree) {
  const auto r = cochran_q(cochran_fixture());
  EXPECT_NEAR(r.statistic, 3.0, 1e-12);
  EXPECT_EQ(r.df1, 2.0);
  EXPECT_NEAR(r.p, std::exp(-1.5), 1e-6);
  EXPECT_FALSE(r.degenerate);
}

TEST(Cochran, UnanimousRowsCancel) {
  auto rows = std::vector<std::vector<int>>{{1, 1, 0}, {1, 0, 0}, {1, 1, 1}, {0, 0, 0}, {1, 1, 1}};
  EXPECT_NEAR(cochran_q(CorrectnessMatrix::from_rows(rows)).statistic, 3.0, 1e-12);
  const auto same = cochran_q(CorrectnessMatrix::from_rows({{1, 1, 1}, {0, 0, 0}, {1, 1, 1}}));
  EXPECT_TRUE(same.degenerate);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_THROW(cochran_q(CorrectnessMatrix({"a", "b"}, 0)), Error);
}

TEST(Cochran, MatchesOracleAndPermutationInvariant) {
  std::mt19937_64 rng(1);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = random_matrix(20 + s, 3 + s % 3, s);
    const auto r = cochran_q(m);
    if (r.degenerate)
      continue;
    const auto [q, p] = insitu::testing::cochran_oracle(m);
    EXPECT_NEAR(r.statistic, q, 1e-10);
    EXPECT_NEAR(r.p, p, 1e-10);

    std::vector<std::size_t> rows(m.rows()), cols(m.cols());
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(cols.begin(), cols.end(), rng);
    EXPECT_NEAR(cochran_q(permuted(m, rows, cols)).statistic, r.statistic, 1e-12);
  }
}

TEST(Anova, FixtureMatchesTwoPassOracle) {
  const auto m = cochran_fixture();
  const auto r = rm_anova_f(m);
  const auto o = insitu::testing::two_pass_anova(m);
  EXPECT_NEAR(r.statistic, o.f, 1e-10);
  EXPECT_NEAR(r.p, o.p, 1e-10);
  EXPECT_EQ(r.df1, 2.0);
  EXPECT_EQ(r.df2, 6.0);
}

TEST(Anova, RandomMatricesMatchOracle) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = random_matrix(10 + 3 * s, 2 + s % 4, 100 + s);
    const auto r = rm_anova_f(m);
    if (r.degenerate)
      continue;
    const auto o = insitu::testing::two_pass_anova(m);
    EXPECT_NEAR(r.statistic, o.f, 1e-10) << s;
    EXPECT_NEAR(r.p, o.p, 1e-10) << s;
    EXPECT_EQ(r.df2, o.df2);
  }
}

TEST(Anova, IdenticalColumnsAndDuplication) {
  const auto same = rm_anova_f(CorrectnessMatrix::from_rows({{1, 1}, {0, 0}, {1, 1}}));
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p, 1.0);

  const auto m = random_matrix(15, 3, 7);
  std::vector<std::vector<int>> twice;
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < m.rows(); ++i)
      twice.push_back({m.at(i, 0), m.at(i, 1), m.at(i, 2)});
  const auto a = rm_anova_f(m);
  const auto b = rm_anova_f(CorrectnessMatrix::from_rows(twice));
  EXPECT_EQ(b.df2, 2.0 * a.df2 + 2.0);
  EXPECT_LE(b.p, a.p);
}

TEST(McNemar, ExactExamples) {
  EXPECT_EQ(mcnemar_counts(0, 0).p, 1.0);
  EXPECT_EQ(mcnemar_exact_p(5, 1), 0.21875);
  EXPECT_EQ(mcnemar_counts(5, 1).p, 0.21875);
  EXPECT_TRUE(mcnemar_counts(5, 1).exact);
  EXPECT_FALSE(mcnemar_counts(20, 5).exact);
  for (std::uint64_t b = 0; b < 25; ++b)
    for (std::uint64_t c = 0; b + c < 25; ++c)
      EXPECT_DOUBLE_EQ(mcnemar_exact_p(b, c), insitu::testing::mcnemar_enumeration(b, c));
}

TEST(McNemar, SymmetricAndCountsDiscordance) {
  const std::vector<std::uint8_t> a = {1, 1, 0, 1, 0, 1, 1, 0};
  const std::vector<std::uint8_t> b = {0, 1, 1, 0, 0, 0, 1, 0};
  const auto ab = mcnemar(a, b);
  const auto ba = mcnemar(b, a);
  EXPECT_EQ(ab.discordant_b, 3u);
  EXPECT_EQ(ab.discordant_c, 1u);
  EXPECT_EQ(ab.p, ba.p);
  EXPECT_THROW(mcnemar(a, std::vector<std::uint8_t>{1}), Error);
}

TEST(McNemar, PathsAgreeNearCrossover) {
  for (std::size_t n = 20; n <= 30; ++n)
    for (std::size_t b = 0; b <= n; ++b) {
      const auto c = n - b;
      EXPECT_NEAR(mcnemar_exact_p(b, c), mcnemar_chi2_p(b, c), 0.02) << b << "," << c;
    }
}

TEST(Survival, ChiSquareClosedForms) {
  for (double x = 0.0; x <= 20.0; x += 0.125)
    EXPECT_NEAR(chi2_sf(x, 2.0), std::exp(-x / 2.0), 1e-12);
  for (double df : {1.0, 2.5, 7.0, 30.0})
    EXPECT_EQ(chi2_sf(0.0, df), 1.0);
  EXPECT_THROW(chi2_sf(1.0, 0.0), Error);
}

TEST(Survival, FSymmetryAndMonotone) {
  for (double d = 1.0; d <= 40.0; d += 1.0)
    EXPECT_NEAR(f_sf(1.0, d, d), 0.5, 1e-12);
  EXPECT_THROW(f_sf(1.0, -1.0, 2.0), Error);
  double prev_c = 1.0, prev_f = 1.0;
  for (double x = 0.0; x < 30.0; x += 0.25) {
    const double c = chi2_sf(x, 3.0);
    const double f = f_sf(x, 2.0, 9.0);
    EXPECT_LE(c, prev_c);
    EXPECT_LE(f, prev_f);
    prev_c = c;
    prev_f = f;
  }
}

TEST(Survival, AgreesWithDistributionObjects) {
  for (double x : {0.1, 0.9, 3.3, 11.0, 25.0})
    for (double df : {1.0, 2.0, 5.0, 12.0}) {
      const double want = boost::math::cdf(
        boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
      EXPECT_NEAR(chi2_sf(x, df), want, 1e-9);
    }
}

TEST(Bonferroni, ClampAndOrder) {
  const std::vector<double> p = {0.01, 0.5, 0.2, 0.02};
  const auto adj = bonferroni(p, 3);
  EXPECT_NEAR(adj[0], 0.03, 1e-15);
  EXPECT_EQ(adj[1], 1.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[i] <= p[j])
        EXPECT_LE(adj[i], adj[j]);

  StatTestResult r;
  r.p = 0.02;
  apply_bonferroni(r, 3, 0.05);
  EXPECT_NEAR(r.p_adjusted, 0.06, 1e-15);
  EXPECT_FALSE(r.significant);
  apply_bonferroni(r, 2, 0.05);
  EXPECT_TRUE(r.significant);
}

TEST(CorrectnessMatrix, FromPredictions) {
  const std::vector<int> truth = {0, 1, 2};
  const auto m = CorrectnessMatrix::from_predictions({"a", "b"}, {{0, 1, 1}, {2, 1, 2}}, truth);
  EXPECT_EQ(m.column(0), (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_EQ(m.column(1), (std::vector<std::uint8_t>{0, 1, 1}));
  EXPECT_EQ(m.classifiers()[1], "b");
}
