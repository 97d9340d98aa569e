// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/report.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace insitu {

namespace {

constexpr int kNameWidth = 16;
constexpr int kCellWidth = 12;

std::string pad_left(const std::string &s, int width) {
  return s.size() >= static_cast<std::size_t>(width)
           ? s
           : std::string(static_cast<std::size_t>(width) - s.size(), ' ') + s;
}

std::string pad_right(const std::string &s, int width) {
  return s.size() >= static_cast<std::size_t>(width)
           ? s
           : s + std::string(static_cast<std::size_t>(width) - s.size(), ' ');
}

/// Left-aligned first column, right-aligned fixed-width cells.
std::string row_line(const std::string &name, const std::vector<std::string> &cells) {
  std::string line = pad_right(name, kNameWidth);
  for (const auto &c : cells)
    line += pad_left(c, kCellWidth);
  while (!line.empty() && line.back() == ' ')
    line.pop_back();
  return line + '\n';
}

std::string rule(std::size_t cells) {
  return std::string(static_cast<std::size_t>(kNameWidth) + cells * kCellWidth, '-') + '\n';
}

std::string section(const std::string &title) { return "## " + title + '\n'; }

std::string csv_line(const std::vector<std::string> &fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i)
      s += ',';
    s += fields[i];
  }
  return s + '\n';
}

std::string mech_name(MechanismId m) { return std::string(mechanism_name(m)); }

nlohmann::json test_json(const StatTestResult &t) {
  return {{"statistic", t.statistic}, {"df1", t.df1},
          {"df2", t.df2},             {"p", t.p},
          {"p_adjusted", t.p_adjusted}, {"significant", t.significant},
          {"degenerate", t.degenerate}};
}

StatTestResult test_from_json(const nlohmann::json &j) {
  StatTestResult t;
  // non-finite statistics are stored as null
  t.statistic = j.at("statistic").is_null() ? std::numeric_limits<double>::infinity()
                                            : j.at("statistic").get<double>();
  t.df1 = j.at("df1").get<double>();
  t.df2 = j.at("df2").get<double>();
  t.p = j.at("p").get<double>();
  t.p_adjusted = j.at("p_adjusted").get<double>();
  t.significant = j.at("significant").get<bool>();
  t.degenerate = j.at("degenerate").get<bool>();
  return t;
}

} // namespace

std::string format_fixed(double v, int decimals) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos)
    s.erase(0, 1);
  return s;
}

MechanismComparison compare_runs(MechanismId mechanism, std::vector<int> truth,
                                 std::vector<ModelRun> runs) {
  if (runs.size() < 2)
    throw Error("comparison needs at least two classifiers");
  for (const auto &run : runs) {
    if (run.history.predictions.size() != truth.size())
      throw Error("internal: predictions of '" + run.name + "' do not cover every window");
    if (run.history.fold_of != runs.front().history.fold_of)
      throw Error("internal: fold misalignment between '" + runs.front().name + "' and '" +
                  run.name + "'");
  }

  MechanismComparison mc;
  mc.mechanism = mechanism;
  std::vector<std::string> names;
  std::vector<std::vector<int>> preds;
  for (const auto &run : runs) {
    names.push_back(run.name);
    preds.push_back(run.history.predictions);

    std::vector<int> p;
    std::vector<int> t;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (run.history.predictions[i] >= 0) {
        p.push_back(run.history.predictions[i]);
        t.push_back(truth[i]);
      }
    const auto cm = confusion(p, t);
    std::array<PrecisionRecall, kNumLabels> pl{};
    for (int k = 0; k < kNumLabels; ++k)
      pl[static_cast<std::size_t>(k)] = precision_recall_f1(cm, k);
    mc.per_label.push_back(pl);
  }

  const auto cmat = CorrectnessMatrix::from_predictions(names, preds, truth);
  mc.cochran = cochran_q(cmat);
  mc.anova = rm_anova_f(cmat);
  for (std::size_t a = 0; a < runs.size(); ++a)
    for (std::size_t b = a + 1; b < runs.size(); ++b)
      mc.pairs.push_back({names[a], names[b], mcnemar(cmat.column(a), cmat.column(b))});
  mc.truth = std::move(truth);
  mc.runs = std::move(runs);
  return mc;
}

void finalize_report(ComparisonReport &report) {
  const std::size_t techniques = report.mechanisms.size();
  for (auto &mc : report.mechanisms) {
    apply_bonferroni(mc.cochran, techniques, report.alpha);
    apply_bonferroni(mc.anova, techniques, report.alpha);
    for (auto &pt : mc.pairs)
      apply_bonferroni(pt.result, mc.pairs.size(), report.alpha);
  }
}

std::string render_accuracy_table(const ComparisonReport &r) {
  std::string out = section("Accuracy (mean +/- std over folds)");
  std::vector<std::string> head;
  for (const auto &m : r.models)
    head.push_back(m);
  out += row_line("mechanism", head) + rule(head.size());
  for (const auto &mc : r.mechanisms) {
    std::vector<std::string> cells;
    for (const auto &run : mc.runs)
      cells.push_back(format_fixed(run.history.mean_accuracy(), 3) + "+/-" +
                      format_fixed(run.history.std_accuracy(), 3));
    out += pad_right(mech_name(mc.mechanism), kNameWidth);
    for (const auto &c : cells)
      out += pad_left(c, 2 * kCellWidth - 2);
    out += '\n';
  }
  return out;
}

std::string render_f1_table(const ComparisonReport &r) {
  std::string out = section("F1 per label");
  std::vector<std::string> head;
  for (auto l : kAllLabels)
    head.emplace_back(label_name(l));
  out += row_line("mechanism/model", head) + rule(head.size());
  for (const auto &mc : r.mechanisms)
    for (std::size_t j = 0; j < mc.runs.size(); ++j) {
      std::vector<std::string> cells;
      for (const auto &pr : mc.per_label[j])
        cells.push_back(format_fixed(pr.f1, 2));
      out += row_line(mech_name(mc.mechanism) + "/" + mc.runs[j].name, cells);
    }
  return out;
}

std::string format_omnibus_row(const std::string &technique, const StatTestResult &q,
                              const StatTestResult &f) {
  return row_line(technique,
                  {format_fixed(q.statistic, 3), format_fixed(q.p_adjusted, 3),
                   format_fixed(f.statistic, 3), format_fixed(f.p_adjusted, 3)});
}

std::string render_omnibus_table(const ComparisonReport &r) {
  std::string out = section("Cochran's Q and repeated-measures F (Bonferroni m=" +
                            std::to_string(r.mechanisms.size()) + ")");
  out += row_line("technique", {"Q", "p", "F", "p"}) + rule(4);
  for (const auto &mc : r.mechanisms)
    out += format_omnibus_row(mech_name(mc.mechanism), mc.cochran, mc.anova);
  return out;
}

std::string render_mcnemar_grid(const std::vector<std::string> &names,
                                const std::vector<std::vector<double>> &p) {
  if (p.size() != names.size())
    throw Error("McNemar grid: one row per classifier required");
  std::string out = row_line("", names) + rule(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (p[i].size() != names.size())
      throw Error("McNemar grid must be square");
    std::vector<std::string> cells;
    for (std::size_t j = 0; j < names.size(); ++j)
      cells.push_back(i == j ? "NA" : format_fixed(i < j ? p[i][j] : p[j][i], 3));
    out += row_line(names[i], cells);
  }
  return out;
}

std::string render_pairwise_table(const ComparisonReport &r) {
  std::string out = section("McNemar pairwise p-values (raw; NA on the diagonal)");
  for (const auto &mc : r.mechanisms) {
    const auto n = mc.runs.size();
    std::vector<std::string> names;
    for (const auto &run : mc.runs)
      names.push_back(run.name);
    std::vector<std::vector<double>> grid(n, std::vector<double>(n, 1.0));
    std::size_t k = 0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        grid[a][b] = grid[b][a] = mc.pairs[k++].result.p;
    out += "### " + mech_name(mc.mechanism) + '\n' + render_mcnemar_grid(names, grid);
  }
  return out;
}

std::string render_report(const ComparisonReport &r) {
  return render_accuracy_table(r) + '\n' + render_f1_table(r) + '\n' + render_omnibus_table(r) +
         '\n' + render_pairwise_table(r);
}

std::string accuracy_csv(const ComparisonReport &r) {
  std::string out = csv_line({"mechanism", "model", "mean_accuracy", "std_accuracy", "folds"});
  for (const auto &mc : r.mechanisms)
    for (const auto &run : mc.runs)
      out += csv_line({mech_name(mc.mechanism), run.name,
                       format_fixed(run.history.mean_accuracy(), 6),
                       format_fixed(run.history.std_accuracy(), 6),
                       std::to_string(run.history.folds.size())});
  return out;
}

std::string curves_csv(const ComparisonReport &r) {
  std::string out = csv_line({"mechanism", "model", "fold", "epoch", "loss", "accuracy"});
  for (const auto &mc : r.mechanisms)
    for (const auto &run : mc.runs) {
      const auto mech = mech_name(mc.mechanism);
      for (const auto &f : run.history.folds)
        for (std::size_t e = 0; e < f.epochs.size(); ++e)
          out += csv_line({mech, run.name, std::to_string(f.fold), std::to_string(e + 1),
                           format_fixed(f.epochs[e].loss, 6),
                           format_fixed(f.epochs[e].accuracy, 6)});
      const auto curve = run.history.mean_curve();
      for (std::size_t e = 0; e < curve.size(); ++e)
        out += csv_line({mech, run.name, "mean", std::to_string(e + 1),
                         format_fixed(curve[e].loss, 6), format_fixed(curve[e].accuracy, 6)});
    }
  return out;
}

std::string f1_csv(const ComparisonReport &r) {
  std::string out = csv_line({"mechanism", "model", "label", "precision", "recall", "f1"});
  for (const auto &mc : r.mechanisms)
    for (std::size_t j = 0; j < mc.runs.size(); ++j)
      for (auto l : kAllLabels) {
        const auto &pr = mc.per_label[j][static_cast<std::size_t>(label_code(l))];
        out += csv_line({mech_name(mc.mechanism), mc.runs[j].name, std::string(label_name(l)),
                         format_fixed(pr.precision, 6), format_fixed(pr.recall, 6),
                         format_fixed(pr.f1, 6)});
      }
  return out;
}

std::string cochran_f_csv(const ComparisonReport &r) {
  std::string out = csv_line({"mechanism", "q", "q_df", "q_p", "q_p_adj", "f", "f_df1",
                              "f_df2", "f_p", "f_p_adj", "degenerate"});
  for (const auto &mc : r.mechanisms) {
    const auto &q = mc.cochran;
    const auto &f = mc.anova;
    out += csv_line({mech_name(mc.mechanism), format_fixed(q.statistic, 6),
                     format_fixed(q.df1, 0), format_fixed(q.p, 6), format_fixed(q.p_adjusted, 6),
                     format_fixed(f.statistic, 6), format_fixed(f.df1, 0),
                     format_fixed(f.df2, 0), format_fixed(f.p, 6), format_fixed(f.p_adjusted, 6),
                     q.degenerate || f.degenerate ? "1" : "0"});
  }
  return out;
}

std::string mcnemar_csv(const ComparisonReport &r) {
  std::string out = csv_line(
    {"mechanism", "model_a", "model_b", "b", "c", "statistic", "exact", "p", "p_adj"});
  for (const auto &mc : r.mechanisms)
    for (const auto &pt : mc.pairs)
      out += csv_line({mech_name(mc.mechanism), pt.a, pt.b,
                       std::to_string(pt.result.discordant_b),
                       std::to_string(pt.result.discordant_c),
                       format_fixed(pt.result.statistic, 6), pt.result.exact ? "1" : "0",
                       format_fixed(pt.result.p, 6), format_fixed(pt.result.p_adjusted, 6)});
  return out;
}

std::string results_json(const ComparisonReport &r) {
  using nlohmann::json;
  json mechs = json::array();
  for (const auto &mc : r.mechanisms) {
    json models = json::array();
    for (std::size_t j = 0; j < mc.runs.size(); ++j) {
      const auto &h = mc.runs[j].history;
      json f1 = json::object();
      for (auto l : kAllLabels) {
        const auto &pr = mc.per_label[j][static_cast<std::size_t>(label_code(l))];
        f1[std::string(label_name(l))] = {
          {"precision", pr.precision}, {"recall", pr.recall}, {"f1", pr.f1}};
      }
      json curve = json::array();
      for (const auto &e : h.mean_curve())
        curve.push_back({{"loss", e.loss}, {"accuracy", e.accuracy}});
      json folds = json::array();
      for (const auto &f : h.folds) {
        json epochs = json::array();
        for (const auto &e : f.epochs)
          epochs.push_back({{"loss", e.loss}, {"accuracy", e.accuracy}});
        folds.push_back({{"fold", f.fold},
                         {"test_accuracy", f.test_accuracy},
                         {"test_size", f.test_size},
                         {"error", f.error},
                         {"epochs", epochs}});
      }
      models.push_back({{"name", mc.runs[j].name},
                        {"mean_accuracy", h.mean_accuracy()},
                        {"std_accuracy", h.std_accuracy()},
                        {"folds", folds},
                        {"per_label", f1},
                        {"curve", curve}});
    }
    json pairs = json::array();
    for (const auto &pt : mc.pairs)
      pairs.push_back({{"a", pt.a},
                       {"b", pt.b},
                       {"discordant_b", pt.result.discordant_b},
                       {"discordant_c", pt.result.discordant_c},
                       {"exact", pt.result.exact},
                       {"test", test_json(pt.result)}});
    mechs.push_back({{"mechanism", mech_name(mc.mechanism)},
                     {"windows", mc.truth.size()},
                     {"models", models},
                     {"cochran_q", test_json(mc.cochran)},
                     {"rm_anova_f", test_json(mc.anova)},
                     {"mcnemar", pairs}});
  }
  json doc = {{"alpha", r.alpha},
              {"models", r.models},
              {"f_test", "one-way repeated-measures ANOVA on the correctness matrix"},
              {"bonferroni",
               {{"cochran_f_m", r.mechanisms.size()},
                {"mcnemar_m", r.mechanisms.empty() ? 0 : r.mechanisms.front().pairs.size()}}},
              {"mechanisms", mechs}};
  return doc.dump(2) + '\n';
}

void write_report(const ComparisonReport &r, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  const std::pair<const char *, std::string> files[] = {
    {"report.txt", render_report(r)},     {"accuracy.csv", accuracy_csv(r)},
    {"curves.csv", curves_csv(r)},        {"f1.csv", f1_csv(r)},
    {"cochran_f.csv", cochran_f_csv(r)},  {"mcnemar.csv", mcnemar_csv(r)},
    {"results.json", results_json(r)},
  };
  for (const auto &[name, body] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    if (!out)
      throw Error("failed to write " + (dir / name).string());
  }
}

ComparisonReport parse_results_json(const std::string &text) {
  using nlohmann::json;
  try {
    const auto doc = json::parse(text);
    ComparisonReport r;
    r.alpha = doc.at("alpha").get<double>();
    r.models = doc.at("models").get<std::vector<std::string>>();
    for (const auto &m : doc.at("mechanisms")) {
      MechanismComparison mc;
      mc.mechanism = parse_mechanism(m.at("mechanism").get<std::string>());
      mc.truth.resize(m.at("windows").get<std::size_t>());
      for (const auto &jm : m.at("models")) {
        ModelRun run;
        run.name = jm.at("name").get<std::string>();
        run.history.spec_name = run.name;
        for (const auto &f : jm.at("folds")) {
          rnn::FoldHistory fh;
          fh.fold = f.at("fold").get<int>();
          fh.test_accuracy = f.at("test_accuracy").get<double>();
          fh.test_size = f.at("test_size").get<std::size_t>();
          fh.error = f.at("error").get<std::string>();
          // wall-clock seconds are left out of the JSON so reruns stay byte-identical
          for (const auto &e : f.value("epochs", json::array()))
            fh.epochs.push_back({e.at("loss").get<double>(), e.at("accuracy").get<double>(), 0.0});
          run.history.folds.push_back(std::move(fh));
        }
        std::array<PrecisionRecall, kNumLabels> pl{};
        for (auto l : kAllLabels) {
          const auto &e = jm.at("per_label").at(std::string(label_name(l)));
          pl[static_cast<std::size_t>(label_code(l))] = {
            e.at("precision").get<double>(), e.at("recall").get<double>(),
            e.at("f1").get<double>()};
        }
        mc.per_label.push_back(pl);
        mc.runs.push_back(std::move(run));
      }
      mc.cochran = test_from_json(m.at("cochran_q"));
      mc.anova = test_from_json(m.at("rm_anova_f"));
      for (const auto &p : m.at("mcnemar")) {
        PairwiseTest pt{p.at("a").get<std::string>(), p.at("b").get<std::string>(),
                        test_from_json(p.at("test"))};
        pt.result.discordant_b = p.at("discordant_b").get<std::size_t>();
        pt.result.discordant_c = p.at("discordant_c").get<std::size_t>();
        pt.result.exact = p.at("exact").get<bool>();
        mc.pairs.push_back(std::move(pt));
      }
      r.mechanisms.push_back(std::move(mc));
    }
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw Error(std::string("malformed results.json: ") + e.what());
  }
}

ComparisonReport load_results(const std::filesystem::path &dir) {
  std::ifstream in(dir / "results.json", std::ios::binary);
  if (!in)
    throw Error("cannot open " + (dir / "results.json").string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_results_json(ss.str());
}

std::string render_rates_table(const std::vector<RateRow> &rows) {
  std::string out = section("Labelling rates (per minute)");
  std::vector<std::string> head{"labels", "changes", "rate", "chg_rate"};
  for (auto l : kAllLabels)
    head.emplace_back(label_name(l));
  out += row_line("mechanism", head) + rule(head.size());
  for (const auto &[name, s] : rows) {
    std::vector<std::string> cells{std::to_string(s.total), std::to_string(s.changes),
                                   format_fixed(s.rate_per_min, 2),
                                   format_fixed(s.change_rate_per_min, 2)};
    for (double v : s.label_rate_per_min)
      cells.push_back(format_fixed(v, 2));
    out += row_line(name, cells);
  }
  return out;
}

std::string rates_csv(const std::vector<RateRow> &rows) {
  std::vector<std::string> head{"mechanism", "total", "changes", "duration_s", "rate_per_min",
                                "change_rate_per_min"};
  for (auto l : kAllLabels) {
    head.push_back(std::string(label_name(l)) + "_count");
    head.push_back(std::string(label_name(l)) + "_per_min");
  }
  std::string out = csv_line(head);
  for (const auto &[name, s] : rows) {
    std::vector<std::string> f{name, std::to_string(s.total), std::to_string(s.changes),
                               format_fixed(s.duration_s, 3), format_fixed(s.rate_per_min, 6),
                               format_fixed(s.change_rate_per_min, 6)};
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      f.push_back(std::to_string(s.counts[k]));
      f.push_back(format_fixed(s.label_rate_per_min[k], 6));
    }
    out += csv_line(f);
  }
  return out;
}

} // namespace insitu
