// SPDX-License-Identifier: Apache-2.0
#include <insitu/dataset.hpp>
#include <insitu/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

namespace insitu {

int WindowConfig::overlap_samples() const {
  if (overlap_mode == OverlapMode::Percent)
    return static_cast<int>(std::lround(overlap / 100.0 * length));
  return static_cast<int>(std::lround(overlap));
}

int WindowConfig::step() const { return length - overlap_samples(); }

void WindowConfig::validate() const {
  if (length < 1)
    throw Error("window length must be positive");
  const int ov = overlap_samples();
  if (ov < 0 || ov >= length)
    throw Error("window overlap must satisfy 0 <= overlap < length");
  if (!(purity_min >= 0.0 && purity_min <= 1.0))
    throw Error("purity_min must be in [0,1]");
}

std::size_t candidate_window_count(std::size_t n, const WindowConfig &cfg) {
  const auto t = static_cast<std::size_t>(cfg.length);
  if (n < t)
    return 0;
  return (n - t) / static_cast<std::size_t>(cfg.step()) + 1;
}

std::vector<Window> make_windows(std::span<const LabelledSample> samples,
                                 const WindowConfig &cfg, const StreamMeta &meta) {
  cfg.validate();
  std::vector<Window> out;
  const auto t_len = static_cast<std::size_t>(cfg.length);
  const auto step = static_cast<std::size_t>(cfg.step());
  const auto count = candidate_window_count(samples.size(), cfg);

  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * step;
    std::array<std::size_t, kNumLabels> counts{};
    std::array<std::size_t, kNumLabels> last_seen{};
    bool complete = true;
    for (std::size_t i = 0; i < t_len; ++i) {
      const auto &l = samples[start + i].label;
      if (!l) {
        complete = false;
        break;
      }
      ++counts[label_code(*l)];
      last_seen[label_code(*l)] = i;
    }
    if (!complete)
      continue;

    int best = -1;
    for (int l = 0; l < kNumLabels; ++l) {
      if (counts[l] == 0)
        continue;
      if (best < 0 || counts[l] > counts[best] ||
          (counts[l] == counts[best] && last_seen[l] > last_seen[best]))
        best = l;
    }
    const double purity = static_cast<double>(counts[best]) / static_cast<double>(t_len);
    if (purity < cfg.purity_min)
      continue;

    Window win;
    win.values.resize(cfg.length, kNumChannels);
    for (std::size_t i = 0; i < t_len; ++i) {
      const auto ch = samples[start + i].frame.channels();
      for (int c = 0; c < kNumChannels; ++c)
        win.values(static_cast<Eigen::Index>(i), c) = ch[c];
    }
    win.label = static_cast<ActivityLabel>(best);
    win.user_id = meta.user_id;
    win.mechanism = meta.mechanism;
    win.start_t_ms = samples[start].frame.t_ms;
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<Window> make_windows(const StreamBundle &bundle, const WindowConfig &cfg) {
  return make_windows(bundle.samples, cfg, bundle.meta);
}

std::uint64_t NormStats::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  for (double v : mean)
    mix(v);
  for (double v : stddev)
    mix(v);
  return h;
}

NormStats fit_norm(std::span<const Window> windows,
                   std::span<const std::size_t> subset) {
  NormStats st;
  std::size_t rows = 0;
  Eigen::Array<double, 1, kNumChannels> sum = Eigen::Array<double, 1, kNumChannels>::Zero();
  for (auto i : subset) {
    sum += windows[i].values.colwise().sum().array();
    rows += static_cast<std::size_t>(windows[i].values.rows());
  }
  if (rows == 0)
    throw Error("cannot fit normalisation on zero windows");
  const Eigen::Array<double, 1, kNumChannels> mean = sum / static_cast<double>(rows);

  Eigen::Array<double, 1, kNumChannels> sq = Eigen::Array<double, 1, kNumChannels>::Zero();
  for (auto i : subset)
    sq += (windows[i].values.array().rowwise() - mean).square().colwise().sum();
  const Eigen::Array<double, 1, kNumChannels> var = sq / static_cast<double>(rows);

  for (int c = 0; c < kNumChannels; ++c) {
    st.mean[c] = mean(c);
    st.stddev[c] = std::sqrt(var(c));
  }
  return st;
}

NormStats fit_norm(std::span<const Window> windows) {
  std::vector<std::size_t> all(windows.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = i;
  return fit_norm(windows, all);
}

void apply_norm(Window &w, const NormStats &st) {
  for (int c = 0; c < kNumChannels; ++c) {
    const double scale = std::max(st.stddev[c], kNormEpsilon);
    w.values.col(c) = (w.values.col(c).array() - st.mean[c]) / scale;
  }
}

std::vector<Window> apply_norm(std::span<const Window> windows, const NormStats &st) {
  std::vector<Window> out(windows.begin(), windows.end());
  for (auto &w : out)
    apply_norm(w, st);
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold)
      out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold)
      out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
  for (int f : fold_of)
    ++out[static_cast<std::size_t>(f)];
  return out;
}

FoldPlan stratified_kfold(std::span<const ActivityLabel> labels, int k,
                          std::uint64_t seed) {
  if (k < 2)
    throw Error("k-fold needs k >= 2");
  std::array<std::vector<std::size_t>, kNumLabels> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[label_code(labels[i])].push_back(i);
  for (auto l : kAllLabels)
    if (by_class[label_code(l)].size() < static_cast<std::size_t>(k))
      throw Error("class " + std::string(label_name(l)) + " has " +
                  std::to_string(by_class[label_code(l)].size()) +
                  " windows, fewer than k=" + std::to_string(k));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of.assign(labels.size(), -1);
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (auto &members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto i : members)
      plan.fold_of[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan stratified_kfold(std::span<const Window> windows, int k, std::uint64_t seed) {
  const auto labels = window_labels(windows);
  return stratified_kfold(std::span<const ActivityLabel>(labels), k, seed);
}

std::pair<std::vector<Window>, std::vector<Window>>
split_by_user(std::span<const Window> windows, const std::string &user_id) {
  std::pair<std::vector<Window>, std::vector<Window>> out;
  for (const auto &w : windows)
    (w.user_id == user_id ? out.first : out.second).push_back(w);
  if (out.first.empty())
    throw Error("no windows for user '" + user_id + "'");
  return out;
}

std::vector<std::string> user_ids(std::span<const Window> windows) {
  std::set<std::string> ids;
  for (const auto &w : windows)
    ids.insert(w.user_id);
  return {ids.begin(), ids.end()};
}

std::vector<ActivityLabel> window_labels(std::span<const Window> windows) {
  std::vector<ActivityLabel> out;
  out.reserve(windows.size());
  for (const auto &w : windows)
    out.push_back(w.label);
  return out;
}

std::vector<Window> permute_labels(std::span<const Window> windows, std::uint64_t seed) {
  auto labels = window_labels(windows);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<Window> out(windows.begin(), windows.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].label = labels[i];
  return out;
}

std::vector<Window> balance_classes(std::span<const Window> windows, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumLabels> by_class;
  for (std::size_t i = 0; i < windows.size(); ++i)
    by_class[static_cast<std::size_t>(label_code(windows[i].label))].push_back(i);
  std::size_t keep = windows.size();
  for (const auto &c : by_class)
    keep = std::min(keep, c.size());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (auto &c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    chosen.insert(chosen.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Window> out;
  out.reserve(chosen.size());
  for (auto i : chosen)
    out.push_back(windows[i]);
  return out;
}

void write_windows_jsonl(std::span<const Window> windows, std::ostream &out) {
  for (const auto &w : windows) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.values.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < kNumChannels; ++c)
        row.push_back(w.values(r, c));
      rows.push_back(std::move(row));
    }
    out << nlohmann::json{{"start_t_ms", w.start_t_ms},
                          {"label", label_code(w.label)},
                          {"user", w.user_id},
                          {"mechanism", mechanism_name(w.mechanism)},
                          {"values", std::move(rows)}}
             .dump()
        << '\n';
  }
}

} // namespace insitu
