// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/rnn/train.hpp>
#include <insitu/seed.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace insitu::rnn {

namespace {

constexpr std::size_t kEvalChunk = 256;

class Fnv {
public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffU;
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Batches of `size`; a trailing singleton joins the batch before it so that
/// the head batch norm always sees at least two rows.
std::vector<std::span<const std::size_t>> batches_of(std::span<const std::size_t> order,
                                                     std::size_t size) {
  std::vector<std::span<const std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += size)
    out.push_back(order.subspan(start, std::min(size, order.size() - start)));
  if (out.size() > 1 && out.back().size() == 1) {
    const auto merged = out[out.size() - 2].size() + 1;
    out.pop_back();
    out.back() = order.subspan(order.size() - merged, merged);
  }
  return out;
}

} // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size < 1 || epochs < 1 || folds < 2)
    throw Error("train config: learning rate, batch size and epochs must be positive "
                "and folds at least 2");
  if (clip_norm < 0.0 || !(lr_decay > 0.0))
    throw Error("train config: clip norm must be >= 0 and lr decay > 0");
}

std::uint64_t TrainConfig::fingerprint() const {
  Fnv f;
  f.add(learning_rate);
  f.add(static_cast<std::uint64_t>(batch_size));
  f.add(static_cast<std::uint64_t>(epochs));
  f.add(static_cast<std::uint64_t>(folds));
  f.add(seed);
  f.add(static_cast<std::uint64_t>(optimizer));
  f.add(clip_norm);
  f.add(lr_decay);
  return f.value();
}

double TrainHistory::mean_accuracy() const {
  double sum = 0.0;
  int n = 0;
  for (const auto &f : folds)
    if (!f.diverged()) {
      sum += f.test_accuracy;
      ++n;
    }
  return n ? sum / n : 0.0;
}

double TrainHistory::std_accuracy() const {
  const double mean = mean_accuracy();
  double sq = 0.0;
  int n = 0;
  for (const auto &f : folds)
    if (!f.diverged()) {
      sq += (f.test_accuracy - mean) * (f.test_accuracy - mean);
      ++n;
    }
  return n ? std::sqrt(sq / n) : 0.0;
}

double TrainHistory::mean_epoch_seconds() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &f : folds)
    for (const auto &e : f.epochs) {
      sum += e.seconds;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<EpochRecord> TrainHistory::mean_curve() const {
  std::vector<EpochRecord> curve;
  std::vector<int> counts;
  for (const auto &f : folds) {
    if (f.diverged())
      continue;
    if (curve.size() < f.epochs.size()) {
      curve.resize(f.epochs.size());
      counts.resize(f.epochs.size());
    }
    for (std::size_t e = 0; e < f.epochs.size(); ++e) {
      curve[e].loss += f.epochs[e].loss;
      curve[e].accuracy += f.epochs[e].accuracy;
      curve[e].seconds += f.epochs[e].seconds;
      ++counts[e];
    }
  }
  for (std::size_t e = 0; e < curve.size(); ++e) {
    curve[e].loss /= counts[e];
    curve[e].accuracy /= counts[e];
    curve[e].seconds /= counts[e];
  }
  return curve;
}

FitResult fit(std::span<const Window> normalized, std::span<const std::size_t> subset,
              const ModelSpec &spec, const TrainConfig &config, std::uint64_t seed) {
  config.validate();
  spec.validate();
  if (subset.empty())
    throw Error("cannot train on an empty set of windows");

  FitResult out;
  out.model = RnnModel::init(spec, mix_seed(seed, 1));
  Optimizer opt(config.optimizer, out.model.params);
  std::mt19937_64 shuffle_rng(mix_seed(seed, 2));
  std::vector<std::size_t> order(subset.begin(), subset.end());
  double lr = config.learning_rate;
  std::size_t batch_id = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (auto idx : batches_of(order, static_cast<std::size_t>(config.batch_size))) {
      const Batch batch = make_batch(normalized, idx);
      auto lg = loss_and_grads(out.model, batch, batch_id++);
      clip_global_norm(lg.grads, config.clip_norm);
      opt.step(out.model.params, lg.grads, lr);
      update_running_stats(out.model, lg);
      loss_sum += lg.loss * static_cast<double>(idx.size());
      correct += lg.correct;
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto n = static_cast<double>(order.size());
    out.epochs.push_back({loss_sum / n, static_cast<double>(correct) / n, secs});
    lr *= config.lr_decay;
  }
  return out;
}

Evaluation evaluate_normalized(const RnnModel &model, std::span<const Window> normalized,
                               std::span<const std::size_t> subset) {
  Evaluation ev;
  ev.predictions.reserve(subset.size());
  std::size_t correct = 0;
  for (std::size_t start = 0; start < subset.size(); start += kEvalChunk) {
    const auto idx = subset.subspan(start, std::min(kEvalChunk, subset.size() - start));
    const Batch batch = make_batch(normalized, idx);
    const Matrix logits = forward(model, batch, Mode::Infer);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      ev.predictions.push_back(static_cast<int>(arg));
      correct += static_cast<int>(arg) == batch.labels[static_cast<std::size_t>(i)];
    }
  }
  ev.accuracy = subset.empty() ? 0.0
                               : static_cast<double>(correct) /
                                   static_cast<double>(subset.size());
  return ev;
}

Evaluation evaluate(const RnnModel &model, std::span<const Window> windows,
                    const NormStats &norm) {
  const auto normalized = apply_norm(windows, norm);
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return evaluate_normalized(model, normalized, all);
}

TrainResult train(std::span<const Window> windows, const ModelSpec &spec,
                  const TrainConfig &config, const FoldPlan &plan) {
  config.validate();
  if (plan.fold_of.size() != windows.size())
    throw Error("fold plan covers " + std::to_string(plan.fold_of.size()) +
                " windows, dataset has " + std::to_string(windows.size()));

  TrainResult result;
  auto &hist = result.history;
  hist.spec_name = spec.name;
  hist.fold_of = plan.fold_of;
  hist.predictions.assign(windows.size(), -1);

  for (int fold = 0; fold < plan.k; ++fold) {
    const auto train_idx = plan.train_indices(fold);
    const auto test_idx = plan.test_indices(fold);
    FoldHistory fh;
    fh.fold = fold;
    fh.test_size = test_idx.size();

    FoldModel fm;
    fm.norm = fit_norm(windows, train_idx);
    fh.norm_fingerprint = fm.norm.fingerprint();
    const auto normalized = apply_norm(windows, fm.norm);
    try {
      auto fr = fit(normalized, train_idx, spec, config,
                    mix_seed(config.seed, 100 + static_cast<std::uint64_t>(fold)));
      fm.model = std::move(fr.model);
      fh.epochs = std::move(fr.epochs);
      const auto ev = evaluate_normalized(fm.model, normalized, test_idx);
      fh.test_accuracy = ev.accuracy;
      for (std::size_t i = 0; i < test_idx.size(); ++i)
        hist.predictions[test_idx[i]] = ev.predictions[i];
    } catch (const DivergenceError &e) {
      fh.error = "fold " + std::to_string(fold) + " diverged at batch " +
                 std::to_string(e.batch_id()) + ": " + e.what();
    }
    hist.folds.push_back(std::move(fh));
    result.models.push_back(std::move(fm));
  }
  return result;
}

TrainResult train(std::span<const Window> windows, const ModelSpec &spec,
                  const TrainConfig &config) {
  return train(windows, spec, config, stratified_kfold(windows, config.folds, config.seed));
}

} // namespace insitu::rnn
