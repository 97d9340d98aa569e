// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/rnn/model.hpp>

#include <cmath>
#include <random>

namespace insitu::rnn {

namespace {

struct Trace {
  std::vector<BatchNormCache> norm;
  std::vector<RecurrentCache> rec;
  BatchNormCache head_norm;
  Matrix features; // head input after batch norm
};

Matrix run_forward(const RnnModel &m, const Batch &batch, Mode mode, Trace &tr) {
  const auto &spec = m.spec;
  const auto L = spec.layers.size();
  if (batch.x.cols() != spec.input_dim ||
      batch.x.rows() != static_cast<Eigen::Index>(batch.steps) * batch.size)
    throw Error("batch shape does not match the model");
  if (batch.size < 1 || batch.steps < 1)
    throw Error("empty batch");

  tr.norm.resize(L);
  tr.rec.resize(L);
  Matrix x = batch.x;
  for (std::size_t l = 0; l < L; ++l) {
    const auto &layer = m.params.layers[l];
    if (spec.norm_inputs)
      x = mode == Mode::Train ? batchnorm_train(x, layer.norm, tr.norm[l])
                              : batchnorm_infer(x, layer.norm, m.layer_stats[l]);
    x = recurrent_forward(layer.cell, x, batch.steps, batch.size, tr.rec[l]);
  }
  const Matrix last = x.bottomRows(batch.size);
  if (spec.norm_head)
    tr.features = mode == Mode::Train
                    ? batchnorm_train(last, m.params.head.norm, tr.head_norm)
                    : batchnorm_infer(last, m.params.head.norm, m.head_stats);
  else
    tr.features = last;

  Matrix logits = tr.features * m.params.head.weight;
  logits.rowwise() += m.params.head.bias.row(0);
  return logits;
}

void visit(ModelParams &p, const std::function<void(const std::string &, Matrix &)> &f) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto &layer = p.layers[l];
    const std::string base = "layer" + std::to_string(l) + ".";
    const std::string cell = base + std::string(cell_name(layer.cell.cell)) + ".";
    f(base + "norm.gamma", layer.norm.gamma);
    f(base + "norm.beta", layer.norm.beta);
    f(cell + "w_in", layer.cell.w_in);
    f(cell + "w_rec", layer.cell.w_rec);
    f(cell + "bias", layer.cell.bias);
  }
  f("head.norm.gamma", p.head.norm.gamma);
  f("head.norm.beta", p.head.norm.beta);
  f("head.weight", p.head.weight);
  f("head.bias", p.head.bias);
}

} // namespace

ModelSpec ModelSpec::gru(int hidden) {
  ModelSpec s;
  s.name = "gru";
  s.layers = {CellType::Gru, CellType::Gru};
  s.hidden = hidden;
  return s;
}

ModelSpec ModelSpec::lstm(int hidden) {
  ModelSpec s;
  s.name = "lstm";
  s.layers = {CellType::Lstm, CellType::Lstm};
  s.hidden = hidden;
  return s;
}

ModelSpec ModelSpec::stacked(int hidden) {
  ModelSpec s;
  s.name = "stacked";
  s.layers = {CellType::Lstm, CellType::Gru};
  s.hidden = hidden;
  return s;
}

ModelSpec ModelSpec::named(const std::string &name, int hidden) {
  if (name == "gru")
    return gru(hidden);
  if (name == "lstm")
    return lstm(hidden);
  if (name == "stacked")
    return stacked(hidden);
  throw Error("unknown model spec '" + name + "' (expected gru, lstm or stacked)");
}

void ModelSpec::validate() const {
  if (layers.empty())
    throw Error("model needs at least one recurrent layer");
  if (hidden < 1 || input_dim < 1 || classes < 2)
    throw Error("model dimensions must be positive");
}

void ModelParams::for_each(const std::function<void(const std::string &, Matrix &)> &f) {
  visit(*this, f);
}

void ModelParams::for_each(
  const std::function<void(const std::string &, const Matrix &)> &f) const {
  visit(const_cast<ModelParams &>(*this),
        [&f](const std::string &name, Matrix &m) { f(name, m); });
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each([](const std::string &, Matrix &m) { m.setZero(); });
  return z;
}

Eigen::Index ModelParams::size() const {
  Eigen::Index n = 0;
  for_each([&n](const std::string &, const Matrix &m) { n += m.size(); });
  return n;
}

RnnModel RnnModel::zeros(const ModelSpec &spec) {
  spec.validate();
  RnnModel m;
  m.spec = spec;
  Eigen::Index in = spec.input_dim;
  for (auto cell : spec.layers) {
    m.params.layers.push_back(
      {BatchNormParams{Matrix::Zero(1, in), Matrix::Zero(1, in)},
       CellParams::zeros(cell, in, spec.hidden)});
    m.layer_stats.push_back(BatchNormStats::initial(in));
    in = spec.hidden;
  }
  m.params.head.norm = {Matrix::Zero(1, spec.hidden), Matrix::Zero(1, spec.hidden)};
  m.params.head.weight = Matrix::Zero(spec.hidden, spec.classes);
  m.params.head.bias = Matrix::Zero(1, spec.classes);
  m.head_stats = BatchNormStats::initial(spec.hidden);
  return m;
}

RnnModel RnnModel::init(const ModelSpec &spec, std::uint64_t seed) {
  RnnModel m = zeros(spec);
  std::mt19937_64 rng(seed);
  Eigen::Index in = spec.input_dim;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    m.params.layers[l].norm = BatchNormParams::identity(in);
    m.params.layers[l].cell = CellParams::init(spec.layers[l], in, spec.hidden, rng);
    in = spec.hidden;
  }
  m.params.head.norm = BatchNormParams::identity(spec.hidden);
  const double limit = std::sqrt(6.0 / static_cast<double>(spec.hidden + spec.classes));
  std::uniform_real_distribution<double> unif(-limit, limit);
  for (Eigen::Index i = 0; i < m.params.head.weight.rows(); ++i)
    for (Eigen::Index j = 0; j < m.params.head.weight.cols(); ++j)
      m.params.head.weight(i, j) = unif(rng);
  return m;
}

Batch make_batch(std::span<const Window> windows, std::span<const std::size_t> indices) {
  if (indices.empty())
    throw Error("cannot build an empty batch");
  Batch b;
  b.steps = static_cast<int>(windows[indices[0]].values.rows());
  b.size = static_cast<int>(indices.size());
  b.x.resize(static_cast<Eigen::Index>(b.steps) * b.size, kNumChannels);
  b.labels.reserve(indices.size());
  for (int j = 0; j < b.size; ++j) {
    const auto &w = windows[indices[j]];
    if (w.values.rows() != b.steps)
      throw Error("windows in a batch must share one length");
    for (int t = 0; t < b.steps; ++t)
      b.x.row(static_cast<Eigen::Index>(t) * b.size + j) = w.values.row(t);
    b.labels.push_back(label_code(w.label));
  }
  return b;
}

Batch make_batch(std::span<const Window> windows) {
  std::vector<std::size_t> idx(windows.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = i;
  return make_batch(windows, idx);
}

Matrix forward_features(const RnnModel &model, const Batch &batch, Mode mode) {
  Trace tr;
  run_forward(model, batch, mode, tr);
  return tr.features;
}

Matrix forward(const RnnModel &model, const Batch &batch, Mode mode) {
  Trace tr;
  return run_forward(model, batch, mode, tr);
}

Matrix softmax(const Matrix &logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  return (p.array().colwise() / p.rowwise().sum().array()).matrix();
}

LossAndGrads loss_and_grads(const RnnModel &model, const Batch &batch,
                            std::size_t batch_id) {
  const auto &spec = model.spec;
  Trace tr;
  const Matrix logits = run_forward(model, batch, Mode::Train, tr);
  const Eigen::Index B = batch.size;
  if (static_cast<Eigen::Index>(batch.labels.size()) != B)
    throw Error("batch has " + std::to_string(batch.labels.size()) + " labels for " +
                std::to_string(B) + " rows");

  LossAndGrads out;
  out.grads = model.params.zeros_like();

  // log-softmax via log-sum-exp
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Matrix shifted = logits.colwise() - row_max;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  Matrix dlogits = (shifted.array().colwise() - lse.array()).exp().matrix();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const int y = batch.labels[static_cast<std::size_t>(i)];
    loss -= shifted(i, y) - lse(i);
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out.correct += arg == y ? 1 : 0;
    dlogits(i, y) -= 1.0;
  }
  out.loss = loss / static_cast<double>(B);
  if (!std::isfinite(out.loss))
    throw DivergenceError(batch_id, "non-finite loss");
  dlogits /= static_cast<double>(B);

  auto &g = out.grads;
  g.head.weight.noalias() = tr.features.transpose() * dlogits;
  g.head.bias = dlogits.colwise().sum();
  Matrix d_last = dlogits * model.params.head.weight.transpose();
  if (spec.norm_head)
    d_last = batchnorm_backward(d_last, model.params.head.norm, tr.head_norm, g.head.norm);

  Matrix d_out = Matrix::Zero(static_cast<Eigen::Index>(batch.steps) * B, spec.hidden);
  d_out.bottomRows(B) = d_last;
  for (auto l = spec.layers.size(); l-- > 0;) {
    const auto &layer = model.params.layers[l];
    Matrix dx = recurrent_backward(layer.cell, tr.rec[l], d_out, g.layers[l].cell);
    if (spec.norm_inputs)
      dx = batchnorm_backward(dx, layer.norm, tr.norm[l], g.layers[l].norm);
    d_out = std::move(dx);
  }

  if (spec.norm_inputs)
    out.layer_norm = std::move(tr.norm);
  out.head_norm = std::move(tr.head_norm);
  return out;
}

void update_running_stats(RnnModel &model, const LossAndGrads &lg, double momentum) {
  if (model.spec.norm_inputs)
    for (std::size_t l = 0; l < model.layer_stats.size(); ++l)
      update_running_stats(model.layer_stats[l], lg.layer_norm[l], momentum);
  if (model.spec.norm_head)
    update_running_stats(model.head_stats, lg.head_norm, momentum);
}

} // namespace insitu::rnn
