// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/rnn/checkpoint.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace insitu::rnn {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix &m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json &j, const Matrix &like, const std::string &name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows != like.rows() || cols != like.cols() ||
      static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw Error("checkpoint tensor '" + name + "' has the wrong shape");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json stats_to_json(const BatchNormStats &s) {
  return {{"mean", matrix_to_json(s.mean)}, {"var", matrix_to_json(s.var)}};
}

BatchNormStats stats_from_json(const json &j, const BatchNormStats &like) {
  return {matrix_from_json(j.at("mean"), like.mean, "mean"),
          matrix_from_json(j.at("var"), like.var, "var")};
}

json spec_to_json(const ModelSpec &s) {
  std::vector<std::string> layers;
  for (auto c : s.layers)
    layers.emplace_back(cell_name(c));
  return {{"name", s.name},           {"layers", layers},
          {"hidden", s.hidden},       {"input_dim", s.input_dim},
          {"classes", s.classes},     {"norm_inputs", s.norm_inputs},
          {"norm_head", s.norm_head}};
}

ModelSpec spec_from_json(const json &j) {
  ModelSpec s;
  s.name = j.at("name").get<std::string>();
  s.layers.clear();
  for (const auto &l : j.at("layers"))
    s.layers.push_back(parse_cell(l.get<std::string>()));
  s.hidden = j.at("hidden").get<int>();
  s.input_dim = j.at("input_dim").get<int>();
  s.classes = j.at("classes").get<int>();
  s.norm_inputs = j.at("norm_inputs").get<bool>();
  s.norm_head = j.at("norm_head").get<bool>();
  s.validate();
  return s;
}

} // namespace

void write_checkpoint(const Checkpoint &ckpt, std::ostream &out) {
  json params = json::object();
  ckpt.model.params.for_each(
    [&params](const std::string &name, const Matrix &m) { params[name] = matrix_to_json(m); });
  json layer_stats = json::array();
  for (const auto &s : ckpt.model.layer_stats)
    layer_stats.push_back(stats_to_json(s));
  json doc = {
    {"spec", spec_to_json(ckpt.model.spec)},
    {"config_fingerprint", ckpt.config_fingerprint},
    {"norm", {{"mean", ckpt.norm.mean}, {"stddev", ckpt.norm.stddev}}},
    {"params", params},
    {"layer_stats", layer_stats},
    {"head_stats", stats_to_json(ckpt.model.head_stats)},
  };
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n' << doc.dump() << '\n';
  if (!out)
    throw Error("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream &in) {
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  hs >> magic >> version;
  if (magic != kCheckpointMagic)
    throw Error("not a checkpoint (bad magic header)");
  if (version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version));

  json doc;
  try {
    doc = json::parse(in);
    Checkpoint ck;
    ck.model = RnnModel::zeros(spec_from_json(doc.at("spec")));
    ck.config_fingerprint = doc.at("config_fingerprint").get<std::uint64_t>();
    ck.norm.mean = doc.at("norm").at("mean").get<std::array<double, kNumChannels>>();
    ck.norm.stddev = doc.at("norm").at("stddev").get<std::array<double, kNumChannels>>();
    const auto &params = doc.at("params");
    ck.model.params.for_each([&params](const std::string &name, Matrix &m) {
      m = matrix_from_json(params.at(name), m, name);
    });
    const auto &ls = doc.at("layer_stats");
    if (ls.size() != ck.model.layer_stats.size())
      throw Error("checkpoint layer statistics do not match the spec");
    for (std::size_t l = 0; l < ls.size(); ++l)
      ck.model.layer_stats[l] = stats_from_json(ls[l], ck.model.layer_stats[l]);
    ck.model.head_stats = stats_from_json(doc.at("head_stats"), ck.model.head_stats);
    return ck;
  } catch (const json::exception &e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

} // namespace insitu::rnn
