// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/golden.hpp>

#include <deque>
#include <fstream>
#include <istream>
#include <ostream>

namespace insitu {

using nlohmann::json;

json input_to_json(const InputEvent &e) {
  return json{{"type", "input"},
              {"t_ms", e.t_ms},
              {"kind", input_kind_name(e.kind)},
              {"value", e.value}};
}

InputEvent input_from_json(const json &j) {
  InputEvent e;
  e.t_ms = j.at("t_ms").get<std::int64_t>();
  e.kind = parse_input_kind(j.at("kind").get<std::string>());
  if (j.contains("value")) {
    const auto &v = j.at("value");
    // taps may name the label instead of giving its code
    e.value = v.is_string() ? label_code(parse_label_name(v.get<std::string>())) : v.get<int>();
  }
  return e;
}

GoldenVector parse_golden(std::istream &in) {
  GoldenVector g;
  bool have_config = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    json j;
    try {
      j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "config") {
        g.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
        g.name = j.value("name", std::string{});
        have_config = true;
      } else if (!have_config) {
        throw Error("golden vector must start with a config line");
      } else if (type == "input") {
        g.steps.emplace_back(input_from_json(j));
      } else if (type == "emit") {
        g.steps.emplace_back(LabelEvent{j.at("t_ms").get<std::int64_t>(),
                                        activity_from_code(j.at("label").get<int>()),
                                        g.mechanism});
      } else if (type == "flush") {
        g.steps.emplace_back(GoldenFlush{j.at("t_ms").get<std::int64_t>()});
      } else {
        throw Error("unknown line type '" + type + "'");
      }
    } catch (const ParseError &) {
      throw;
    } catch (const std::exception &ex) {
      throw ParseError(lineno, ex.what());
    }
  }
  if (!have_config)
    throw ParseError(lineno + 1, "golden vector has no config line");
  return g;
}

GoldenVector load_golden(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open golden vector " + path.string());
  auto g = parse_golden(in);
  if (g.name.empty())
    g.name = path.stem().string();
  return g;
}

void write_golden(const GoldenVector &g, std::ostream &out) {
  out << json{{"type", "config"}, {"mechanism", mechanism_name(g.mechanism)},
              {"name", g.name}}
           .dump()
      << '\n';
  for (const auto &step : g.steps) {
    if (auto *in = std::get_if<InputEvent>(&step))
      out << input_to_json(*in).dump() << '\n';
    else if (auto *ev = std::get_if<LabelEvent>(&step))
      out << json{{"type", "emit"}, {"t_ms", ev->t_ms}, {"label", label_code(ev->label)}}
               .dump()
          << '\n';
    else
      out << json{{"type", "flush"}, {"t_ms", std::get<GoldenFlush>(step).t_ms}}.dump()
          << '\n';
  }
}

std::vector<InputEvent> golden_inputs(const GoldenVector &g) {
  std::vector<InputEvent> out;
  for (const auto &s : g.steps)
    if (auto *in = std::get_if<InputEvent>(&s))
      out.push_back(*in);
  return out;
}

std::vector<LabelEvent> golden_expected(const GoldenVector &g) {
  std::vector<LabelEvent> out;
  for (const auto &s : g.steps)
    if (auto *ev = std::get_if<LabelEvent>(&s))
      out.push_back(*ev);
  return out;
}

GoldenResult replay_golden(const GoldenVector &g) {
  GoldenResult r;
  Mechanism m(g.mechanism);
  std::deque<LabelEvent> produced;

  auto fail = [&r](std::string msg) {
    if (r.pass) {
      r.pass = false;
      r.message = std::move(msg);
    }
  };

  for (std::size_t i = 0; i < g.steps.size(); ++i) {
    const auto &step = g.steps[i];
    if (auto *in = std::get_if<InputEvent>(&step)) {
      if (!produced.empty())
        fail("unexpected emission before step " + std::to_string(i));
      produced.clear();
      try {
        if (auto ev = m.step(*in)) {
          produced.push_back(*ev);
          r.emitted.push_back(*ev);
        }
      } catch (const std::exception &ex) {
        fail("step " + std::to_string(i) + " rejected: " + ex.what());
      }
    } else if (auto *fl = std::get_if<GoldenFlush>(&step)) {
      if (!produced.empty())
        fail("unexpected emission before flush");
      produced.clear();
      if (auto ev = m.flush(fl->t_ms)) {
        produced.push_back(*ev);
        r.emitted.push_back(*ev);
      }
    } else {
      const auto &want = std::get<LabelEvent>(step);
      if (produced.empty()) {
        fail("missing emission t=" + std::to_string(want.t_ms) + " label=" +
             std::to_string(label_code(want.label)));
        continue;
      }
      const auto got = produced.front();
      produced.pop_front();
      if (got.t_ms != want.t_ms || got.label != want.label)
        fail("expected t=" + std::to_string(want.t_ms) + " label=" +
             std::to_string(label_code(want.label)) + ", got t=" +
             std::to_string(got.t_ms) + " label=" + std::to_string(label_code(got.label)));
    }
  }
  if (!produced.empty())
    fail("unexpected trailing emission");
  return r;
}

} // namespace insitu
