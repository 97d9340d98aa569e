// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/golden.hpp>
#include <insitu/mechanisms.hpp>
#include <insitu/pipeline.hpp>
#include <insitu/server.hpp>
#include <insitu/stats.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <tuple>

namespace py = pybind11;
using namespace insitu;

namespace {

using EventTuple = std::tuple<std::int64_t, int>; // (t_ms, label code)
using InputTuple = std::tuple<std::int64_t, std::string, int>;

InputEvent to_input(const InputTuple &t) {
  return {std::get<0>(t), parse_input_kind(std::get<1>(t)), std::get<2>(t)};
}

py::dict test_dict(const StatTestResult &r) {
  py::dict d;
  d["statistic"] = r.statistic;
  d["df1"] = r.df1;
  d["df2"] = r.df2;
  d["p"] = r.p;
  d["degenerate"] = r.degenerate;
  d["exact"] = r.exact;
  return d;
}

class PyMechanism {
public:
  explicit PyMechanism(const std::string &name) : m_(parse_mechanism(name)) {}

  std::optional<EventTuple> step(std::int64_t t_ms, const std::string &kind, int value) {
    return wrap(m_.step({t_ms, parse_input_kind(kind), value}));
  }
  std::optional<EventTuple> flush(std::int64_t t_end) { return wrap(m_.flush(t_end)); }
  std::string led() const { return std::string(led_name(m_.led())); }
  int label() const { return label_code(m_.current_label()); }
  std::string name() const { return std::string(mechanism_name(m_.id())); }

private:
  static std::optional<EventTuple> wrap(const Emission &e) {
    if (!e)
      return std::nullopt;
    return EventTuple{e->t_ms, label_code(e->label)};
  }
  Mechanism m_;
};

} // namespace

PYBIND11_MODULE(_insitu, m) {
  m.doc() = "Labelling mechanisms, simulation and statistics";

  py::register_exception<Error>(m, "InsituError", PyExc_ValueError);

  m.attr("LABELS") = py::make_tuple("downstairs", "walking", "upstairs");
  m.attr("MECHANISMS") = [] {
    py::list l;
    for (auto id : kAllMechanisms)
      l.append(std::string(mechanism_name(id)));
    return py::tuple(l);
  }();

  py::class_<PyMechanism>(m, "Mechanism")
    .def(py::init<const std::string &>(), py::arg("name"))
    .def("step", &PyMechanism::step, py::arg("t_ms"), py::arg("kind"), py::arg("value") = 0,
         "Feed one input; returns (t_ms, label) when a label is emitted.")
    .def("flush", &PyMechanism::flush, py::arg("t_end"))
    .def_property_readonly("led", &PyMechanism::led)
    .def_property_readonly("label", &PyMechanism::label)
    .def_property_readonly("name", &PyMechanism::name);

  m.def(
    "replay",
    [](const std::string &name, const std::vector<InputTuple> &inputs, std::int64_t t_end) {
      std::vector<InputEvent> in;
      for (const auto &t : inputs)
        in.push_back(to_input(t));
      std::vector<EventTuple> out;
      for (const auto &e : replay(parse_mechanism(name), {}, in, t_end))
        out.emplace_back(e.t_ms, label_code(e.label));
      return out;
    },
    py::arg("mechanism"), py::arg("inputs"), py::arg("t_end"));

  m.def(
    "replay_golden",
    [](const std::string &path) {
      const auto r = replay_golden(load_golden(path));
      return std::make_pair(r.pass, r.message);
    },
    py::arg("path"), "Replays a golden JSONL file; returns (passed, message).");

  m.def("cochran_q",
        [](const std::vector<std::vector<int>> &rows) {
          return test_dict(cochran_q(CorrectnessMatrix::from_rows(rows)));
        });
  m.def("rm_anova_f",
        [](const std::vector<std::vector<int>> &rows) {
          return test_dict(rm_anova_f(CorrectnessMatrix::from_rows(rows)));
        });
  m.def("mcnemar", [](std::size_t b, std::size_t c) { return test_dict(mcnemar_counts(b, c)); },
        py::arg("b"), py::arg("c"));
  m.def("mcnemar_exact_p", &mcnemar_exact_p, py::arg("b"), py::arg("c"));
  m.def("chi2_sf", &chi2_sf, py::arg("x"), py::arg("df"));
  m.def("f_sf", &f_sf, py::arg("x"), py::arg("d1"), py::arg("d2"));

  m.def(
    "window_count",
    [](std::size_t n, int length, double overlap) {
      WindowConfig c;
      c.length = length;
      c.overlap = overlap;
      c.validate();
      return candidate_window_count(n, c);
    },
    py::arg("n"), py::arg("length") = 100, py::arg("overlap") = 20.0);

  m.def(
    "simulate_csv",
    [](const std::string &config_text, const std::string &mechanism, int user) {
      std::istringstream in(config_text);
      const auto cfg = parse_sim_config(in);
      const auto sessions = simulate_mechanism(cfg, parse_mechanism(mechanism));
      return emit_csv(sessions.at(static_cast<std::size_t>(user)).bundle);
    },
    py::arg("config") = "", py::arg("mechanism") = "three_buttons", py::arg("user") = 0,
    "Simulates one user's session and returns it as the standard CSV text.");

  m.def(
    "csv_labels",
    [](const std::string &text) {
      std::vector<int> out;
      for (const auto &s : parse_csv(std::string_view(text)).samples)
        out.push_back(label_code(s.label));
      return out;
    },
    py::arg("text"));

  py::class_<ProtocolSession>(m, "ProtocolSession")
    .def(py::init([](const std::string &output) {
           ServerOptions o;
           o.output = output;
           return ProtocolSession(o);
         }),
         py::arg("output"))
    .def("handle_line", &ProtocolSession::handle_line, py::arg("line"))
    .def("finish", &ProtocolSession::finish)
    .def_property_readonly("recording", &ProtocolSession::recording);
}
