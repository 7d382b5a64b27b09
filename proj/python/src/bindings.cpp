/* Copyright 2026 The pipesched Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "pipesched/analysis.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/io.hpp"
#include "pipesched/patterns.hpp"
#include "pipesched/presets.hpp"
#include "pipesched/simulator.hpp"
#include "pipesched/types.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace pipesched;

namespace {

ProblemSpec problem(const std::string& text) { return problem_from_json(json::parse(text)); }

std::string dump(const json& j) { return j.dump(); }

py::dict violation_dict(const Violation& v) {
  py::dict d;
  d["kind"] = v.kind;
  d["message"] = v.message;
  d["stage"] = v.stage;
  d["op"] = v.op ? py::cast(to_string(*v.op)) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_pipesched, m) {
  m.doc() = "Pipeline schedule generation and simulation under cross-datacenter delays";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<DeadlockError>(m, "DeadlockError", PyExc_RuntimeError);

  m.def(
      "uniform_problem",
      [](int n_pp, int n_mb, const std::string& pattern, int n_chunks, double t_f, double t_d, double t_w,
         double m_f, double m_d, double m_w, double m_limit, int n_dc, double alpha, double beta, double msg) {
        UniformOptions o;
        o.n_pp = n_pp;
        o.n_mb = n_mb;
        o.pattern = parse_pattern(pattern);
        o.n_chunks = n_chunks > 0 ? n_chunks : (o.pattern == Pattern::kUD ? 1 : 2);
        o.t_f = t_f;
        o.t_d = t_d;
        o.t_w = t_w;
        o.m_f = m_f;
        o.m_d = m_d;
        o.m_w = m_w;
        o.m_limit = m_limit;
        o.n_dc = n_dc;
        o.alpha = alpha;
        o.beta = beta;
        o.msg = msg;
        return dump(problem_to_json(uniform_problem(o)));
      },
      py::arg("n_pp") = 4, py::arg("n_mb") = 8, py::arg("pattern") = "UD", py::arg("n_chunks") = 0,
      py::arg("t_f") = 1.0, py::arg("t_d") = 1.0, py::arg("t_w") = 1.0, py::arg("m_f") = 1.0,
      py::arg("m_d") = -0.5, py::arg("m_w") = -0.5, py::arg("m_limit") = 0.0, py::arg("n_dc") = 1,
      py::arg("alpha") = 0.0, py::arg("beta") = 0.0, py::arg("msg") = 1.0);

  m.def("normalize_problem", [](const std::string& text) { return dump(problem_to_json(problem(text))); });
  m.def("rechunk", [](const std::string& text, const std::string& pattern, int n_chunks) {
    return dump(problem_to_json(rechunk(problem(text), parse_pattern(pattern), n_chunks)));
  });

  m.def("family_names", &family_names);

  m.def(
      "generate",
      [](const std::string& text, const std::string& family, const std::string& engine, std::vector<int> n_sub,
         double budget_seconds, long max_nodes, double gap, const std::string& objective) {
        const ProblemSpec spec = problem(text);
        GenerateOptions opt;
        opt.engine = engine;
        opt.n_sub = std::move(n_sub);
        opt.exact.budget_seconds = budget_seconds;
        opt.exact.max_nodes = max_nodes;
        opt.exact.gap = gap;
        opt.objective = parse_objective(objective);
        GeneratedSchedule g;
        {
          py::gil_scoped_release release;
          g = generate_schedule(spec, family, opt);
        }
        return py::make_tuple(dump(schedule_to_json(g.plan)), dump(timeline_to_json(g.timeline)), g.optimal);
      },
      py::arg("problem"), py::arg("family"), py::arg("engine") = "auto", py::arg("n_sub") = std::vector<int>{},
      py::arg("budget_seconds") = 30.0, py::arg("max_nodes") = -1, py::arg("gap") = 0.01,
      py::arg("objective") = "span");

  m.def("simulate", [](const std::string& problem_text, const std::string& schedule_text) {
    const ProblemSpec spec = problem(problem_text);
    const SchedulePlan plan = schedule_from_json(json::parse(schedule_text));
    return dump(timeline_to_json(simulate(plan, spec)));
  });

  m.def("validate_schedule", [](const std::string& problem_text, const std::string& schedule_text) {
    const ProblemSpec spec = problem(problem_text);
    const SchedulePlan plan = schedule_from_json(json::parse(schedule_text));
    const DependencyGraph g = build_graph(spec, plan.n_sub, uses_combined_backward(plan.family));
    py::list out;
    for (const auto& v : validate_schedule(g, plan, spec)) out.append(violation_dict(v));
    return out;
  });

  m.def("gantt_svg", [](const std::string& timeline_text) {
    return gantt_svg(timeline_from_json(json::parse(timeline_text)));
  });

  m.def(
      "lp_text",
      [](const std::string& text, int n_sub, const std::string& objective) {
        const ProblemSpec spec = problem(text);
        const int k = n_sub > 0 ? n_sub : spec.n_sub;
        return lp_text(build_model(build_graph(spec, k, false), spec, parse_objective(objective)));
      },
      py::arg("problem"), py::arg("n_sub") = 0, py::arg("objective") = "span");

  m.def(
      "exact_value",
      [](const std::string& text, const std::string& objective, double gap, long max_nodes) {
        const ProblemSpec spec = problem(text);
        ExactOptions opt;
        opt.gap = gap;
        opt.max_nodes = max_nodes;
        ExactResult r;
        {
          py::gil_scoped_release release;
          r = solve_exact(build_model(build_graph(spec), spec, parse_objective(objective)), opt);
        }
        return py::make_tuple(r.value.primary, r.value.secondary, r.optimal);
      },
      py::arg("problem"), py::arg("objective") = "span", py::arg("gap") = 0.0, py::arg("max_nodes") = -1);

  m.def(
      "delay_sweep",
      [](const std::string& config_text, const std::string& base_dir) {
        const SweepConfig cfg = sweep_config_from_json(json::parse(config_text), base_dir);
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = delay_sweep(cfg);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["family"] = r.family;
          d["lat_ratio"] = r.lat_ratio;
          d["bw_ratio"] = r.bw_ratio;
          d["makespan"] = r.makespan;
          d["slowdown"] = r.slowdown;
          d["engine"] = r.engine;
          d["optimal"] = r.optimal;
          d["error"] = r.error;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("base_dir") = "");

  m.def("pp_vs_dp", [](const std::string& config_text) {
    const PPDPConfig cfg = ppdp_config_from_json(json::parse(config_text));
    std::vector<PPDPRow> rows;
    {
      py::gil_scoped_release release;
      rows = pp_vs_dp(cfg);
    }
    py::list out;
    for (const auto& r : rows) {
      py::dict d;
      d["bandwidth_gBps"] = r.bandwidth_gBps;
      d["latency_s"] = r.latency_s;
      d["t_pp"] = r.t_pp;
      d["t_dp"] = r.t_dp;
      d["speedup"] = r.speedup;
      d["slowdown_vs_single_dc"] = r.slowdown_vs_single_dc;
      d["pp_family"] = r.pp_family;
      d["pp_engine"] = r.pp_engine;
      out.append(d);
    }
    return out;
  });

  m.def("bubble_stride", [](const std::string& text, const std::string& family, const std::vector<double>& lat) {
    const StrideReport r = bubble_stride_demo(problem(text), family, lat);
    py::list out;
    for (const auto& p : r.points) {
      py::dict d;
      d["latency"] = p.latency;
      d["makespan"] = p.makespan;
      d["critical_crossings"] = p.critical_crossings;
      d["svg"] = p.svg;
      out.append(d);
    }
    return py::make_tuple(out, r.slopes);
  });

  py::class_<LinkOccupancy>(m, "LinkOccupancy")
      .def(py::init<>())
      .def("reserve_window", &LinkOccupancy::reserve_window, py::arg("t_ready"), py::arg("width"))
      .def_property_readonly("intervals", &LinkOccupancy::intervals)
      .def("busy_time", &LinkOccupancy::busy_time);

  m.def("preset", [](const std::string& name) {
    const LinkPreset p = preset(name);
    return py::make_tuple(p.alpha, p.beta);
  });
  m.def("preset_names", [] {
    std::vector<std::string> out;
    for (auto n : preset_names()) out.emplace_back(n);
    return out;
  });
  m.def("gbps_to_beta", &gbps_to_beta);
  m.def("gBps_to_beta", &gBps_to_beta);
  m.def("message_size", &message_size);
}
