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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>

#include "doctest.h"
#include "pipesched/analysis.hpp"
#include "pipesched/io.hpp"
#include "pipesched/patterns.hpp"
#include "pipesched/presets.hpp"
#include "pipesched/simulator.hpp"
#include "pipesched/static_schedules.hpp"

using namespace pipesched;
using nlohmann::json;

namespace {

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

ProblemSpec base(int p, int m, int n_dc, double alpha = 0.0, double beta = 0.0) {
  UniformOptions o;
  o.n_pp = p;
  o.n_mb = m;
  o.n_dc = n_dc;
  o.alpha = alpha;
  o.beta = beta;
  o.m_d = -1.0;
  o.m_w = 0.0;
  return uniform_problem(o);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("family catalogue") {
  CHECK(family_names().size() == 8);
  CHECK(family_pattern("zbh1") == Pattern::kUD);
  CHECK(family_pattern("cross-wave") == Pattern::kWave);
  CHECK(family_pattern("cross-loop") == Pattern::kLoop);
  CHECK(is_static_family("iv1f1b"));
  CHECK_FALSE(is_static_family("cross-ud"));
  CHECK_THROWS(family_pattern("gpipe"));
}

TEST_CASE("generation by family") {
  const ProblemSpec ud = base(4, 8, 2, 0.5, 0.0);
  SUBCASE("pattern mismatch") {
    CHECK_THROWS_AS(generate_schedule(ud, "zbv"), ValidationError);
  }
  SUBCASE("engine mismatch") {
    GenerateOptions o;
    o.engine = "list";
    CHECK_THROWS_AS(generate_schedule(ud, "cross-ud", o), ValidationError);
    o.engine = "bogus";
    CHECK_THROWS_AS(generate_schedule(ud, "cross-ud", o), ValidationError);
  }
  SUBCASE("sub-block search picks the best count") {
    GenerateOptions o;
    o.n_sub = {1, 2};
    ProblemSpec s = ud;
    s.m_limit = one_f_one_b_peak(s);
    const GeneratedSchedule g = generate_schedule(s, "cross-ud-sub", o);
    double best = 1e300;
    for (int k : {1, 2}) {
      GenerateOptions one;
      one.n_sub = {k};
      best = std::min(best, generate_schedule(s, "cross-ud-sub", one).timeline.metrics.makespan_stage0);
    }
    CHECK(g.timeline.metrics.makespan_stage0 == doctest::Approx(best));
    CHECK(g.plan.family == "cross-ud-sub");
  }
  SUBCASE("wave list engine") {
    const ProblemSpec w = rechunk(base(4, 8, 2, 0.5, 0.0), Pattern::kWave, 2);
    GenerateOptions o;
    o.engine = "list";
    const GeneratedSchedule g = generate_schedule(w, "cross-wave", o);
    CHECK(validate_schedule(build_graph(w), g.plan, w).empty());
    CHECK_FALSE(g.optimal);
  }
}

TEST_CASE("rechunk divides work and memory") {
  const ProblemSpec b = base(4, 8, 2);
  const ProblemSpec w = rechunk(b, Pattern::kWave, 2);
  CHECK(w.n_chunks == 2);
  CHECK(w.t_f[1][1] == doctest::Approx(0.5));
  CHECK(w.m_d[3][0] == doctest::Approx(-0.5));
  CHECK(w.m_limit == b.m_limit);
  CHECK_THROWS_AS(rechunk(w, Pattern::kWave, 2), ValidationError);
  CHECK_THROWS_AS(rechunk(b, Pattern::kWave, 3), ValidationError);
}

TEST_CASE("delay ratios scale with the reference forward time") {
  ProblemSpec b = base(4, 8, 2);
  b.msg_fwd.assign(4, 4.0);
  b.msg_bwd.assign(4, 8.0);
  const ProblemSpec s = with_delay_ratios(b, 0.5, 2.0, 3.0);
  CHECK(s.alpha[0][1] == doctest::Approx(1.5));
  CHECK(s.alpha[1][0] == doctest::Approx(1.5));
  CHECK(s.alpha[0][0] == 0.0);
  CHECK(s.beta[1][0] * 8.0 == doctest::Approx(6.0));
  CHECK(with_delay_ratios(b, 0.0, 0.0, 1.0).beta[0][1] == 0.0);
  CHECK_THROWS_AS(with_delay_ratios(b, -1.0, 0.0, 1.0), ValidationError);
}

TEST_CASE("small delay sweep") {
  SweepConfig c;
  c.base = base(2, 4, 2);
  c.lat_ratios = {0.0, 1.0};
  c.bw_ratios = {0.0, 1.0};
  c.families = {"1f1b", "zbv", "cross-ud-sub", "cross-wave"};
  c.exact.max_nodes = 2000;
  c.workers = 2;
  CHECK(c.epsilon() == doctest::Approx(2.0));
  CHECK(c.global_batch() == doctest::Approx(4.0));
  const auto rows = delay_sweep(c);
  REQUIRE(rows.size() == 16);
  CHECK(std::is_sorted(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.family, a.lat_ratio, a.bw_ratio) < std::tie(b.family, b.lat_ratio, b.bw_ratio);
  }));
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(r.makespan > 0);
    if (r.family == "zbv" && r.lat_ratio == 0 && r.bw_ratio == 0) CHECK(r.slowdown == doctest::Approx(1.0));
  }
  // delays never help a static layout
  auto find = [&](const std::string& f, double l, double b) {
    return *std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) {
      return r.family == f && r.lat_ratio == l && r.bw_ratio == b;
    });
  };
  CHECK(find("1f1b", 1, 1).makespan >= find("1f1b", 0, 0).makespan);
  CHECK(find("cross-wave", 0, 0).engine == "exact");

  const auto csv = lines(sweep_csv(rows));
  REQUIRE(csv.size() == 17);
  CHECK(csv[0] == "family,lat_ratio,bw_ratio,makespan,slowdown,engine,optimal,error");
  CHECK(count(csv[1], ",") == 7);
  CHECK(sweep_csv(rows) == sweep_csv(delay_sweep(c)));
}

TEST_CASE("sweep budgets per pattern") {
  SweepConfig c;
  c.base = base(4, 8, 2);
  const ProblemSpec ud = sweep_cell_spec(c, "cross-ud", 1.0, 1.0);
  CHECK(ud.m_limit == one_f_one_b_peak(c.base));
  CHECK(ud.alpha[0][1] == doctest::Approx(1.0));
  const ProblemSpec w = sweep_cell_spec(c, "cross-wave", 0.0, 0.0);
  CHECK(w.pattern == Pattern::kWave);
  CHECK(w.m_limit == plan_peak_memory(build_static(w, StaticFamily::kZBV), w));
  const ProblemSpec st = sweep_cell_spec(c, "1f1b", 0.0, 0.0);
  CHECK(st.m_limit[0] >= 8.0);
}

TEST_CASE("sweep configuration files") {
  SweepConfig c;
  c.base = base(4, 8, 2);
  c.families = {"zbh1", "cross-ud"};
  c.reference_family = "zbh1";
  c.exact.gap = 0.0;
  c.exact.max_nodes = 1234;
  c.objective = Objective::kStage0Span;
  const json j = sweep_config_to_json(c);
  const SweepConfig back = sweep_config_from_json(j);
  CHECK(sweep_config_to_json(back) == j);
  CHECK(back.exact.max_nodes == 1234);
  CHECK(back.objective == Objective::kStage0Span);

  json bad = j;
  bad["families"] = {"gpipe"};
  CHECK_THROWS(sweep_config_from_json(bad));
  bad = j;
  bad["format"] = "pipesched-ppdp";
  CHECK_THROWS_AS(sweep_config_from_json(bad), ParseError);
}

TEST_CASE("pp-vs-dp calibration") {
  const PPDPConfig c;
  CHECK(c.layers_per_stage() == 8);
  CHECK(c.n_mb() == 32);
  CHECK(c.forward_time() == doctest::Approx(0.109).epsilon(1e-9));
  CHECK(c.message_bytes() == doctest::Approx(8192.0 * 16384 * 64 * 2));
  CHECK(c.dp_bytes() == doctest::Approx(406e9 * 2));
  const ProblemSpec ud = ppdp_problem(c, Pattern::kUD, 64, 0.01);
  CHECK(ud.n_pp == 16);
  CHECK(ud.alpha[0][1] == doctest::Approx(0.01));
  CHECK(ud.beta[0][1] == doctest::Approx(gBps_to_beta(64)));
  CHECK(ud.m_limit == one_f_one_b_peak(ud));
}

TEST_CASE("pp-vs-dp on a small model") {
  PPDPConfig c;
  c.n_pp = 4;
  c.n_dp = 2;
  c.n_layers = 14;
  c.n_params = 1e9;
  c.bandwidths_gBps = {1, 8};
  c.latencies_s = {0.0, 0.05};
  c.greedy_n_sub = {1, 2};
  c.workers = 1;
  const double single = ppdp_single_dc_time(c);
  const auto rows = pp_vs_dp(c);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    const double dp = single + 2 * r.latency_s + c.dp_bytes() * gBps_to_beta(r.bandwidth_gBps);
    CHECK(r.t_dp == doctest::Approx(dp));
    CHECK(r.speedup == doctest::Approx(r.t_dp / r.t_pp));
    CHECK(r.slowdown_vs_single_dc == doctest::Approx(r.t_pp / single));
    CHECK(r.t_pp >= single - 1e-9);
  }
  const auto csv = lines(ppdp_csv(rows));
  CHECK(csv[0] == "bandwidth_gBps,latency_s,t_pp,t_dp,speedup,slowdown_vs_single_dc,pp_family,pp_engine");
  CHECK(csv.size() == 5);

  const json j = ppdp_config_to_json(c);
  CHECK(ppdp_config_to_json(ppdp_config_from_json(j)) == j);
  const PPDPConfig defaults = ppdp_config_from_json(json{{"format", "pipesched-ppdp"}, {"version", 1}});
  CHECK(defaults.n_pp == 16);
  c.n_dc = 1;
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("bubble strides accumulate latency") {
  const ProblemSpec s = base(4, 8, 2);
  const StrideReport r = bubble_stride_demo(s, "1f1b", {0.0, 0.5, 1.0, 1.5});
  REQUIRE(r.points.size() == 4);
  REQUIRE(r.slopes.size() == 3);
  for (double slope : r.slopes) CHECK(slope >= 2.0 - 1e-9);
  for (const auto& p : r.points) {
    CHECK(p.critical_crossings >= 2);
    CHECK(p.svg.rfind("<svg", 0) == 0);
  }
  CHECK(r.points[3].makespan - r.points[0].makespan > 1.5);
  CHECK_THROWS_AS(bubble_stride_demo(s, "cross-ud", {0.0}), ValidationError);
  CHECK_THROWS_AS(bubble_stride_demo(base(4, 8, 1), "1f1b", {0.0}), ValidationError);
}

TEST_CASE("critical path on a single DC has no crossings") {
  const ProblemSpec s = base(4, 8, 1);
  const SchedulePlan plan = build_static(s, StaticFamily::k1F1B);
  const DependencyGraph g = build_graph(s, 1, true);
  CHECK(critical_path_crossings(g, simulate(g, plan, s)) == 0);
}

TEST_CASE("gantt output") {
  const ProblemSpec s = base(4, 8, 2, 0.25, 0.5);
  const Timeline tl = simulate(build_static(s, StaticFamily::k1F1B), s);
  const std::string svg = gantt_svg(tl);
  CHECK(count(svg, "<rect class=\"op-") == 96);
  CHECK(count(svg, "<rect class=\"op-F\"") == 32);
  int wide = 0;
  for (const auto& c : tl.comms) wide += c.end > c.start;
  CHECK(count(svg, "<rect class=\"comm\"") == wide);
  CHECK(count(svg, "<line class=\"dc\"") == 1);
  CHECK(svg == gantt_svg(tl));
  CHECK(svg.find("</svg>") != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "pipesched_test_gantt.svg";
  render_gantt(tl, s, path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == svg);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(render_gantt(tl, base(2, 2, 1), path), ValidationError);
}
