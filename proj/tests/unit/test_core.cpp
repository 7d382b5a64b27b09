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

#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "pipesched/io.hpp"
#include "pipesched/patterns.hpp"
#include "pipesched/presets.hpp"
#include "pipesched/simulator.hpp"
#include "pipesched/static_schedules.hpp"
#include "pipesched/types.hpp"

using namespace pipesched;
using nlohmann::json;

namespace {

ProblemSpec two_dc(int p = 4, int m = 8) {
  UniformOptions o;
  o.n_pp = p;
  o.n_mb = m;
  o.n_dc = 2;
  o.alpha = 0.25;
  o.beta = 0.5;
  return uniform_problem(o);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pipesched_test_" + name);
}

}  // namespace

TEST_CASE("enum strings round trip") {
  for (Pattern p : {Pattern::kUD, Pattern::kLoop, Pattern::kWave}) CHECK(parse_pattern(to_string(p)) == p);
  for (OpType t : {OpType::kF, OpType::kD, OpType::kW}) CHECK(parse_op_type(to_string(t)) == t);
  for (CommKind k : {CommKind::kPipeline, CommKind::kDpSync, CommKind::kAllgather}) {
    CHECK(parse_comm_kind(to_string(k)) == k);
  }
  CHECK(parse_pattern("wave") == Pattern::kWave);
  CHECK_THROWS_AS(parse_pattern("BD"), UnsupportedError);
  CHECK_THROWS_AS(parse_op_type("B"), ParseError);
}

TEST_CASE("link ids print and parse") {
  const LinkId cross{true, 0, 1};
  const LinkId local{false, 2, 3};
  CHECK(to_string(cross) == "dc0->dc1");
  CHECK(to_string(local) == "s2->s3");
  CHECK(parse_link_id("dc0->dc1") == cross);
  CHECK(parse_link_id("s2->s3") == local);
  CHECK_THROWS_AS(parse_link_id("dc0-dc1"), ParseError);
  CHECK_THROWS_AS(parse_link_id("x0->dc1"), ParseError);
}

TEST_CASE("uniform problems validate and split DCs contiguously") {
  const ProblemSpec s = two_dc(6, 6);
  CHECK_NOTHROW(validate(s));
  CHECK(s.dc_of_stage == std::vector<int>{0, 0, 0, 1, 1, 1});
  CHECK(even_dc_split(5, 2) == std::vector<int>{0, 0, 0, 1, 1});
  CHECK(s.alpha[0][1] == doctest::Approx(0.25));
  CHECK(s.alpha[0][0] == 0.0);
  CHECK(s.forward_time_per_stage() == doctest::Approx(1.0));
  CHECK(s.m_limit[0] == doctest::Approx(6.0));
}

TEST_CASE("validation names the broken invariant") {
  ProblemSpec s = two_dc();
  SUBCASE("UD with chunks") {
    s.n_chunks = 2;
    CHECK_THROWS_WITH_AS(validate(s), "UD pattern requires n_chunks == 1", ValidationError);
  }
  SUBCASE("negative duration") {
    s.t_d[1][0] = -1.0;
    CHECK_THROWS_WITH_AS(validate(s), "durations must be positive and finite", ValidationError);
  }
  SUBCASE("unbalanced memory") {
    s.m_w[0][0] = -0.25;
    CHECK_THROWS_WITH_AS(validate(s), "memory deltas do not sum to zero", ValidationError);
  }
  SUBCASE("limit below one activation") {
    s.m_limit[2] = 0.5;
    CHECK_THROWS_AS(validate(s), ValidationError);
  }
  SUBCASE("non-contiguous DCs") {
    s.dc_of_stage = {0, 1, 0, 1};
    CHECK_THROWS_WITH_AS(validate(s), "non-contiguous DC assignment", ValidationError);
  }
  SUBCASE("negative beta") {
    s.beta[1][0] = -1.0;
    CHECK_THROWS_AS(validate(s), ValidationError);
  }
  SUBCASE("bad zero stage") {
    s.dp_overlap = DpOverlap{1.0, 2, -1};
    CHECK_THROWS_AS(validate(s), ValidationError);
  }
}

TEST_CASE("presets and unit conversions") {
  CHECK(gbps_to_beta(8.0) == doctest::Approx(1e-9));
  CHECK(gBps_to_beta(4.0) == doctest::Approx(0.25e-9));
  CHECK(message_size(1, 4096, 4096, 1, 2) == doctest::Approx(33554432.0));
  CHECK(preset_names().size() == 4);
  const LinkPreset far = preset("cross-region-cloud");
  CHECK(far.alpha >= 30e-3);
  CHECK(far.alpha <= 100e-3);
  CHECK(far.beta > preset("same-campus").beta);
  CHECK_THROWS_AS(preset("moon"), ValidationError);
  CHECK_THROWS_AS(message_size(0, 1, 1, 1, 1), ValidationError);
}

TEST_CASE("problem files round trip") {
  ProblemSpec s = two_dc();
  s.dp_overlap = DpOverlap{1e6, 1, 1};
  const json j = problem_to_json(s);
  const ProblemSpec back = problem_from_json(j);
  CHECK(problem_to_json(back) == j);
  const auto path = temp_file("problem.json");
  save_problem(s, path);
  CHECK(problem_to_json(load_problem(path)) == j);
  std::filesystem::remove(path);
}

TEST_CASE("problem scalar shorthand and presets") {
  const json j = {{"format", "pipesched-problem"}, {"version", 1}, {"n_pp", 2},      {"n_mb", 2},
                  {"pattern", "UD"},               {"t_f", 1},     {"t_d", 1},       {"t_w", 1},
                  {"m_f", 1},                      {"m_d", -1},    {"m_w", 0},       {"m_limit", 2},
                  {"dc_of_stage", {0, 1}},         {"msg_fwd", 8e6}, {"msg_bwd", 8e6},
                  {"link_preset", "cross-region-cloud"}};
  const ProblemSpec s = problem_from_json(j);
  CHECK(s.n_dc() == 2);
  CHECK(s.t_f == Matrix<double>{{1.0}, {1.0}});
  CHECK(s.alpha[0][1] == doctest::Approx(preset("cross-region-cloud").alpha));
  CHECK(s.alpha[1][1] == 0.0);
  CHECK(s.msg_bwd == std::vector<double>{8e6, 8e6});
}

TEST_CASE("malformed files are rejected") {
  json j = problem_to_json(two_dc());
  SUBCASE("wrong format tag") {
    j["format"] = "pipesched-timeline";
    CHECK_THROWS_AS(problem_from_json(j), ParseError);
  }
  SUBCASE("future version") {
    j["version"] = 99;
    CHECK_THROWS_AS(problem_from_json(j), ParseError);
  }
  SUBCASE("missing field") {
    j.erase("t_f");
    CHECK_THROWS_AS(problem_from_json(j), ParseError);
  }
  SUBCASE("invariant violation") {
    j["n_mb"] = 0;
    CHECK_THROWS_AS(problem_from_json(j), ValidationError);
  }
  SUBCASE("not JSON") {
    const auto path = temp_file("garbage.json");
    write_text_file(path, "{ nope");
    CHECK_THROWS_AS(read_json_file(path), ParseError);
    std::filesystem::remove(path);
  }
  CHECK_THROWS(read_json_file(temp_file("does_not_exist.json")));
}

TEST_CASE("schedule files round trip with link orders") {
  const ProblemSpec s = two_dc();
  SchedulePlan plan = build_static(s, StaticFamily::k1F1B);
  const DependencyGraph g = build_graph(s, 1, true);
  TimingEngine::LinkOrder lo;
  const Timeline tl = simulate(g, plan, s);
  for (const auto& r : tl.comms) {
    if (g.comms[r.id].bw_time > 0) lo[r.link].push_back(r.id);
  }
  plan.link_order = link_order_keys(g, lo);
  const json j = schedule_to_json(plan);
  const SchedulePlan back = schedule_from_json(j);
  CHECK(back.stage_order == plan.stage_order);
  CHECK(back.link_order == plan.link_order);
  CHECK(back.family == "1f1b");
  CHECK(schedule_to_json(back) == j);
}

TEST_CASE("timeline files round trip") {
  const ProblemSpec s = two_dc();
  const Timeline tl = simulate(build_static(s, StaticFamily::k1F1B), s);
  const json j = timeline_to_json(tl);
  const Timeline back = timeline_from_json(j);
  CHECK(back.compute.size() == tl.compute.size());
  CHECK(back.comms.size() == tl.comms.size());
  CHECK(back.metrics.makespan_global == doctest::Approx(tl.metrics.makespan_global));
  CHECK(timeline_to_json(back) == j);
  CHECK(dump_canonical(j) == dump_canonical(timeline_to_json(back)));
}
