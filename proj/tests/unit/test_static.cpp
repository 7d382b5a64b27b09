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

#include "doctest.h"
#include "pipesched/patterns.hpp"
#include "pipesched/simulator.hpp"
#include "pipesched/static_schedules.hpp"
#include "pipesched/types.hpp"

using namespace pipesched;

namespace {

ProblemSpec uniform(Pattern pattern, int p, int m, double m_d = -0.5, double m_w = -0.5) {
  UniformOptions o;
  o.pattern = pattern;
  o.n_chunks = pattern == Pattern::kUD ? 1 : 2;
  o.n_pp = p;
  o.n_mb = m;
  o.m_d = m_d;
  o.m_w = m_w;
  if (o.n_chunks == 2) {
    o.t_f = o.t_d = o.t_w = 0.5;
    o.m_f /= 2;
    o.m_d /= 2;
    o.m_w /= 2;
  }
  return uniform_problem(o);
}

Timeline run(const ProblemSpec& s, StaticFamily f) {
  const SchedulePlan plan = build_static(s, f);
  const DependencyGraph g = build_graph(s, 1, uses_combined_backward(plan.family));
  REQUIRE(validate_schedule(g, plan, s).empty());
  return simulate(g, plan, s);
}

}  // namespace

TEST_CASE("family names") {
  for (StaticFamily f : {StaticFamily::k1F1B, StaticFamily::kIV1F1B, StaticFamily::kZBH1, StaticFamily::kZBV}) {
    CHECK(parse_static_family(to_string(f)) == f);
  }
  CHECK(pattern_of(StaticFamily::kIV1F1B) == Pattern::kLoop);
  CHECK(pattern_of(StaticFamily::kZBV) == Pattern::kWave);
  CHECK_THROWS(parse_static_family("gpipe"));
}

TEST_CASE("1F1B matches the slot formula") {
  for (int p : {2, 4, 8}) {
    for (int m : {p, 2 * p, 3 * p}) {
      const Timeline tl = run(uniform(Pattern::kUD, p, m), StaticFamily::k1F1B);
      CHECK(tl.metrics.makespan_global == doctest::Approx(3.0 * (m + p - 1)));
      CHECK(tl.metrics.bubble_ratio[0] == doctest::Approx(double(p - 1) / (m + p - 1)));
    }
  }
}

TEST_CASE("ZB-H1 beats 1F1B at the same peak memory") {
  SUBCASE("activation freed by D") {
    const ProblemSpec s = uniform(Pattern::kUD, 4, 8, -1.0, 0.0);
    CHECK(run(s, StaticFamily::kZBH1).metrics.makespan_global == doctest::Approx(27.0));
    const ProblemSpec s8 = uniform(Pattern::kUD, 8, 16, -1.0, 0.0);
    CHECK(run(s8, StaticFamily::kZBH1).metrics.makespan_global == doctest::Approx(55.0));
  }
  SUBCASE("activation split between D and W") {
    const ProblemSpec s = uniform(Pattern::kUD, 4, 8);
    CHECK(run(s, StaticFamily::kZBH1).metrics.makespan_global == doctest::Approx(30.0));
    const ProblemSpec s8 = uniform(Pattern::kUD, 8, 16);
    CHECK(run(s8, StaticFamily::kZBH1).metrics.makespan_global == doctest::Approx(62.0));
  }
  for (double md : {-1.0, -0.5}) {
    const ProblemSpec s = uniform(Pattern::kUD, 4, 8, md, -1.0 - md);
    const auto zb = plan_peak_memory(build_static(s, StaticFamily::kZBH1), s);
    const auto one = one_f_one_b_peak(s);
    for (int st = 0; st < 4; ++st) CHECK(zb[st] <= one[st] + 1e-9);
  }
}

TEST_CASE("ZB-V is bubble free at zero delay") {
  for (int p : {4, 8}) {
    for (int m : {2 * p, 3 * p}) {
      const ProblemSpec s = uniform(Pattern::kWave, p, m);
      const Timeline tl = run(s, StaticFamily::kZBV);
      for (int st = 0; st < p; ++st) CHECK(tl.metrics.bubble_ratio[st] <= 0.02);
      CHECK(tl.metrics.makespan_global >= 3.0 * m - 1e-9);
    }
  }
}

TEST_CASE("interleaved 1F1B") {
  const ProblemSpec s = uniform(Pattern::kLoop, 4, 8);
  const Timeline il = run(s, StaticFamily::kIV1F1B);
  const Timeline flat = run(uniform(Pattern::kUD, 4, 8), StaticFamily::k1F1B);
  CHECK(il.metrics.makespan_global < flat.metrics.makespan_global);
  // interleaving shrinks the warm-up bubble by the chunk count
  CHECK(il.metrics.makespan_global == doctest::Approx(24.0 + 9.0 / 2));
}

TEST_CASE("static layouts reject unsuitable problems") {
  CHECK_THROWS_AS(build_static(uniform(Pattern::kUD, 4, 8), StaticFamily::kZBV), ValidationError);
  CHECK_THROWS_AS(build_static(uniform(Pattern::kWave, 4, 8), StaticFamily::k1F1B), ValidationError);
  CHECK_THROWS_AS(build_static(uniform(Pattern::kUD, 4, 3), StaticFamily::k1F1B), ValidationError);
  ProblemSpec tight = uniform(Pattern::kUD, 4, 8);
  tight.m_limit.assign(4, 2.0);
  CHECK_THROWS_AS(build_static(tight, StaticFamily::k1F1B), InfeasibleError);
}

TEST_CASE("plan peak memory agrees with simulated peaks") {
  for (StaticFamily f : {StaticFamily::k1F1B, StaticFamily::kIV1F1B, StaticFamily::kZBH1, StaticFamily::kZBV}) {
    const ProblemSpec s = uniform(pattern_of(f), 4, 8);
    const SchedulePlan plan = build_static(s, f);
    const auto peak = plan_peak_memory(plan, s);
    const Timeline tl = run(s, f);
    for (int st = 0; st < 4; ++st) CHECK(peak[st] == doctest::Approx(tl.metrics.peak_memory[st]));
  }
}

TEST_CASE("adaptive wave order stays valid under delays") {
  UniformOptions o;
  o.pattern = Pattern::kWave;
  o.n_chunks = 2;
  o.n_pp = 4;
  o.n_mb = 8;
  o.n_dc = 2;
  o.t_f = o.t_d = o.t_w = 0.5;
  o.m_f = 0.5;
  o.m_d = o.m_w = -0.25;
  for (double a : {0.0, 0.5, 2.0}) {
    o.alpha = a;
    o.beta = a / 2;
    const ProblemSpec s = uniform_problem(o);
    SchedulePlan plan;
    plan.family = "cross-wave";
    plan.stage_order = wave_priority_order(s, false);
    const DependencyGraph g = build_graph(s);
    CHECK(validate_schedule(g, plan, s).empty());
    const auto frozen = wave_priority_order(s, true);
    CHECK(frozen == build_static(s, StaticFamily::kZBV).stage_order);
  }
}
