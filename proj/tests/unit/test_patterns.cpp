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

#include <set>

#include "doctest.h"
#include "pipesched/patterns.hpp"
#include "pipesched/types.hpp"
#include "support/oracles.hpp"

using namespace pipesched;

namespace {

ProblemSpec spec_for(Pattern pattern, int p, int m, int n_dc) {
  UniformOptions o;
  o.pattern = pattern;
  o.n_chunks = pattern == Pattern::kUD ? 1 : 2;
  o.n_pp = p;
  o.n_mb = m;
  o.n_dc = n_dc;
  o.alpha = 0.5;
  o.beta = 0.25;
  o.msg = 2.0;
  return uniform_problem(o);
}

}  // namespace

TEST_CASE("forward paths") {
  using P = std::vector<std::pair<int, int>>;
  CHECK(forward_path(spec_for(Pattern::kUD, 3, 3, 1)) == P{{0, 0}, {1, 0}, {2, 0}});
  CHECK(forward_path(spec_for(Pattern::kLoop, 3, 3, 1)) ==
        P{{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}});
  CHECK(forward_path(spec_for(Pattern::kWave, 3, 3, 1)) ==
        P{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}});
}

TEST_CASE("cross-DC transfers per microbatch by pattern") {
  CHECK(cross_dc_comms_per_microbatch(spec_for(Pattern::kUD, 4, 4, 2)) == 2);
  CHECK(cross_dc_comms_per_microbatch(spec_for(Pattern::kWave, 4, 4, 2)) == 4);
  CHECK(cross_dc_comms_per_microbatch(spec_for(Pattern::kLoop, 4, 4, 2)) == 6);
  CHECK(cross_dc_comms_per_microbatch(spec_for(Pattern::kUD, 4, 4, 1)) == 0);
  CHECK(cross_dc_comms_per_microbatch(spec_for(Pattern::kUD, 4, 4, 4)) == 6);
}

TEST_CASE("graph shape matches the pattern") {
  for (Pattern pat : {Pattern::kUD, Pattern::kLoop, Pattern::kWave}) {
    const ProblemSpec s = spec_for(pat, 4, 5, 2);
    const DependencyGraph g = build_true_deps(s);
    const auto path = forward_path(s);
    const int len = static_cast<int>(path.size());
    CHECK(g.compute.size() == static_cast<std::size_t>(3 * len * s.n_mb));
    int stage_changes = 0;
    int cross = 0;
    for (int i = 1; i < len; ++i) {
      if (path[i].first != path[i - 1].first) ++stage_changes;
      if (s.dc_of_stage[path[i].first] != s.dc_of_stage[path[i - 1].first]) ++cross;
    }
    CHECK(g.comms.size() == static_cast<std::size_t>(2 * stage_changes * s.n_mb));
    int cross_comms = 0;
    for (const auto& c : g.comms) {
      if (c.link.cross_dc) {
        ++cross_comms;
        CHECK(c.latency == doctest::Approx(0.5));
        CHECK(c.bw_time == doctest::Approx(0.5));
      } else {
        CHECK(c.latency == 0.0);
        CHECK(c.bw_time == 0.0);
        CHECK(c.link == LinkId{false, c.src_stage, c.dst_stage});
      }
    }
    CHECK(cross_comms == 2 * cross * s.n_mb);
  }
}

TEST_CASE("true dependencies are acyclic and chain each microbatch") {
  const ProblemSpec s = spec_for(Pattern::kWave, 3, 3, 2);
  const DependencyGraph g = build_true_deps(s);
  const auto reach = oracle::reachability(g);
  for (std::size_t i = 0; i < g.compute.size(); ++i) CHECK_FALSE(reach[i][i]);
  for (const auto& op : g.compute) {
    const OpKey k = op.key;
    if (k.type == OpType::kW) {
      const int d = *g.find(OpKey{k.stage, k.chunk, OpType::kD, k.mb, 0});
      CHECK(reach[d][op.id]);
    }
    const int first_f = *g.find(OpKey{0, 0, OpType::kF, k.mb, 0});
    if (op.id != first_f) CHECK(reach[first_f][op.id]);
  }
  // different microbatches are independent
  const int a = *g.find(OpKey{0, 0, OpType::kF, 0, 0});
  const int b = *g.find(OpKey{0, 1, OpType::kW, 1, 0});
  CHECK_FALSE(reach[a][b]);
}

TEST_CASE("combined backward waits for W before sending the gradient") {
  const ProblemSpec s = spec_for(Pattern::kUD, 2, 1, 1);
  const DependencyGraph split = build_true_deps(s, false);
  const DependencyGraph joined = build_true_deps(s, true);
  const int d0s = *split.find(OpKey{0, 0, OpType::kD, 0, 0});
  const int d0j = *joined.find(OpKey{0, 0, OpType::kD, 0, 0});
  const auto& cs = split.comms[split.compute_preds[d0s].front().id];
  const auto& cj = joined.comms[joined.compute_preds[d0j].front().id];
  CHECK(split.compute[cs.producer].key.type == OpType::kD);
  CHECK(joined.compute[cj.producer].key.type == OpType::kW);
  CHECK(uses_combined_backward("1f1b"));
  CHECK(uses_combined_backward("iv1f1b"));
  CHECK_FALSE(uses_combined_backward("zbh1"));
}

TEST_CASE("sub-block expansion preserves totals") {
  const ProblemSpec s = spec_for(Pattern::kUD, 3, 4, 2);
  const DependencyGraph g = build_true_deps(s);
  for (int n_sub : {1, 2, 3}) {
    const DependencyGraph e = expand_sub_blocks(g, n_sub);
    REQUIRE(e.compute.size() == g.compute.size() * n_sub);
    CHECK(e.comms.size() == g.comms.size());
    for (const auto& op : g.compute) {
      double dur = 0.0, mem = 0.0;
      for (int j = 0; j < n_sub; ++j) {
        OpKey k = op.key;
        k.sub = j;
        const auto id = e.find(k);
        REQUIRE(id);
        dur += e.compute[*id].duration;
        mem += e.compute[*id].mem_delta;
        if (j > 0) {
          OpKey prev = k;
          prev.sub = j - 1;
          CHECK(e.compute_preds[*id] == std::vector<PredRef>{PredRef{false, *e.find(prev)}});
        }
      }
      CHECK(dur == doctest::Approx(op.duration));
      CHECK(mem == doctest::Approx(op.mem_delta));
    }
    for (const auto& c : e.comms) {
      CHECK(e.compute[c.producer].key.sub == n_sub - 1);
      CHECK(e.compute[c.consumer].key.sub == 0);
    }
  }
  CHECK_THROWS_AS(expand_sub_blocks(expand_sub_blocks(g, 2), 2), ValidationError);
  CHECK_THROWS_AS(expand_sub_blocks(g, 0), ValidationError);
}

TEST_CASE("data-parallel synchronization ops") {
  ProblemSpec s = spec_for(Pattern::kWave, 4, 4, 2);
  s.dp_overlap = DpOverlap{8.0, 1, 0};
  const DependencyGraph g = build_graph(s);
  int syncs = 0, gathers = 0;
  for (const auto& c : g.comms) {
    if (c.kind == CommKind::kDpSync) {
      ++syncs;
      const OpKey k = g.compute[c.producer].key;
      CHECK(k.type == OpType::kW);
      CHECK(k.mb == s.n_mb - 1);
      CHECK(c.consumer == -1);
      const int dc = s.dc_of_stage[c.src_stage];
      if (dc == 0) {
        CHECK(c.link == LinkId{false, c.src_stage, c.src_stage});
        CHECK(c.bw_time == 0.0);
      } else {
        CHECK(c.link == LinkId{true, 1, 0});
        CHECK(c.bw_time == doctest::Approx(2.0));
      }
    } else if (c.kind == CommKind::kAllgather) {
      ++gathers;
      CHECK(c.producer == -1);
      const OpKey k = g.compute[c.consumer].key;
      CHECK(k.type == OpType::kF);
      CHECK(k.mb == 0);
      const auto& preds = g.compute_preds[c.consumer];
      CHECK(std::find(preds.begin(), preds.end(), PredRef{true, c.id}) != preds.end());
    }
  }
  CHECK(syncs == s.n_pp * s.n_chunks);
  CHECK(gathers == s.n_pp * s.n_chunks);

  s.dp_overlap->zero_stage = 0;
  const DependencyGraph g0 = build_graph(s, 2);
  std::set<CommKind> kinds;
  for (const auto& c : g0.comms) kinds.insert(c.kind);
  CHECK(kinds.count(CommKind::kAllgather) == 0);
  CHECK(kinds.count(CommKind::kDpSync) == 1);
}
