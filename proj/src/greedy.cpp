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

#include "pipesched/greedy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "pipesched/patterns.hpp"
#include "pipesched/simulator.hpp"

namespace pipesched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::optional<int> next_stage_to_schedule(const std::vector<GreedyStageView>& stages) {
  std::optional<int> best;
  double best_t = kInf;
  for (int s = 0; s < static_cast<int>(stages.size()); ++s) {
    double earliest = kInf;
    for (const auto& c : stages[s].candidates) {
      if (c.fits) earliest = std::min(earliest, c.avail);
    }
    if (earliest == kInf) continue;
    const double t = std::max(stages[s].last_end, earliest);
    if (!best || t < best_t - kTimeEps) {
      best = s;
      best_t = t;
    }
  }
  return best;
}

std::optional<std::size_t> select_op(const std::vector<GreedyCandidate>& candidates, double now,
                                     GreedyPhase phase, std::optional<OpType> last_full) {
  std::optional<std::size_t> of_type[3];
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.fits || c.avail > now + kTimeEps) continue;
    if (c.continues && c.type != OpType::kW) return i;
    auto& slot = of_type[static_cast<int>(c.type)];
    if (!slot || c.mb < candidates[*slot].mb) slot = i;
  }
  auto& f = of_type[0];
  auto& d = of_type[1];
  auto& w = of_type[2];
  switch (phase) {
    case GreedyPhase::kWarmup:
      if (f) return f;
      if (d) return d;
      break;
    case GreedyPhase::kSteady:
      if (last_full == OpType::kF) {
        if (d) return d;
        if (f) return f;
      } else {
        if (f) return f;
        if (d) return d;
      }
      break;
    case GreedyPhase::kTeardown:
      if (d) return d;
      if (f) return f;
      break;
  }
  return w;
}

GreedyResult generate_greedy(const ProblemSpec& spec) {
  if (spec.pattern != Pattern::kUD) {
    throw ValidationError("greedy generation supports the UD pattern only");
  }
  for (int s = 0; s < spec.n_pp && s < static_cast<int>(spec.m_limit.size()); ++s) {
    if (!spec.m_f.empty() && spec.m_limit[s] < spec.m_f[s][0]) {
      std::ostringstream os;
      os << "memory limit " << spec.m_limit[s] << " on stage " << s << " is below one forward block ("
         << spec.m_f[s][0] << ")";
      throw InfeasibleError(os.str());
    }
  }
  validate(spec);
  const int p = spec.n_pp;
  const int n_sub = spec.n_sub;
  const DependencyGraph graph = build_graph(spec, n_sub, false);
  TimingEngine eng(graph);

  // Sub-block ids per (stage, type) in microbatch-major order.
  std::vector<std::array<std::vector<int>, 3>> seq(p);
  for (int s = 0; s < p; ++s) {
    for (int t = 0; t < 3; ++t) {
      for (int mb = 0; mb < spec.n_mb; ++mb) {
        for (int j = 0; j < n_sub; ++j) {
          seq[s][t].push_back(*graph.find(OpKey{s, 0, static_cast<OpType>(t), mb, j}));
        }
      }
    }
  }
  std::vector<std::array<std::size_t, 3>> pos(p, {0, 0, 0});
  std::vector<double> running(p, 0.0);
  std::vector<bool> seen_d(p, false);
  std::vector<std::optional<OpType>> last_full(p);
  std::vector<std::optional<OpType>> in_progress(p);

  auto view_of = [&](int s) {
    GreedyStageView v;
    v.last_end = eng.stage_free(s);
    const double tol = 1e-9 * std::max(1.0, std::abs(spec.m_limit[s]));
    for (int t = 0; t < 3; ++t) {
      if (in_progress[s] && static_cast<int>(*in_progress[s]) != t) continue;
      if (pos[s][t] >= seq[s][t].size()) continue;
      const int op = seq[s][t][pos[s][t]];
      if (!eng.known(op)) continue;
      const ComputeOp& cop = graph.compute[op];
      GreedyCandidate c;
      c.op = op;
      c.type = cop.key.type;
      c.mb = cop.key.mb;
      c.avail = eng.available(op);
      c.continues = cop.key.sub > 0;
      c.fits = !(c.type == OpType::kF && cop.key.sub == 0 &&
                 running[s] + spec.m_f[s][0] > spec.m_limit[s] + tol);
      v.candidates.push_back(c);
    }
    return v;
  };

  const int n = static_cast<int>(graph.compute.size());
  long iterations = 0;
  while (eng.committed() < n) {
    std::vector<GreedyStageView> views(p);
    for (int s = 0; s < p; ++s) views[s] = view_of(s);
    const auto stage = next_stage_to_schedule(views);
    double now = kInf;
    if (stage) {
      double earliest = kInf;
      for (const auto& c : views[*stage].candidates) {
        if (c.fits) earliest = std::min(earliest, c.avail);
      }
      now = std::max(views[*stage].last_end, earliest);
    }
    const auto ready = eng.next_comm_ready();
    if (ready && *ready <= now + kTimeEps) {
      eng.reserve_next_comm();
      continue;
    }
    if (!stage) throw InfeasibleError("greedy scheduler cannot progress under the memory limit");
    const int s = *stage;
    auto& cands = views[s].candidates;
    for (const auto& c : cands) {
      if (c.type == OpType::kD && c.avail <= now + kTimeEps) seen_d[s] = true;
    }
    GreedyPhase phase = GreedyPhase::kWarmup;
    if (seen_d[s]) phase = pos[s][0] < seq[s][0].size() ? GreedyPhase::kSteady : GreedyPhase::kTeardown;
    const auto pick = select_op(cands, now, phase, last_full[s]);
    if (!pick) throw std::logic_error("greedy selection found no eligible op");
    const GreedyCandidate& c = cands[*pick];
    const ComputeOp& cop = graph.compute[c.op];
    eng.commit(c.op);
    ++iterations;
    ++pos[s][static_cast<int>(c.type)];
    running[s] += cop.mem_delta;
    const bool last_sub = cop.key.sub == n_sub - 1;
    if (c.type != OpType::kW) {
      in_progress[s] = last_sub ? std::nullopt : std::optional<OpType>(c.type);
      if (last_sub) last_full[s] = c.type;
    }
  }
  while (eng.next_comm_ready()) eng.reserve_next_comm();

  GreedyResult out;
  out.plan.family = n_sub == 1 ? "cross-ud" : "cross-ud-sub";
  out.plan.engine = "greedy";
  out.plan.n_sub = n_sub;
  out.plan.memory_budget = spec.m_limit;
  out.plan.stage_order.resize(p);
  for (int s = 0; s < p; ++s) {
    for (int id : eng.stage_sequence()[s]) out.plan.stage_order[s].push_back(graph.compute[id].key);
  }
  out.timeline = eng.timeline();
  out.timeline.metrics = metrics(out.timeline, spec);
  out.iterations = iterations;
  return out;
}

}  // namespace pipesched
