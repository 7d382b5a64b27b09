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

#include "pipesched/static_schedules.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "pipesched/patterns.hpp"
#include "pipesched/simulator.hpp"

namespace pipesched {

std::string_view to_string(StaticFamily f) {
  switch (f) {
    case StaticFamily::k1F1B:
      return "1f1b";
    case StaticFamily::kIV1F1B:
      return "iv1f1b";
    case StaticFamily::kZBH1:
      return "zbh1";
    case StaticFamily::kZBV:
      return "zbv";
  }
  return "?";
}

StaticFamily parse_static_family(std::string_view s) {
  if (s == "1f1b") return StaticFamily::k1F1B;
  if (s == "iv1f1b") return StaticFamily::kIV1F1B;
  if (s == "zbh1") return StaticFamily::kZBH1;
  if (s == "zbv") return StaticFamily::kZBV;
  throw ParseError("unknown static schedule family '" + std::string(s) + "'");
}

Pattern pattern_of(StaticFamily f) {
  switch (f) {
    case StaticFamily::k1F1B:
    case StaticFamily::kZBH1:
      return Pattern::kUD;
    case StaticFamily::kIV1F1B:
      return Pattern::kLoop;
    case StaticFamily::kZBV:
      return Pattern::kWave;
  }
  return Pattern::kUD;
}

namespace {

OpKey key(int s, int c, OpType t, int mb) { return OpKey{s, c, t, mb, 0}; }

std::vector<OpKey> order_1f1b(int s, int p, int m) {
  std::vector<OpKey> out;
  const int warm = std::min(p - s - 1, m);
  for (int k = 0; k < warm; ++k) out.push_back(key(s, 0, OpType::kF, k));
  for (int k = 0; k < m - warm; ++k) {
    out.push_back(key(s, 0, OpType::kF, warm + k));
    out.push_back(key(s, 0, OpType::kD, k));
    out.push_back(key(s, 0, OpType::kW, k));
  }
  for (int k = m - warm; k < m; ++k) {
    out.push_back(key(s, 0, OpType::kD, k));
    out.push_back(key(s, 0, OpType::kW, k));
  }
  return out;
}

// Zero-bubble H1: stage s defers each W by s positions, then pulls pending
// W's forward whenever the next F would push memory above the 1F1B peak.
std::vector<OpKey> order_zbh1(const ProblemSpec& spec, int s) {
  const int p = spec.n_pp, m = spec.n_mb;
  std::vector<OpKey> tmpl;
  const int warm = std::min(p - s, m);
  for (int k = 0; k < warm; ++k) tmpl.push_back(key(s, 0, OpType::kF, k));
  int next_w = 0;
  for (int k = 0; k < m; ++k) {
    tmpl.push_back(key(s, 0, OpType::kD, k));
    if (k >= s) tmpl.push_back(key(s, 0, OpType::kW, next_w++));
    if (warm + k < m) tmpl.push_back(key(s, 0, OpType::kF, warm + k));
  }
  while (next_w < m) tmpl.push_back(key(s, 0, OpType::kW, next_w++));

  const double mf = spec.m_f[s][0], md = spec.m_d[s][0], mw = spec.m_w[s][0];
  const double cap = warm * mf;
  const double tol = 1e-9 * std::max(1.0, std::abs(cap));
  std::vector<OpKey> out;
  std::deque<int> pending_w;  // D done, W not yet placed
  std::vector<bool> w_done(m, false);
  double running = 0.0;
  for (const OpKey& k : tmpl) {
    if (k.type == OpType::kW) {
      if (w_done[k.mb]) continue;
      w_done[k.mb] = true;
      out.push_back(k);
      pending_w.erase(std::find(pending_w.begin(), pending_w.end(), k.mb));
      running += mw;
      continue;
    }
    if (k.type == OpType::kF) {
      while (running + mf > cap + tol && !pending_w.empty()) {
        const int mb = pending_w.front();
        pending_w.pop_front();
        w_done[mb] = true;
        out.push_back(key(s, 0, OpType::kW, mb));
        running += mw;
      }
      running += mf;
    } else {
      pending_w.push_back(k.mb);
      running += md;
    }
    out.push_back(k);
  }
  return out;
}

// Megatron-style interleaved 1F1B over virtual microbatches.
std::vector<OpKey> order_iv1f1b(const ProblemSpec& spec, int s) {
  const int p = spec.n_pp, m = spec.n_mb, v = spec.n_chunks;
  const int total = m * v;
  auto fwd = [&](int j) {
    const int chunk = (j / p) % v;
    const int mb = (j / (p * v)) * p + j % p;
    return key(s, chunk, OpType::kF, mb);
  };
  auto bwd = [&](int j, std::vector<OpKey>& out) {
    const int chunk = v - 1 - (j / p) % v;
    const int mb = (j / (p * v)) * p + j % p;
    out.push_back(key(s, chunk, OpType::kD, mb));
    out.push_back(key(s, chunk, OpType::kW, mb));
  };
  const int warm = std::min((p - s - 1) * 2 + (v - 1) * p, total);
  std::vector<OpKey> out;
  for (int j = 0; j < warm; ++j) out.push_back(fwd(j));
  for (int j = 0; j < total - warm; ++j) {
    out.push_back(fwd(warm + j));
    bwd(j, out);
  }
  for (int j = total - warm; j < total; ++j) bwd(j, out);
  return out;
}

}  // namespace

std::vector<std::vector<OpKey>> wave_priority_order(const ProblemSpec& spec, bool zero_delay) {
  if (spec.pattern != Pattern::kWave) throw ValidationError("wave ordering requires the Wave pattern");
  ProblemSpec flat = spec;
  if (zero_delay) {
    for (auto& row : flat.alpha) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : flat.beta) std::fill(row.begin(), row.end(), 0.0);
    flat.dp_overlap.reset();
  }
  const DependencyGraph g = build_graph(flat, 1, false);
  TimingEngine eng(g);
  const int p = spec.n_pp;
  std::vector<double> running(p, 0.0), cap(p, 0.0);
  for (int s = 0; s < p; ++s) {
    cap[s] = std::min(p * (spec.m_f[s][0] + spec.m_f[s][1]), spec.m_limit[s]);
  }
  // A chunk-0 forward leaves room for one chunk-1 forward, so the oldest
  // open microbatch can always turn.
  // Lowest unscheduled microbatch per (stage, chunk, type).
  std::vector<std::array<std::array<int, 3>, 2>> next(p);
  for (auto& a : next)
    for (auto& b : a) b.fill(0);

  auto rank = [](const OpKey& k) {
    if (k.type == OpType::kD) return 0;
    if (k.type == OpType::kF) return k.chunk == 1 ? 1 : 2;
    return 3;
  };
  const int n = static_cast<int>(g.compute.size());
  while (eng.committed() < n) {
    auto ready = eng.next_comm_ready();
    int best_op = -1;
    double best_t = std::numeric_limits<double>::infinity();
    int best_rank = 4;
    for (int s = 0; s < p; ++s) {
      for (int c = 0; c < 2; ++c) {
        for (int t = 0; t < 3; ++t) {
          const int mb = next[s][c][t];
          if (mb >= spec.n_mb) continue;
          auto id = g.find(key(s, c, static_cast<OpType>(t), mb));
          if (!eng.known(*id)) continue;
          const OpKey& k = g.compute[*id].key;
          if (k.type == OpType::kF) {
            double need = running[s] + spec.m_f[s][c];
            if (c == 0) need += spec.m_f[s][1];
            if (need > cap[s] + 1e-9 * std::max(1.0, cap[s])) continue;
          }
          const double at = eng.earliest_start(*id);
          const int r = rank(k);
          if (at < best_t - kTimeEps ||
              (std::abs(at - best_t) <= kTimeEps &&
               (r < best_rank || (r == best_rank && s < g.compute[best_op].key.stage)))) {
            best_op = *id;
            best_t = at;
            best_rank = r;
          }
        }
      }
    }
    if (ready && *ready <= best_t + kTimeEps) {
      eng.reserve_next_comm();
      continue;
    }
    if (best_op < 0) throw InfeasibleError("wave layout cannot progress under the activation cap");
    const OpKey& k = g.compute[best_op].key;
    eng.commit(best_op);
    running[k.stage] += g.compute[best_op].mem_delta;
    ++next[k.stage][k.chunk][static_cast<int>(k.type)];
  }
  std::vector<std::vector<OpKey>> out(p);
  for (int s = 0; s < p; ++s) {
    for (int id : eng.stage_sequence()[s]) out[s].push_back(g.compute[id].key);
  }
  return out;
}

std::vector<double> plan_peak_memory(const SchedulePlan& plan, const ProblemSpec& spec) {
  std::vector<double> peak(spec.n_pp, 0.0);
  for (int s = 0; s < spec.n_pp && s < static_cast<int>(plan.stage_order.size()); ++s) {
    double running = 0.0;
    for (const OpKey& k : plan.stage_order[s]) {
      if (k.sub != plan.n_sub - 1) continue;
      running += spec.mem_delta(s, k.chunk, k.type);
      peak[s] = std::max(peak[s], running);
    }
  }
  return peak;
}

std::vector<double> one_f_one_b_peak(const ProblemSpec& spec) {
  std::vector<double> peak(spec.n_pp, 0.0);
  for (int s = 0; s < spec.n_pp; ++s) {
    double running = 0.0;
    for (const OpKey& k : order_1f1b(s, spec.n_pp, spec.n_mb)) {
      running += spec.mem_delta(s, 0, k.type);
      peak[s] = std::max(peak[s], running);
    }
  }
  return peak;
}

SchedulePlan build_static(const ProblemSpec& spec, StaticFamily family) {
  validate(spec);
  if (spec.pattern != pattern_of(family)) {
    throw ValidationError("schedule " + std::string(to_string(family)) + " requires the " +
                          std::string(to_string(pattern_of(family))) + " pattern, problem uses " +
                          std::string(to_string(spec.pattern)));
  }
  if (family == StaticFamily::kIV1F1B && spec.n_chunks < 2) {
    throw ValidationError("iv1f1b requires n_chunks >= 2");
  }
  if (spec.n_mb < spec.n_pp) {
    throw ValidationError("static layouts require n_mb >= n_pp");
  }
  if (family == StaticFamily::kIV1F1B && spec.n_mb % spec.n_pp != 0) {
    throw ValidationError("iv1f1b requires n_mb to be a multiple of n_pp");
  }

  SchedulePlan plan;
  plan.family = std::string(to_string(family));
  plan.engine = "static";
  plan.n_sub = 1;
  plan.stage_order.resize(spec.n_pp);
  switch (family) {
    case StaticFamily::k1F1B:
      for (int s = 0; s < spec.n_pp; ++s) plan.stage_order[s] = order_1f1b(s, spec.n_pp, spec.n_mb);
      break;
    case StaticFamily::kZBH1:
      for (int s = 0; s < spec.n_pp; ++s) plan.stage_order[s] = order_zbh1(spec, s);
      break;
    case StaticFamily::kIV1F1B:
      for (int s = 0; s < spec.n_pp; ++s) plan.stage_order[s] = order_iv1f1b(spec, s);
      break;
    case StaticFamily::kZBV:
      plan.stage_order = wave_priority_order(spec, true);
      break;
  }
  plan.memory_budget = spec.m_limit;

  const auto peak = plan_peak_memory(plan, spec);
  for (int s = 0; s < spec.n_pp; ++s) {
    if (peak[s] > spec.m_limit[s] + 1e-9 * std::max(1.0, std::abs(spec.m_limit[s]))) {
      std::ostringstream os;
      os << plan.family << " needs " << peak[s] << " bytes on stage " << s << ", limit is "
         << spec.m_limit[s];
      throw InfeasibleError(os.str());
    }
  }
  return plan;
}

}  // namespace pipesched
