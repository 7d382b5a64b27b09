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

// Independent reference implementations used only by tests. They share the
// dependency graph with the library but none of its timing or search code.

#ifndef PIPESCHED_TESTS_SUPPORT_ORACLES_HPP_
#define PIPESCHED_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "pipesched/types.hpp"

namespace oracle {

using pipesched::CommKind;
using pipesched::DependencyGraph;
using pipesched::LinkId;
using pipesched::OpKey;
using pipesched::OpType;
using pipesched::ProblemSpec;

struct Times {
  std::vector<double> start, end;            // compute
  std::vector<double> cstart, cend, arrival;  // comms
};

// Semi-active times for fixed per-stage and per-link orders, found by
// iterating the start-time equations to a fixed point. Transfers not listed
// on any link start as soon as they are ready (zero width). Returns nullopt
// when the orders contain a cycle.
inline std::optional<Times> fixed_point(const DependencyGraph& g, const std::vector<std::vector<int>>& stage_seq,
                                        const std::map<LinkId, std::vector<int>>& link_seq) {
  const int n = static_cast<int>(g.compute.size());
  const int nc = static_cast<int>(g.comms.size());
  std::vector<int> prev(n, -1), cprev(nc, -1);
  for (const auto& seq : stage_seq)
    for (std::size_t i = 1; i < seq.size(); ++i) prev[seq[i]] = seq[i - 1];
  for (const auto& [link, seq] : link_seq)
    for (std::size_t i = 1; i < seq.size(); ++i) cprev[seq[i]] = seq[i - 1];
  Times t;
  t.start.assign(n, 0.0);
  t.end.assign(n, 0.0);
  t.cstart.assign(nc, 0.0);
  t.cend.assign(nc, 0.0);
  t.arrival.assign(nc, 0.0);
  for (int iter = 0; iter <= 2 * (n + nc) + 2; ++iter) {
    bool changed = false;
    for (int c = 0; c < nc; ++c) {
      const auto& op = g.comms[c];
      double s = op.producer >= 0 ? t.end[op.producer] : 0.0;
      if (cprev[c] >= 0) s = std::max(s, t.cend[cprev[c]]);
      if (s != t.cstart[c]) {
        t.cstart[c] = s;
        changed = true;
      }
      t.cend[c] = s + op.bw_time;
      t.arrival[c] = t.cend[c] + op.latency;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& p : g.compute_preds[i]) s = std::max(s, p.is_comm ? t.arrival[p.id] : t.end[p.id]);
      if (prev[i] >= 0) s = std::max(s, t.end[prev[i]]);
      if (s != t.start[i]) {
        t.start[i] = s;
        changed = true;
      }
      t.end[i] = s + g.compute[i].duration;
    }
    if (!changed) return t;
  }
  return std::nullopt;
}

// (stage-0 span, runtime) as defined for the span objective.
inline std::pair<double, double> span_and_runtime(const DependencyGraph& g, const Times& t) {
  const double inf = std::numeric_limits<double>::infinity();
  double s0 = inf, c0 = -inf, f0 = inf, last = -inf;
  for (std::size_t i = 0; i < g.compute.size(); ++i) {
    last = std::max(last, t.end[i]);
    if (g.compute[i].key.stage != 0) continue;
    s0 = std::min(s0, t.start[i]);
    c0 = std::max(c0, t.end[i]);
    if (g.compute[i].key.type == OpType::kF) f0 = std::min(f0, t.start[i]);
  }
  for (std::size_t c = 0; c < g.comms.size(); ++c) {
    last = std::max(last, t.arrival[c]);
    if (g.comms[c].kind == CommKind::kDpSync) c0 = std::max(c0, t.arrival[c]);
  }
  return {c0 - s0, last - f0};
}

// Reachability over true edges between compute ops.
inline std::vector<std::vector<char>> reachability(const DependencyGraph& g) {
  const int n = static_cast<int>(g.compute.size());
  std::vector<std::vector<int>> succ(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& p : g.compute_preds[i]) {
      const int from = p.is_comm ? g.comms[p.id].producer : p.id;
      if (from >= 0) succ[from].push_back(i);
    }
  }
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int s = 0; s < n; ++s) {
    std::vector<int> stack{s};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : succ[v]) {
        if (!reach[s][w]) {
          reach[s][w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return reach;
}

// All orders of one stage's ops that respect reachability, microbatch order
// within (chunk, type, sub) and the F-headroom memory rule.
inline std::vector<std::vector<int>> stage_sequences(const DependencyGraph& g, const ProblemSpec& spec,
                                                     const std::vector<int>& ops,
                                                     const std::vector<std::vector<char>>& reach) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::vector<char> used(ops.size(), 0);
  const int stage = g.compute[ops.front()].key.stage;
  const double limit = spec.m_limit[stage];
  std::function<void(double)> rec = [&](double running) {
    if (cur.size() == ops.size()) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (used[i]) continue;
      const int v = ops[i];
      bool ok = true;
      for (std::size_t j = 0; j < ops.size() && ok; ++j) {
        if (used[j] || j == i) continue;
        const int w = ops[j];
        if (reach[w][v]) ok = false;
        const OpKey& a = g.compute[w].key;
        const OpKey& b = g.compute[v].key;
        if (a.chunk == b.chunk && a.type == b.type && a.sub == b.sub && a.mb < b.mb) ok = false;
      }
      if (!ok) continue;
      const OpKey& k = g.compute[v].key;
      if (k.type == OpType::kF && k.sub == 0 &&
          running + spec.m_f[stage][k.chunk] > limit + 1e-9 * std::max(1.0, std::abs(limit))) {
        continue;
      }
      used[i] = 1;
      cur.push_back(v);
      rec(running + g.compute[v].mem_delta);
      cur.pop_back();
      used[i] = 0;
    }
  };
  rec(0.0);
  return out;
}

struct BruteForceResult {
  bool feasible = false;
  double span = 0.0;
  double runtime = 0.0;
  long evaluated = 0;
};

// Lexicographic minimum of (span, runtime) over every stage order and every
// permutation of positive-width transfers on each link.
inline BruteForceResult brute_force(const DependencyGraph& g, const ProblemSpec& spec, bool runtime_first = false) {
  const auto reach = reachability(g);
  std::vector<std::vector<int>> stage_ops(g.n_pp);
  for (const auto& op : g.compute) stage_ops[op.key.stage].push_back(op.id);
  std::vector<std::vector<std::vector<int>>> choices(g.n_pp);
  for (int s = 0; s < g.n_pp; ++s) {
    choices[s] = stage_sequences(g, spec, stage_ops[s], reach);
    if (choices[s].empty()) return {};
  }
  std::map<LinkId, std::vector<int>> link_ops;
  for (const auto& c : g.comms)
    if (c.bw_time > 0.0) link_ops[c.link].push_back(c.id);
  std::vector<std::vector<std::vector<int>>> link_perms;
  std::vector<LinkId> link_ids;
  for (auto& [link, ids] : link_ops) {
    std::sort(ids.begin(), ids.end());
    std::vector<std::vector<int>> perms;
    do {
      perms.push_back(ids);
    } while (std::next_permutation(ids.begin(), ids.end()));
    link_perms.push_back(perms);
    link_ids.push_back(link);
  }

  BruteForceResult best;
  std::vector<std::vector<int>> stage_pick(g.n_pp);
  std::map<LinkId, std::vector<int>> link_pick;
  std::function<void(int)> rec_links;
  std::function<void(int)> rec_stages = [&](int s) {
    if (s == g.n_pp) {
      rec_links(0);
      return;
    }
    for (const auto& seq : choices[s]) {
      stage_pick[s] = seq;
      rec_stages(s + 1);
    }
  };
  rec_links = [&](int l) {
    if (l == static_cast<int>(link_ids.size())) {
      ++best.evaluated;
      auto t = fixed_point(g, stage_pick, link_pick);
      if (!t) return;
      auto [span, runtime] = span_and_runtime(g, *t);
      if (runtime_first) std::swap(span, runtime);
      const bool better = !best.feasible || span < best.span - 1e-12 ||
                          (span <= best.span + 1e-12 && runtime < best.runtime - 1e-12);
      if (better) {
        best.feasible = true;
        best.span = span;
        best.runtime = runtime;
      }
      return;
    }
    for (const auto& perm : link_perms[l]) {
      link_pick[link_ids[l]] = perm;
      rec_links(l + 1);
    }
  };
  rec_stages(0);
  if (runtime_first) std::swap(best.span, best.runtime);
  return best;
}

// First-fit reference: earliest gap of the given width at or after ready,
// found by scanning every candidate start (ready and each interval end).
inline std::pair<double, double> scan_gap(const std::vector<std::pair<double, double>>& busy, double ready,
                                          double width) {
  std::vector<double> cands{ready};
  for (const auto& [a, b] : busy)
    if (b >= ready) cands.push_back(b);
  std::sort(cands.begin(), cands.end());
  for (double s : cands) {
    bool clash = false;
    for (const auto& [a, b] : busy) {
      if (s < b - 1e-12 && a < s + width - 1e-12) clash = true;
    }
    if (!clash) return {s, s + width};
  }
  return {ready, ready + width};
}

}  // namespace oracle

#endif  // PIPESCHED_TESTS_SUPPORT_ORACLES_HPP_
