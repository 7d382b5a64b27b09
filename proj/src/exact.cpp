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

#include "pipesched/exact.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "pipesched/greedy.hpp"
#include "pipesched/io.hpp"
#include "pipesched/patterns.hpp"
#include "pipesched/simulator.hpp"
#include "pipesched/static_schedules.hpp"

namespace pipesched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDiscrepancyPasses = 1;

}  // namespace

std::string_view to_string(Objective o) {
  return o == Objective::kStage0Span ? "span" : "runtime";
}

Objective parse_objective(std::string_view s) {
  if (s == "span") return Objective::kStage0Span;
  if (s == "runtime") return Objective::kRuntime;
  throw ParseError("unknown objective '" + std::string(s) + "', expected span or runtime");
}

ObjectiveValue evaluate_objective(const Timeline& tl, Objective objective) {
  double s0_first = kInf, s0_last = -kInf, f0_first = kInf, last_any = -kInf;
  for (const auto& r : tl.compute) {
    last_any = std::max(last_any, r.end);
    if (r.key.stage != 0) continue;
    s0_first = std::min(s0_first, r.start);
    s0_last = std::max(s0_last, r.end);
    if (r.key.type == OpType::kF) f0_first = std::min(f0_first, r.start);
  }
  for (const auto& c : tl.comms) {
    last_any = std::max(last_any, c.arrival);
    if (c.kind == CommKind::kDpSync) s0_last = std::max(s0_last, c.arrival);
  }
  const double span = s0_last - s0_first;
  const double runtime = last_any - f0_first;
  if (objective == Objective::kStage0Span) return {span, runtime};
  return {runtime, span};
}

long COModel::order_variable_count() const {
  long count = 0;
  for (const auto& ops : stage_ops) {
    const long k = static_cast<long>(ops.size());
    count += k * (k - 1) / 2;
  }
  for (const auto& [link, comms] : link_comms) {
    const long k = static_cast<long>(comms.size());
    count += k * (k - 1) / 2;
  }
  return count;
}

COModel build_model(const DependencyGraph& graph, const ProblemSpec& spec, Objective objective) {
  COModel m;
  m.graph = graph;
  m.spec = spec;
  m.objective = objective;
  m.stage_ops.assign(graph.n_pp, {});
  double horizon = 0.0;
  for (const ComputeOp& op : graph.compute) {
    m.stage_ops[op.key.stage].push_back(op.id);
    horizon += op.duration;
  }
  for (const CommOp& c : graph.comms) {
    m.link_comms[c.link].push_back(c.id);
    horizon += c.bw_time + c.latency;
  }
  m.horizon = horizon;

  std::map<std::tuple<int, int, OpType, int>, std::vector<int>> groups;
  for (const ComputeOp& op : graph.compute) {
    groups[{op.key.stage, op.key.chunk, op.key.type, op.key.sub}].push_back(op.id);
  }
  for (auto& [key, ids] : groups) {
    std::sort(ids.begin(), ids.end(),
              [&](int a, int b) { return graph.compute[a].key.mb < graph.compute[b].key.mb; });
    for (std::size_t i = 1; i < ids.size(); ++i) m.mb_order.emplace_back(ids[i - 1], ids[i]);
  }
  for (const auto& ops : m.stage_ops) {
    for (int p : ops) {
      if (graph.compute[p].mem_delta == 0.0) continue;
      for (int q : ops) {
        if (p != q) m.completion_pairs.emplace_back(p, q);
      }
    }
  }
  return m;
}

namespace {

// Chronological schedule-generation tree: every branch appends one op at
// its earliest start, with starts non-decreasing (ties ordered by resource).
// This enumerates each semi-active schedule exactly once.
class BranchAndBound {
 public:
  BranchAndBound(const COModel& model, const ExactOptions& opt) : m_(model), g_(model.graph), opt_(opt) {
    n_ = static_cast<int>(g_.compute.size());
    nc_ = static_cast<int>(g_.comms.size());
    N_ = n_ + nc_;
    p_ = g_.n_pp;
    dur_.assign(N_, 0.0);
    lag_.assign(N_, 0.0);
    res_.assign(N_, -1);
    grp_.assign(N_, -1);
    need_.assign(N_, 0.0);
    mem_.assign(N_, 0.0);
    succ_.assign(N_, {});
    npred_.assign(N_, 0);

    std::map<LinkId, int> link_res;
    for (int i = 0; i < n_; ++i) {
      const ComputeOp& op = g_.compute[i];
      dur_[i] = op.duration;
      res_[i] = op.key.stage;
      mem_[i] = op.mem_delta;
      if (op.key.type == OpType::kF && op.key.sub == 0) need_[i] = m_.spec.m_f[op.key.stage][op.key.chunk];
      for (int s : g_.compute_succ[i]) succ_[i].push_back(s);
      for (int c : g_.compute_out_comms[i]) succ_[i].push_back(n_ + c);
    }
    n_res_ = p_;
    for (int c = 0; c < nc_; ++c) {
      const CommOp& op = g_.comms[c];
      dur_[n_ + c] = op.bw_time;
      lag_[n_ + c] = op.latency;
      if (op.bw_time > 0.0) {
        auto [it, fresh] = link_res.try_emplace(op.link, n_res_);
        if (fresh) ++n_res_;
        res_[n_ + c] = it->second;
      }
      if (op.consumer >= 0) succ_[n_ + c].push_back(op.consumer);
    }
    for (int v = 0; v < N_; ++v)
      for (int w : succ_[v]) ++npred_[w];

    std::map<std::tuple<int, int, OpType, int>, std::vector<int>> groups;
    for (int i = 0; i < n_; ++i) {
      const OpKey& k = g_.compute[i].key;
      groups[{k.stage, k.chunk, k.type, k.sub}].push_back(i);
    }
    for (auto& [key, ids] : groups) {
      std::sort(ids.begin(), ids.end(), [&](int a, int b) { return g_.compute[a].key.mb < g_.compute[b].key.mb; });
      for (int id : ids) grp_[id] = static_cast<int>(group_members_.size());
      group_members_.push_back(ids);
    }

    // Topological order over true edges.
    std::vector<int> indeg = npred_;
    for (int v = 0; v < N_; ++v)
      if (indeg[v] == 0) topo_.push_back(v);
    for (std::size_t i = 0; i < topo_.size(); ++i)
      for (int w : succ_[topo_[i]])
        if (--indeg[w] == 0) topo_.push_back(w);
    if (static_cast<int>(topo_.size()) != N_) throw ValidationError("dependency graph has a cycle");

    // Longest remaining paths to the span targets and to the global end.
    tail_span_.assign(N_, -kInf);
    tail_end_.assign(N_, 0.0);
    for (int i = static_cast<int>(topo_.size()) - 1; i >= 0; --i) {
      const int v = topo_[i];
      double ts = -kInf, te = lag_[v];
      if (v < n_ && g_.compute[v].key.stage == 0) ts = 0.0;
      if (v >= n_ && g_.comms[v - n_].kind == CommKind::kDpSync) ts = lag_[v];
      for (int w : succ_[v]) {
        ts = std::max(ts, lag_[v] + dur_[w] + tail_span_[w]);
        te = std::max(te, lag_[v] + dur_[w] + tail_end_[w]);
      }
      tail_span_[v] = ts;
      tail_end_[v] = te;
    }

    first_op_ = *g_.find(OpKey{0, 0, OpType::kF, 0, 0});
    first_op_free_ = npred_[first_op_] == 0;
    primary_is_span_ = m_.objective == Objective::kStage0Span;
    tol_.resize(p_);
    for (int s = 0; s < p_; ++s) tol_[s] = 1e-9 * std::max(1.0, std::abs(m_.spec.m_limit[s]));
    started_ = std::chrono::steady_clock::now();
  }

  void offer(const SchedulePlan& plan) {
    SchedulePlan bare = plan;
    bare.link_order.reset();
    bare.n_sub = g_.n_sub;
    Timeline tl;
    try {
      if (!validate_schedule(g_, bare, m_.spec).empty()) return;
      tl = simulate(g_, bare, m_.spec);
    } catch (const std::exception&) {
      return;
    }
    const ObjectiveValue v = evaluate_objective(tl, m_.objective);
    if (!has_incumbent_ || better(v, best_)) {
      has_incumbent_ = true;
      best_ = v;
      best_stages_.assign(p_, {});
      for (int s = 0; s < p_; ++s) {
        for (const OpKey& k : bare.stage_order[s]) best_stages_[s].push_back(*g_.find(k));
      }
      best_links_ = realized_links(tl);
    }
  }

  void run() {
    State root;
    root.start.assign(N_, 0.0);
    root.end.assign(N_, 0.0);
    root.ready.assign(N_, 0.0);
    root.remaining = npred_;
    root.done.assign(N_, 0);
    root.res_free.assign(n_res_, 0.0);
    root.running.assign(p_, 0.0);
    root.grp_next.assign(group_members_.size(), 0);
    for (int v = 0; v < N_; ++v) {
      if (npred_[v] == 0 && v >= n_ && res_[v] < 0) complete_auto(root, v);
    }
    std::array<int, 4> rank{0, 1, 2, 3};
    do {
      dive(root, rank);
    } while (!stopped_ && std::next_permutation(rank.begin(), rank.end()));
    // Discrepancy-limited passes find good incumbents early; the last pass
    // is the complete search.
    for (int k = 0; k <= kDiscrepancyPasses && !stopped_; ++k) dfs(root, k);
    if (!stopped_) {
      dfs(root, -1);
      completed_ = !stopped_;
    }
  }

  bool has_incumbent() const { return has_incumbent_; }
  bool completed() const { return completed_; }
  long nodes() const { return nodes_; }

  SchedulePlan plan(const std::string& family) const {
    SchedulePlan out;
    out.family = family;
    out.engine = "exact";
    out.n_sub = g_.n_sub;
    out.memory_budget = m_.spec.m_limit;
    out.stage_order.resize(p_);
    for (int s = 0; s < p_; ++s)
      for (int id : best_stages_[s]) out.stage_order[s].push_back(g_.compute[id].key);
    out.link_order = link_order_keys(g_, best_links_);
    return out;
  }

 private:
  struct State {
    std::vector<double> start, end, ready;
    std::vector<int> remaining;
    std::vector<char> done;
    std::vector<double> res_free;
    std::vector<double> running;
    std::vector<int> grp_next;
    std::vector<int> path;
    double last_start = -kInf;
    int last_res = -1;
    int n_done = 0;
    double c_span = -kInf;
    double c_end = 0.0;
  };

  bool better(const ObjectiveValue& a, const ObjectiveValue& b) const {
    if (a.primary < b.primary - kTimeEps) return true;
    if (a.primary > b.primary + kTimeEps) return false;
    return a.secondary < b.secondary - kTimeEps;
  }

  TimingEngine::LinkOrder realized_links(const Timeline& tl) const {
    TimingEngine::LinkOrder out;
    std::vector<const CommRecord*> recs;
    for (const auto& r : tl.comms)
      if (g_.comms[r.id].bw_time > 0.0) recs.push_back(&r);
    std::stable_sort(recs.begin(), recs.end(), [](const auto* a, const auto* b) { return a->start < b->start; });
    for (const auto* r : recs) out[r->link].push_back(r->id);
    return out;
  }

  void propagate(State& st, int v) {
    const double t = st.end[v] + lag_[v];
    if (v < n_) {
      if (g_.compute[v].key.stage == 0) st.c_span = std::max(st.c_span, st.end[v]);
      st.c_end = std::max(st.c_end, st.end[v]);
    } else {
      st.c_end = std::max(st.c_end, t);
      if (g_.comms[v - n_].kind == CommKind::kDpSync) st.c_span = std::max(st.c_span, t);
    }
    for (int w : succ_[v]) {
      st.ready[w] = std::max(st.ready[w], t);
      if (--st.remaining[w] == 0 && w >= n_ && res_[w] < 0) complete_auto(st, w);
    }
  }

  void complete_auto(State& st, int v) {
    st.start[v] = st.ready[v];
    st.end[v] = st.ready[v];
    st.done[v] = 1;
    ++st.n_done;
    propagate(st, v);
  }

  double est(const State& st, int v) const { return std::max(st.ready[v], st.res_free[res_[v]]); }

  bool eligible(const State& st, int v) const {
    if (st.done[v] || st.remaining[v] != 0 || res_[v] < 0) return false;
    if (v < n_) {
      const int gi = grp_[v];
      if (group_members_[gi][st.grp_next[gi]] != v) return false;
      if (need_[v] > 0.0) {
        const int s = g_.compute[v].key.stage;
        if (st.running[s] + need_[v] > m_.spec.m_limit[s] + tol_[s]) return false;
      }
    }
    return true;
  }

  void append(State& st, int v) {
    const int r = res_[v];
    const double s = est(st, v);
    st.start[v] = s;
    st.end[v] = s + dur_[v];
    st.done[v] = 1;
    ++st.n_done;
    st.res_free[r] = st.end[v];
    st.last_start = s;
    st.last_res = r;
    st.path.push_back(v);
    if (v < n_) {
      st.running[g_.compute[v].key.stage] += mem_[v];
      ++st.grp_next[grp_[v]];
    }
    propagate(st, v);
  }

  // Lower bounds on (span target completion, global completion).
  std::pair<double, double> bounds(const State& st) {
    std::vector<double>& hr = scratch_ready_;
    std::vector<double>& hd = scratch_head_;
    hr = st.ready;
    hd.assign(N_, 0.0);
    double lb_span = st.c_span, lb_end = st.c_end;
    for (int v : topo_) {
      if (st.done[v]) continue;
      double h = hr[v];
      if (res_[v] >= 0) h = std::max({h, st.res_free[res_[v]], st.last_start});
      hd[v] = h;
      const double out = h + dur_[v] + lag_[v];
      for (int w : succ_[v]) hr[w] = std::max(hr[w], out);
      if (tail_span_[v] > -kInf) lb_span = std::max(lb_span, h + dur_[v] + tail_span_[v]);
      lb_end = std::max(lb_end, h + dur_[v] + tail_end_[v]);
    }
    // Single-resource relaxation with heads and tails.
    for (int r = 0; r < n_res_; ++r) {
      auto& ops = scratch_ops_;
      ops.clear();
      for (int v : res_members(r))
        if (!st.done[v]) ops.push_back(v);
      if (ops.empty()) continue;
      std::sort(ops.begin(), ops.end(), [&](int a, int b) { return hd[a] < hd[b]; });
      double sum_s = 0.0, min_s = kInf, sum_e = 0.0, min_e = kInf;
      for (int i = static_cast<int>(ops.size()) - 1; i >= 0; --i) {
        const int v = ops[i];
        sum_e += dur_[v];
        min_e = std::min(min_e, tail_end_[v]);
        lb_end = std::max(lb_end, hd[v] + sum_e + min_e);
        if (tail_span_[v] > -kInf) {
          sum_s += dur_[v];
          min_s = std::min(min_s, tail_span_[v]);
          lb_span = std::max(lb_span, hd[v] + sum_s + min_s);
        }
      }
    }
    return {lb_span, lb_end};
  }

  const std::vector<int>& res_members(int r) {
    if (res_members_.empty()) {
      res_members_.assign(n_res_, {});
      for (int v = 0; v < N_; ++v)
        if (res_[v] >= 0) res_members_[res_[v]].push_back(v);
    }
    return res_members_[r];
  }

  bool out_of_budget() {
    if (opt_.max_nodes >= 0 && nodes_ >= opt_.max_nodes) return true;
    if ((nodes_ & 63) == 0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
      if (elapsed > opt_.budget_seconds) timed_out_ = true;
    }
    return timed_out_;
  }

  void leaf(const State& st) {
    const double s0 = st.start[first_op_];
    double f0 = kInf;
    for (int v = 0; v < n_; ++v) {
      if (g_.compute[v].key.stage == 0 && g_.compute[v].key.type == OpType::kF) f0 = std::min(f0, st.start[v]);
    }
    const double span = st.c_span - s0;
    const double runtime = st.c_end - f0;
    const ObjectiveValue v = primary_is_span_ ? ObjectiveValue{span, runtime} : ObjectiveValue{runtime, span};
    if (has_incumbent_ && !better(v, best_)) return;
    has_incumbent_ = true;
    best_ = v;
    best_stages_.assign(p_, {});
    best_links_.clear();
    for (int u : st.path) {
      if (u < n_) {
        best_stages_[g_.compute[u].key.stage].push_back(u);
      } else {
        best_links_[g_.comms[u - n_].link].push_back(u - n_);
      }
    }
  }

  bool prune(const State& st) {
    if (!has_incumbent_) return false;
    const auto [lb_span, lb_end] = bounds(st);
    double s0_ub = kInf;
    if (st.done[first_op_]) {
      s0_ub = st.start[first_op_];
    } else if (first_op_free_) {
      s0_ub = 0.0;
    }
    const double lb_p = primary_is_span_ ? lb_span - s0_ub : lb_end - s0_ub;
    const double lb_s = primary_is_span_ ? lb_end - s0_ub : lb_span - s0_ub;
    const double target = best_.primary / (1.0 + opt_.gap);
    if (lb_p > target + kTimeEps) return true;
    if (opt_.gap > 0.0 && lb_p >= target - kTimeEps) return true;
    return lb_p >= best_.primary - kTimeEps && lb_s >= best_.secondary - kTimeEps;
  }

  // (start, op) of every child of st in branching order.
  std::vector<std::pair<double, int>> expand(const State& st) const {
    std::vector<int> elig;
    for (int v = 0; v < N_; ++v)
      if (eligible(st, v)) elig.push_back(v);
    std::vector<std::pair<double, int>> children;
    for (int v : elig) {
      const double s = est(st, v);
      if (s < st.last_start - kTimeEps) continue;
      if (s <= st.last_start + kTimeEps && res_[v] < st.last_res) continue;
      bool dominated = false;
      for (int u : elig) {
        if (u == v || res_[u] != res_[v]) continue;
        if (u < n_ && mem_[u] > 0.0) continue;
        if (u < n_ && need_[u] > 0.0) continue;
        if (est(st, u) + dur_[u] <= s + kTimeEps) {
          dominated = true;
          break;
        }
      }
      if (!dominated) children.emplace_back(s, v);
    }
    std::sort(children.begin(), children.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return res_[a.second] < res_[b.second];
    });
    return children;
  }

  // Greedy descent: at the earliest start on the lowest resource, take the
  // op whose category ranks first (F chunk 0, F later chunk, D, W).
  void dive(const State& root, const std::array<int, 4>& rank) {
    State st = root;
    auto category = [&](int v) {
      if (v >= n_) return -1;
      const OpKey& k = g_.compute[v].key;
      if (k.type == OpType::kF) return rank[k.chunk == 0 ? 0 : 1];
      return rank[k.type == OpType::kD ? 2 : 3];
    };
    while (st.n_done < N_) {
      if (out_of_budget()) {
        stopped_ = true;
        return;
      }
      ++nodes_;
      const auto children = expand(st);
      if (children.empty()) return;
      int pick = children.front().second;
      for (const auto& [t, v] : children) {
        if (t > children.front().first + kTimeEps || res_[v] != res_[pick]) break;
        if (category(v) < category(pick)) pick = v;
      }
      append(st, pick);
    }
    leaf(st);
  }

  // discrepancies < 0: unlimited.
  void dfs(const State& st, int discrepancies) {
    if (st.n_done == N_) {
      leaf(st);
      return;
    }
    if (out_of_budget()) {
      stopped_ = true;
      return;
    }
    ++nodes_;
    if (prune(st)) return;

    const auto children = expand(st);
    for (std::size_t i = 0; i < children.size(); ++i) {
      const int left = discrepancies < 0 ? -1 : discrepancies - (i > 0 ? 1 : 0);
      if (discrepancies >= 0 && left < 0) break;
      State next = st;
      append(next, children[i].second);
      dfs(next, left);
      if (stopped_) return;
    }
  }

  const COModel& m_;
  const DependencyGraph& g_;
  const ExactOptions& opt_;
  int n_ = 0, nc_ = 0, N_ = 0, p_ = 0, n_res_ = 0;
  std::vector<double> dur_, lag_, need_, mem_;
  std::vector<int> res_, grp_, npred_, topo_;
  std::vector<std::vector<int>> succ_, group_members_, res_members_;
  std::vector<double> tail_span_, tail_end_, tol_;
  std::vector<double> scratch_ready_, scratch_head_;
  std::vector<int> scratch_ops_;
  int first_op_ = 0;
  bool first_op_free_ = true;
  bool primary_is_span_ = true;

  bool has_incumbent_ = false;
  ObjectiveValue best_;
  std::vector<std::vector<int>> best_stages_;
  TimingEngine::LinkOrder best_links_;
  long nodes_ = 0;
  bool completed_ = false;
  bool stopped_ = false;
  bool timed_out_ = false;
  std::chrono::steady_clock::time_point started_;
};

std::string family_for(Pattern p) {
  switch (p) {
    case Pattern::kUD:
      return "cross-ud";
    case Pattern::kWave:
      return "cross-wave";
    case Pattern::kLoop:
      return "cross-loop";
  }
  return "cross";
}

std::vector<SchedulePlan> default_seeds(const ProblemSpec& spec) {
  std::vector<SchedulePlan> out;
  auto attempt = [&](auto&& make) {
    try {
      out.push_back(make());
    } catch (const std::exception&) {
    }
  };
  ProblemSpec one = spec;
  one.n_sub = 1;
  switch (spec.pattern) {
    case Pattern::kUD:
      attempt([&] { return generate_greedy(one).plan; });
      attempt([&] { return build_static(one, StaticFamily::kZBH1); });
      attempt([&] { return build_static(one, StaticFamily::k1F1B); });
      break;
    case Pattern::kWave:
      attempt([&] {
        SchedulePlan p;
        p.family = "cross-wave";
        p.stage_order = wave_priority_order(one, false);
        return p;
      });
      attempt([&] { return build_static(one, StaticFamily::kZBV); });
      break;
    case Pattern::kLoop:
      attempt([&] { return build_static(one, StaticFamily::kIV1F1B); });
      break;
  }
  return out;
}

}  // namespace

ExactResult solve_exact(const COModel& model, const ExactOptions& options) {
  if (options.budget_seconds <= 0.0) throw ValidationError("solver budget must be positive");
  if (options.gap < 0.0) throw ValidationError("optimality gap must be non-negative");
  BranchAndBound bnb(model, options);
  if (options.default_seeds && model.graph.n_sub == 1) {
    for (const auto& seed : default_seeds(model.spec)) bnb.offer(seed);
  }
  for (const auto& seed : options.seeds) bnb.offer(seed);
  bnb.run();
  if (!bnb.has_incumbent()) {
    if (bnb.completed()) throw InfeasibleError("no schedule satisfies the memory limits");
    throw InfeasibleError("no feasible schedule found within the solver budget");
  }
  ExactResult out;
  out.plan = bnb.plan(family_for(model.spec.pattern));
  out.timeline = simulate(model.graph, out.plan, model.spec);
  out.value = evaluate_objective(out.timeline, model.objective);
  out.optimal = bnb.completed();
  out.nodes = bnb.nodes();
  return out;
}

namespace {

std::string var_name(const DependencyGraph& g, int id, bool comm) {
  std::ostringstream os;
  if (!comm) {
    const OpKey& k = g.compute[id].key;
    os << "t" << to_string(k.type) << "_s" << k.stage << "_c" << k.chunk << "_m" << k.mb;
    if (g.n_sub > 1) os << "_u" << k.sub;
  } else {
    const CommKey ck = g.comm_key(id);
    const OpKey& k = ck.anchor;
    os << "t" << (ck.kind == CommKind::kPipeline ? "pp" : ck.kind == CommKind::kDpSync ? "dp" : "ag") << "_"
       << to_string(k.type) << "_s" << k.stage << "_c" << k.chunk << "_m" << k.mb;
    if (g.n_sub > 1) os << "_u" << k.sub;
  }
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string lp_text(const COModel& m) {
  const DependencyGraph& g = m.graph;
  const int n = static_cast<int>(g.compute.size());
  std::vector<std::string> tc(n), tk(g.comms.size());
  for (int i = 0; i < n; ++i) tc[i] = var_name(g, i, false);
  for (int c = 0; c < static_cast<int>(g.comms.size()); ++c) tk[c] = var_name(g, c, true);
  const double H = m.horizon;
  const double eps = 1e-6;

  std::ostringstream os;
  os << "\\ pipeline scheduling model: " << n << " compute ops, " << g.comms.size() << " transfers\n";
  os << "\\ objective: " << to_string(m.objective) << "\n";
  os << "Minimize\n obj: C0 - S0\n";
  os << "Subject To\n";
  int row = 0;
  auto rname = [&](const char* prefix) { return std::string(prefix) + std::to_string(row++); };

  // Data dependencies.
  for (int i = 0; i < n; ++i) {
    for (const PredRef& p : g.compute_preds[i]) {
      if (p.is_comm) {
        const CommOp& c = g.comms[p.id];
        os << " " << rname("dep") << ": " << tc[i] << " - " << tk[p.id] << " >= " << num(c.bw_time + c.latency)
           << "\n";
      } else {
        os << " " << rname("dep") << ": " << tc[i] << " - " << tc[p.id] << " >= " << num(g.compute[p.id].duration)
           << "\n";
      }
    }
  }
  for (int c = 0; c < static_cast<int>(g.comms.size()); ++c) {
    const CommOp& op = g.comms[c];
    if (op.producer < 0) continue;
    os << " " << rname("dep") << ": " << tk[c] << " - " << tc[op.producer]
       << " >= " << num(g.compute[op.producer].duration) << "\n";
  }

  // Pairwise non-overlap on devices and links.
  std::vector<std::string> binaries;
  auto pair_rows = [&](const std::string& a, double da, const std::string& b, double db) {
    const std::string x = "x_" + a + "__" + b;
    binaries.push_back(x);
    os << " " << rname("ovl") << ": " << a << " - " << b << " + " << num(H) << " " << x << " <= " << num(H - da)
       << "\n";
    os << " " << rname("ovl") << ": " << b << " - " << a << " - " << num(H) << " " << x << " <= " << num(-db)
       << "\n";
  };
  for (const auto& ops : m.stage_ops) {
    for (std::size_t i = 0; i < ops.size(); ++i)
      for (std::size_t j = i + 1; j < ops.size(); ++j)
        pair_rows(tc[ops[i]], g.compute[ops[i]].duration, tc[ops[j]], g.compute[ops[j]].duration);
  }
  for (const auto& [link, comms] : m.link_comms) {
    for (std::size_t i = 0; i < comms.size(); ++i)
      for (std::size_t j = i + 1; j < comms.size(); ++j)
        pair_rows(tk[comms[i]], g.comms[comms[i]].bw_time, tk[comms[j]], g.comms[comms[j]].bw_time);
  }

  // Completion-order indicators and memory.
  std::map<int, std::vector<std::pair<int, std::string>>> mem_terms;  // q -> (p, u)
  for (const auto& [p, q] : m.completion_pairs) {
    const std::string u = "u_" + tc[p] + "__" + tc[q];
    binaries.push_back(u);
    const double dp = g.compute[p].duration;
    os << " " << rname("cmp") << ": " << tc[p] << " - " << tc[q] << " + " << num(H) << " " << u
       << " <= " << num(H - dp) << "\n";
    os << " " << rname("cmp") << ": " << tc[q] << " - " << tc[p] << " - " << num(H) << " " << u
       << " <= " << num(dp - eps) << "\n";
    mem_terms[q].emplace_back(p, u);
  }
  for (const auto& ops : m.stage_ops) {
    for (int q : ops) {
      const OpKey& k = g.compute[q].key;
      const double head = k.type == OpType::kF && k.sub == 0 ? m.spec.m_f[k.stage][k.chunk] : 0.0;
      const auto it = mem_terms.find(q);
      if (it == mem_terms.end() && head == 0.0) continue;
      os << " " << rname("mem") << ":";
      bool first = true;
      if (it != mem_terms.end()) {
        for (const auto& [p, u] : it->second) {
          const double mp = g.compute[p].mem_delta;
          os << (first ? " " : (mp < 0 ? " - " : " + ")) << (first ? num(mp) : num(std::abs(mp))) << " " << u;
          first = false;
        }
      }
      if (first) os << " 0 " << tc[q];
      os << " <= " << num(m.spec.m_limit[k.stage] - head) << "\n";
    }
  }

  // Microbatch order.
  for (const auto& [a, b] : m.mb_order) {
    os << " " << rname("mbo") << ": " << tc[b] << " - " << tc[a] << " >= " << num(g.compute[a].duration) << "\n";
  }

  // Objective anchors.
  if (m.objective == Objective::kStage0Span) {
    for (int i : m.stage_ops[0]) {
      os << " " << rname("obj") << ": C0 - " << tc[i] << " >= " << num(g.compute[i].duration) << "\n";
      os << " " << rname("obj") << ": S0 - " << tc[i] << " <= 0\n";
    }
    for (int c = 0; c < static_cast<int>(g.comms.size()); ++c) {
      if (g.comms[c].kind != CommKind::kDpSync) continue;
      os << " " << rname("obj") << ": C0 - " << tk[c] << " >= " << num(g.comms[c].bw_time + g.comms[c].latency)
         << "\n";
    }
  } else {
    for (int i = 0; i < n; ++i) {
      os << " " << rname("obj") << ": C0 - " << tc[i] << " >= " << num(g.compute[i].duration) << "\n";
    }
    for (int c = 0; c < static_cast<int>(g.comms.size()); ++c) {
      os << " " << rname("obj") << ": C0 - " << tk[c] << " >= " << num(g.comms[c].bw_time + g.comms[c].latency)
         << "\n";
    }
    for (int i : m.stage_ops[0]) {
      if (g.compute[i].key.type == OpType::kF) os << " " << rname("obj") << ": S0 - " << tc[i] << " <= 0\n";
    }
  }

  os << "Bounds\n";
  for (int i = 0; i < n; ++i) os << " 0 <= " << tc[i] << " <= " << num(H) << "\n";
  for (std::size_t c = 0; c < tk.size(); ++c) os << " 0 <= " << tk[c] << " <= " << num(H) << "\n";
  os << " 0 <= C0 <= " << num(2 * H) << "\n";
  os << " 0 <= S0 <= " << num(H) << "\n";
  os << "Binary\n";
  for (const auto& b : binaries) os << " " << b << "\n";
  os << "End\n";
  return os.str();
}

void export_lp(const COModel& model, const std::filesystem::path& path) {
  write_text_file(path, lp_text(model));
}

}  // namespace pipesched
