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

#include "pipesched/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "pipesched/patterns.hpp"

namespace pipesched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::pair<double, double> LinkOccupancy::reserve_window(double t_ready, double width) {
  if (width <= 0.0) return {t_ready, t_ready};
  // Ends are sorted because intervals are disjoint and sorted by start.
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t_ready,
                             [](double t, const std::pair<double, double>& iv) { return t < iv.second; });
  double start = t_ready;
  while (it != intervals_.end() && start + width > it->first + kTimeEps) {
    start = std::max(start, it->second);
    ++it;
  }
  intervals_.insert(it, {start, start + width});
  return {start, start + width};
}

double LinkOccupancy::busy_time() const {
  double sum = 0.0;
  for (const auto& [a, b] : intervals_) sum += b - a;
  return sum;
}

std::pair<double, double> reserve_window(LinkOccupancy& link, double t_ready, double width) {
  return link.reserve_window(t_ready, width);
}

TimingEngine::TimingEngine(const DependencyGraph& graph, const LinkOrder* link_order)
    : graph_(graph) {
  const int n = static_cast<int>(graph.compute.size());
  const int nc = static_cast<int>(graph.comms.size());
  remaining_.assign(n, 0);
  avail_.assign(n, 0.0);
  done_.assign(n, false);
  start_.assign(n, 0.0);
  end_.assign(n, 0.0);
  stage_free_.assign(graph.n_pp, 0.0);
  stage_seq_.assign(graph.n_pp, {});
  comm_ready_known_.assign(nc, false);
  comm_done_.assign(nc, false);
  comm_ready_.assign(nc, 0.0);
  comm_start_.assign(nc, 0.0);
  comm_end_.assign(nc, 0.0);
  comm_arrival_.assign(nc, 0.0);

  if (link_order) {
    explicit_links_ = true;
    link_order_ = *link_order;
    std::vector<int> seen(nc, 0);
    for (const auto& [link, seq] : link_order_) {
      link_next_[link] = 0;
      link_free_[link] = 0.0;
      for (int c : seq) {
        if (c < 0 || c >= nc) throw ValidationError("link order references an unknown transfer");
        if (graph.comms[c].link != link) {
          throw ValidationError("transfer listed on the wrong link " + to_string(link));
        }
        if (graph.comms[c].bw_time <= 0.0) {
          throw ValidationError("link order lists a zero-width transfer on " + to_string(link));
        }
        if (seen[c]++) throw ValidationError("transfer listed twice in link order");
      }
    }
    for (int c = 0; c < nc; ++c) {
      if (graph.comms[c].bw_time > 0.0 && !seen[c]) {
        throw ValidationError("link order misses a transfer on " + to_string(graph.comms[c].link));
      }
    }
  }

  for (int i = 0; i < n; ++i) remaining_[i] = static_cast<int>(graph.compute_preds[i].size());
  for (int i = 0; i < n; ++i) {
    if (remaining_[i] == 0) newly_known_.push_back(i);
  }
  for (int c = 0; c < nc; ++c) {
    if (graph.comms[c].producer < 0) on_comm_ready(c, 0.0);
  }
}

double TimingEngine::earliest_start(int op) const {
  return std::max(stage_free_[graph_.compute[op].key.stage], avail_[op]);
}

std::optional<double> TimingEngine::next_comm_ready() const {
  if (pending_.empty()) return std::nullopt;
  return std::get<0>(pending_.top());
}

void TimingEngine::reserve_next_comm() {
  if (pending_.empty()) return;
  const auto [ready, producer, c] = pending_.top();
  pending_.pop();
  const auto [s, e] = links_[graph_.comms[c].link].reserve_window(ready, graph_.comms[c].bw_time);
  resolve_comm(c, s, e);
}

void TimingEngine::on_comm_ready(int c, double ready) {
  comm_ready_known_[c] = true;
  comm_ready_[c] = ready;
  const CommOp& op = graph_.comms[c];
  if (op.bw_time <= 0.0) {
    resolve_comm(c, ready, ready);
  } else if (explicit_links_) {
    advance_link(op.link);
  } else {
    pending_.emplace(ready, op.producer, c);
  }
}

void TimingEngine::advance_link(const LinkId& link) {
  const auto& seq = link_order_[link];
  std::size_t& next = link_next_[link];
  double& free = link_free_[link];
  while (next < seq.size() && comm_ready_known_[seq[next]]) {
    const int c = seq[next++];
    const double s = std::max(free, comm_ready_[c]);
    free = s + graph_.comms[c].bw_time;
    resolve_comm(c, s, free);
  }
}

void TimingEngine::resolve_comm(int c, double start, double end) {
  const CommOp& op = graph_.comms[c];
  comm_done_[c] = true;
  comm_start_[c] = start;
  comm_end_[c] = end;
  comm_arrival_[c] = end + op.latency;
  if (op.consumer >= 0) satisfy(op.consumer, comm_arrival_[c]);
}

void TimingEngine::satisfy(int op, double t) {
  avail_[op] = std::max(avail_[op], t);
  if (--remaining_[op] == 0) newly_known_.push_back(op);
}

double TimingEngine::commit(int op) {
  if (!known(op) || done_[op]) throw std::logic_error("commit of an op that is not ready");
  const ComputeOp& cop = graph_.compute[op];
  const int s = cop.key.stage;
  const double start = earliest_start(op);
  const double end = start + cop.duration;
  start_[op] = start;
  end_[op] = end;
  done_[op] = true;
  ++n_done_;
  stage_free_[s] = end;
  stage_seq_[s].push_back(op);
  for (int succ : graph_.compute_succ[op]) satisfy(succ, end);
  for (int c : graph_.compute_out_comms[op]) on_comm_ready(c, end);
  return start;
}

bool TimingEngine::finished() const {
  if (n_done_ != static_cast<int>(done_.size())) return false;
  return std::all_of(comm_done_.begin(), comm_done_.end(), [](bool b) { return b; });
}

std::vector<int> TimingEngine::take_newly_known() {
  std::vector<int> out;
  out.swap(newly_known_);
  return out;
}

TimingEngine::LinkOrder TimingEngine::realized_link_order() const {
  LinkOrder out;
  for (int c = 0; c < static_cast<int>(graph_.comms.size()); ++c) {
    if (comm_done_[c] && graph_.comms[c].bw_time > 0.0) out[graph_.comms[c].link].push_back(c);
  }
  for (auto& [link, seq] : out) {
    std::stable_sort(seq.begin(), seq.end(),
                     [&](int a, int b) { return comm_start_[a] < comm_start_[b]; });
  }
  return out;
}

std::vector<int> TimingEngine::unresolved_comm_preds(int op) const {
  std::vector<int> out;
  for (const PredRef& p : graph_.compute_preds[op]) {
    if (p.is_comm && !comm_done_[p.id]) out.push_back(p.id);
  }
  return out;
}

Timeline TimingEngine::timeline() const {
  Timeline tl;
  tl.n_pp = graph_.n_pp;
  tl.dc_of_stage = graph_.dc_of_stage;
  for (int i = 0; i < static_cast<int>(graph_.compute.size()); ++i) {
    if (!done_[i]) continue;
    tl.compute.push_back(ComputeRecord{i, graph_.compute[i].key, start_[i], end_[i]});
  }
  std::stable_sort(tl.compute.begin(), tl.compute.end(), [](const auto& a, const auto& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.key.stage < b.key.stage;
  });
  for (int c = 0; c < static_cast<int>(graph_.comms.size()); ++c) {
    if (!comm_done_[c]) continue;
    const CommOp& op = graph_.comms[c];
    CommRecord r;
    r.id = c;
    r.kind = op.kind;
    r.key = graph_.comm_key(c);
    r.link = op.link;
    r.src_stage = op.src_stage;
    r.dst_stage = op.dst_stage;
    r.ready = comm_ready_[c];
    r.start = comm_start_[c];
    r.end = comm_end_[c];
    r.arrival = comm_arrival_[c];
    tl.comms.push_back(r);
    if (r.end > r.start) tl.link_reservations[r.link].emplace_back(r.start, r.end);
  }
  for (auto& [link, iv] : tl.link_reservations) std::sort(iv.begin(), iv.end());
  return tl;
}

std::vector<std::vector<int>> resolve_stage_order(const DependencyGraph& graph,
                                                  const SchedulePlan& plan) {
  if (plan.n_sub != graph.n_sub) {
    throw ValidationError("plan n_sub " + std::to_string(plan.n_sub) + " does not match graph n_sub " +
                          std::to_string(graph.n_sub));
  }
  if (static_cast<int>(plan.stage_order.size()) != graph.n_pp) {
    throw ValidationError("plan has " + std::to_string(plan.stage_order.size()) + " stages, expected " +
                          std::to_string(graph.n_pp));
  }
  std::vector<std::vector<int>> out(graph.n_pp);
  std::vector<int> seen(graph.compute.size(), 0);
  for (int s = 0; s < graph.n_pp; ++s) {
    for (const OpKey& k : plan.stage_order[s]) {
      if (k.stage != s) throw ValidationError("op " + to_string(k) + " listed on stage " + std::to_string(s));
      auto id = graph.find(k);
      if (!id) throw ValidationError("plan references unknown op " + to_string(k));
      if (seen[*id]++) throw ValidationError("op " + to_string(k) + " appears twice in plan");
      out[s].push_back(*id);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ValidationError("plan misses op " + to_string(graph.compute[i].key));
  }
  return out;
}

TimingEngine::LinkOrder resolve_link_order(const DependencyGraph& graph,
                                           const std::map<LinkId, std::vector<CommKey>>& order) {
  TimingEngine::LinkOrder out;
  for (const auto& [link, seq] : order) {
    auto& ids = out[link];
    for (const CommKey& k : seq) {
      auto id = graph.find(k);
      if (!id) throw ValidationError("link order references unknown transfer at " + to_string(k.anchor));
      ids.push_back(*id);
    }
  }
  return out;
}

std::map<LinkId, std::vector<CommKey>> link_order_keys(const DependencyGraph& graph,
                                                       const TimingEngine::LinkOrder& order) {
  std::map<LinkId, std::vector<CommKey>> out;
  for (const auto& [link, seq] : order) {
    auto& keys = out[link];
    for (int c : seq) keys.push_back(graph.comm_key(c));
  }
  return out;
}

namespace {

[[noreturn]] void report_deadlock(const TimingEngine& eng, const std::vector<std::vector<int>>& order,
                                  const std::vector<std::size_t>& pos) {
  const DependencyGraph& g = eng.graph();
  std::ostringstream os;
  os << "schedule deadlock:";
  for (int s = 0; s < g.n_pp; ++s) {
    if (pos[s] >= order[s].size()) continue;
    const int head = order[s][pos[s]];
    os << " stage " << s << " waits at " << to_string(g.compute[head].key) << " for";
    for (const PredRef& p : g.compute_preds[head]) {
      if (p.is_comm) {
        const CommOp& c = g.comms[p.id];
        if (c.producer >= 0 && !eng.done(c.producer)) os << " " << to_string(g.compute[c.producer].key);
      } else if (!eng.done(p.id)) {
        os << " " << to_string(g.compute[p.id].key);
      }
    }
    os << ";";
  }
  throw DeadlockError(os.str());
}

}  // namespace

Timeline simulate(const DependencyGraph& graph, const SchedulePlan& plan, const ProblemSpec& spec) {
  const auto order = resolve_stage_order(graph, plan);
  std::optional<TimingEngine::LinkOrder> links;
  if (plan.link_order) links = resolve_link_order(graph, *plan.link_order);
  TimingEngine eng(graph, links ? &*links : nullptr);
  std::vector<std::size_t> pos(graph.n_pp, 0);
  const int n = static_cast<int>(graph.compute.size());
  while (eng.committed() < n) {
    int best_stage = -1;
    double best = kInf;
    for (int s = 0; s < graph.n_pp; ++s) {
      if (pos[s] >= order[s].size()) continue;
      const int op = order[s][pos[s]];
      if (!eng.known(op)) continue;
      const double t = eng.earliest_start(op);
      if (t < best) {
        best = t;
        best_stage = s;
      }
    }
    auto ready = eng.next_comm_ready();
    if (ready && *ready <= best + kTimeEps) {
      eng.reserve_next_comm();
      continue;
    }
    if (best_stage < 0) report_deadlock(eng, order, pos);
    eng.commit(order[best_stage][pos[best_stage]++]);
  }
  while (eng.next_comm_ready()) eng.reserve_next_comm();
  Timeline tl = eng.timeline();
  tl.metrics = metrics(tl, spec);
  return tl;
}

Timeline simulate(const SchedulePlan& plan, const ProblemSpec& spec) {
  return simulate(build_graph(spec, plan.n_sub, uses_combined_backward(plan.family)), plan, spec);
}

MetricsReport metrics(const Timeline& tl, const ProblemSpec& spec) {
  MetricsReport m;
  const int p = tl.n_pp;
  m.bubble_ratio.assign(p, 0.0);
  m.peak_memory.assign(p, 0.0);
  if (tl.compute.empty()) return m;

  int n_sub = 1;
  for (const auto& r : tl.compute) n_sub = std::max(n_sub, r.key.sub + 1);

  double first_any = kInf, last_any = -kInf, first_f0 = kInf;
  std::vector<double> first(p, kInf), last(p, -kInf), busy(p, 0.0);
  std::vector<std::vector<const ComputeRecord*>> per_stage(p);
  for (const auto& r : tl.compute) {
    const int s = r.key.stage;
    first[s] = std::min(first[s], r.start);
    last[s] = std::max(last[s], r.end);
    busy[s] += r.end - r.start;
    first_any = std::min(first_any, r.start);
    last_any = std::max(last_any, r.end);
    if (s == 0 && r.key.type == OpType::kF) first_f0 = std::min(first_f0, r.start);
    per_stage[s].push_back(&r);
  }
  for (const auto& c : tl.comms) last_any = std::max(last_any, c.arrival);
  if (first_f0 == kInf) first_f0 = first[0];

  m.stage0_span = last[0] - first[0];
  m.makespan_stage0 = last_any - first_f0;
  m.makespan_global = last_any - first_any;

  for (int s = 0; s < p; ++s) {
    const double window = last[s] - first[s];
    if (window > 0) m.bubble_ratio[s] = std::max(0.0, (window - busy[s]) / window);
    auto& ops = per_stage[s];
    std::stable_sort(ops.begin(), ops.end(), [](const auto* a, const auto* b) { return a->end < b->end; });
    double running = 0.0, peak = 0.0;
    for (const auto* r : ops) {
      if (r->key.sub != n_sub - 1) continue;
      if (r->key.chunk < static_cast<int>(spec.m_f[s].size())) {
        running += spec.mem_delta(s, r->key.chunk, r->key.type);
      }
      peak = std::max(peak, running);
    }
    m.peak_memory[s] = peak;
  }

  for (const auto& [link, iv] : tl.link_reservations) {
    double b = 0.0;
    for (const auto& [a, e] : iv) b += e - a;
    m.link_utilization[link] = m.makespan_global > 0 ? b / m.makespan_global : 0.0;
  }
  return m;
}

std::vector<Violation> validate_schedule(const DependencyGraph& graph, const SchedulePlan& plan,
                                         const ProblemSpec& spec) {
  std::vector<Violation> out;
  auto add = [&](std::string kind, std::string msg, int stage, std::optional<OpKey> op) {
    out.push_back(Violation{std::move(kind), std::move(msg), stage, op});
  };

  if (plan.n_sub != graph.n_sub) {
    add("unknown", "plan n_sub " + std::to_string(plan.n_sub) + " differs from graph n_sub " +
                       std::to_string(graph.n_sub), -1, std::nullopt);
    return out;
  }
  if (static_cast<int>(plan.stage_order.size()) != graph.n_pp) {
    add("unknown", "plan lists " + std::to_string(plan.stage_order.size()) + " stages for " +
                       std::to_string(graph.n_pp) + " pipeline stages", -1, std::nullopt);
    return out;
  }

  // Completeness.
  std::vector<int> seen(graph.compute.size(), 0);
  std::vector<std::vector<int>> order(graph.n_pp);
  for (int s = 0; s < graph.n_pp; ++s) {
    for (const OpKey& k : plan.stage_order[s]) {
      if (k.stage != s) {
        add("stage", to_string(k) + " listed on stage " + std::to_string(s), s, k);
        continue;
      }
      auto id = graph.find(k);
      if (!id) {
        add("unknown", to_string(k) + " is not part of the problem", s, k);
        continue;
      }
      if (seen[*id]++) {
        add("duplicate", to_string(k) + " appears more than once", s, k);
        continue;
      }
      order[s].push_back(*id);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      const OpKey& k = graph.compute[i].key;
      add("missing", to_string(k) + " is not scheduled", k.stage, k);
    }
  }

  // Microbatch order within (stage, chunk, type, sub).
  for (int s = 0; s < graph.n_pp; ++s) {
    std::map<std::tuple<int, OpType, int>, int> last_mb;
    for (int id : order[s]) {
      const OpKey& k = graph.compute[id].key;
      auto [it, fresh] = last_mb.try_emplace({k.chunk, k.type, k.sub}, k.mb);
      if (!fresh) {
        if (k.mb <= it->second) {
          add("mb-order", to_string(k) + " follows microbatch " + std::to_string(it->second), s, k);
        }
        it->second = std::max(it->second, k.mb);
      }
    }
  }

  // Memory under the completion running sum with F headroom.
  for (int s = 0; s < graph.n_pp; ++s) {
    const double limit = spec.m_limit[s];
    const double tol = 1e-9 * std::max(1.0, std::abs(limit));
    double running = 0.0;
    for (int id : order[s]) {
      const ComputeOp& op = graph.compute[id];
      if (op.key.type == OpType::kF && op.key.sub == 0) {
        const double need = spec.mem_delta(s, op.key.chunk, OpType::kF);
        if (running + need > limit + tol) {
          std::ostringstream os;
          os << to_string(op.key) << " needs " << running + need << " bytes, limit " << limit;
          add("memory", os.str(), s, op.key);
        }
      }
      running += op.mem_delta;
    }
  }

  // Link orders must cover exactly the positive-width transfers.
  std::optional<TimingEngine::LinkOrder> links;
  if (plan.link_order) {
    try {
      links = resolve_link_order(graph, *plan.link_order);
      TimingEngine probe(graph, &*links);
    } catch (const ValidationError& e) {
      add("link-order", e.what(), -1, std::nullopt);
      links.reset();
    }
  }

  if (!out.empty()) return out;

  // Dependency consistency: Kahn over true edges plus order chains.
  const int n = static_cast<int>(graph.compute.size());
  const int nc = static_cast<int>(graph.comms.size());
  std::vector<std::vector<int>> succ(n + nc);
  std::vector<int> indeg(n + nc, 0);
  auto edge = [&](int a, int b) {
    succ[a].push_back(b);
    ++indeg[b];
  };
  for (int i = 0; i < n; ++i) {
    for (const PredRef& p : graph.compute_preds[i]) edge(p.is_comm ? n + p.id : p.id, i);
  }
  for (int c = 0; c < nc; ++c) {
    if (graph.comms[c].producer >= 0) edge(graph.comms[c].producer, n + c);
  }
  for (const auto& seq : order) {
    for (std::size_t i = 1; i < seq.size(); ++i) edge(seq[i - 1], seq[i]);
  }
  if (links) {
    for (const auto& [link, seq] : *links) {
      for (std::size_t i = 1; i < seq.size(); ++i) edge(n + seq[i - 1], n + seq[i]);
    }
  }
  std::vector<int> queue;
  for (int v = 0; v < n + nc; ++v) {
    if (indeg[v] == 0) queue.push_back(v);
  }
  std::vector<bool> processed(n + nc, false);
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int v = queue[qi];
    processed[v] = true;
    for (int w : succ[v]) {
      if (--indeg[w] == 0) queue.push_back(w);
    }
  }
  if (static_cast<int>(queue.size()) == n + nc) return out;

  // Name the first blocked op on each stage and the unfinished true
  // predecessor it waits for.
  for (int s = 0; s < graph.n_pp; ++s) {
    for (int id : order[s]) {
      if (processed[id]) continue;
      const OpKey& k = graph.compute[id].key;
      std::string waits;
      for (const PredRef& p : graph.compute_preds[id]) {
        int producer = p.is_comm ? graph.comms[p.id].producer : p.id;
        if (p.is_comm && processed[n + p.id]) continue;
        if (!p.is_comm && processed[p.id]) continue;
        if (producer >= 0 && !processed[producer]) {
          waits += (waits.empty() ? "" : ", ") + to_string(graph.compute[producer].key);
        }
      }
      if (waits.empty()) waits = "an earlier op on the same stage";
      add("dependency", to_string(k) + " is ordered before its predecessor chain completes (waits on " +
                            waits + ")", s, k);
      break;
    }
  }
  return out;
}

}  // namespace pipesched
