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

#ifndef PIPESCHED_SIMULATOR_HPP_
#define PIPESCHED_SIMULATOR_HPP_

#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pipesched/types.hpp"

namespace pipesched {

// Reserved bandwidth windows of one directed link, sorted and disjoint.
class LinkOccupancy {
 public:
  // Reserves the earliest gap of length >= width at or after t_ready.
  // Zero-width requests return (t_ready, t_ready) and reserve nothing.
  std::pair<double, double> reserve_window(double t_ready, double width);

  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
  double busy_time() const;

 private:
  std::vector<std::pair<double, double>> intervals_;
};

std::pair<double, double> reserve_window(LinkOccupancy& link, double t_ready, double width);

// Event-time bookkeeping shared by the simulator, the greedy generator and
// the exact solver. A driver repeatedly picks a known op and commits it; the
// engine resolves availability through compute and communication edges.
//
// Without an explicit link order, pending transfers are reserved first-fit
// in (ready time, producer id) order. Drivers must call reserve_next_comm()
// while next_comm_ready() is not later than the start they are about to
// commit; this keeps reservations chronological.
class TimingEngine {
 public:
  using LinkOrder = std::map<LinkId, std::vector<int>>;

  explicit TimingEngine(const DependencyGraph& graph, const LinkOrder* link_order = nullptr);

  const DependencyGraph& graph() const { return graph_; }
  bool known(int op) const { return remaining_[op] == 0; }
  bool done(int op) const { return done_[op]; }
  double available(int op) const { return avail_[op]; }
  double stage_free(int stage) const { return stage_free_[stage]; }
  double earliest_start(int op) const;

  std::optional<double> next_comm_ready() const;
  void reserve_next_comm();

  // Starts op at earliest_start(op). Returns the start time.
  double commit(int op);

  int committed() const { return n_done_; }
  bool finished() const;
  // Ops that became known since the last call.
  std::vector<int> take_newly_known();

  const std::vector<std::vector<int>>& stage_sequence() const { return stage_seq_; }
  // Positive-width transfers per link in bandwidth-window order.
  LinkOrder realized_link_order() const;
  std::vector<int> unresolved_comm_preds(int op) const;

  // Timeline without metrics.
  Timeline timeline() const;

 private:
  void resolve_comm(int c, double start, double end);
  void on_comm_ready(int c, double ready);
  void advance_link(const LinkId& link);
  void satisfy(int op, double t);

  const DependencyGraph& graph_;
  bool explicit_links_ = false;
  std::vector<int> remaining_;
  std::vector<double> avail_;
  std::vector<bool> done_;
  std::vector<double> start_, end_;
  std::vector<double> stage_free_;
  std::vector<std::vector<int>> stage_seq_;
  int n_done_ = 0;

  std::vector<bool> comm_ready_known_, comm_done_;
  std::vector<double> comm_ready_, comm_start_, comm_end_, comm_arrival_;
  using PendingKey = std::tuple<double, int, int>;  // ready, producer, comm
  std::priority_queue<PendingKey, std::vector<PendingKey>, std::greater<>> pending_;
  std::map<LinkId, LinkOccupancy> links_;

  LinkOrder link_order_;
  std::map<LinkId, std::size_t> link_next_;
  std::map<LinkId, double> link_free_;
  std::vector<int> newly_known_;
};

// Computes start/end times for every op of graph under the plan's per-stage
// orders (and per-link orders when present). Throws ValidationError on a
// plan/graph mismatch and DeadlockError when the orders contradict data flow.
Timeline simulate(const DependencyGraph& graph, const SchedulePlan& plan, const ProblemSpec& spec);

// Convenience: builds the graph for plan.n_sub and simulates.
Timeline simulate(const SchedulePlan& plan, const ProblemSpec& spec);

struct Violation {
  std::string kind;  // missing, duplicate, unknown, stage, mb-order, dependency, memory, link-order
  std::string message;
  int stage = -1;
  std::optional<OpKey> op;
};

std::vector<Violation> validate_schedule(const DependencyGraph& graph, const SchedulePlan& plan,
                                         const ProblemSpec& spec);

// Makespans, bubble ratios, peak memory and link utilization of a timeline.
MetricsReport metrics(const Timeline& timeline, const ProblemSpec& spec);

// Maps plan keys to graph ids. Throws ValidationError on any mismatch.
std::vector<std::vector<int>> resolve_stage_order(const DependencyGraph& graph,
                                                  const SchedulePlan& plan);
TimingEngine::LinkOrder resolve_link_order(const DependencyGraph& graph,
                                           const std::map<LinkId, std::vector<CommKey>>& order);
std::map<LinkId, std::vector<CommKey>> link_order_keys(const DependencyGraph& graph,
                                                       const TimingEngine::LinkOrder& order);

}  // namespace pipesched

#endif  // PIPESCHED_SIMULATOR_HPP_
