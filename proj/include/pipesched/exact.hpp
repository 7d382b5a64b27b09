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

#ifndef PIPESCHED_EXACT_HPP_
#define PIPESCHED_EXACT_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pipesched/types.hpp"

namespace pipesched {

// kStage0Span: first start to last end on stage 0 (DP transfers included
// when present), ties broken by runtime. kRuntime: first F on stage 0 to the
// last completion anywhere, ties broken by stage-0 span.
enum class Objective { kStage0Span, kRuntime };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);

struct ObjectiveValue {
  double primary = 0.0;
  double secondary = 0.0;
};

ObjectiveValue evaluate_objective(const Timeline& timeline, Objective objective);

// Constraint model over start times: data dependencies, pairwise order on
// every device and link, memory via completion-order indicators, and
// microbatch order within (stage, chunk, type, sub).
struct COModel {
  DependencyGraph graph;
  ProblemSpec spec;
  Objective objective = Objective::kStage0Span;
  double horizon = 0.0;  // big-M
  std::vector<std::vector<int>> stage_ops;       // compute ids per stage
  std::map<LinkId, std::vector<int>> link_comms;  // comm ids per link
  std::vector<std::pair<int, int>> mb_order;      // (earlier, later) compute ids
  std::vector<std::pair<int, int>> completion_pairs;  // (p, q) same stage, m_p != 0

  long order_variable_count() const;
  long completion_variable_count() const { return static_cast<long>(completion_pairs.size()); }
};

COModel build_model(const DependencyGraph& graph, const ProblemSpec& spec,
                    Objective objective = Objective::kStage0Span);

struct ExactOptions {
  double budget_seconds = 30.0;
  long max_nodes = -1;  // < 0: unlimited
  double gap = 0.01;    // relative optimality gap for pruning
  bool default_seeds = true;
  std::vector<SchedulePlan> seeds;  // extra incumbents (stage orders only)
};

struct ExactResult {
  SchedulePlan plan;
  Timeline timeline;
  ObjectiveValue value;
  bool optimal = false;  // search finished: value within gap of the optimum
  long nodes = 0;
};

// Branch and bound over semi-active schedules. Throws InfeasibleError when
// no memory-feasible schedule exists (or none was found in budget).
ExactResult solve_exact(const COModel& model, const ExactOptions& options = {});

// Writes the model in CPLEX LP text format.
std::string lp_text(const COModel& model);
void export_lp(const COModel& model, const std::filesystem::path& path);

}  // namespace pipesched

#endif  // PIPESCHED_EXACT_HPP_
