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

#ifndef PIPESCHED_GREEDY_HPP_
#define PIPESCHED_GREEDY_HPP_

#include <optional>
#include <vector>

#include "pipesched/types.hpp"

namespace pipesched {

enum class GreedyPhase { kWarmup, kSteady, kTeardown };

// One schedulable sub-block as seen by the selection rules.
struct GreedyCandidate {
  int op = -1;
  OpType type = OpType::kF;
  int mb = 0;
  double avail = 0.0;
  bool fits = true;       // memory allows starting it now
  bool continues = false; // next sub-block of a block already started
};

struct GreedyStageView {
  double last_end = 0.0;
  std::vector<GreedyCandidate> candidates;
};

// Stage whose earliest feasible start max(last_end, min avail) is smallest;
// ties go to the lower stage. nullopt when no stage has a feasible candidate.
std::optional<int> next_stage_to_schedule(const std::vector<GreedyStageView>& stages);

// Index into candidates of the op to run next. Only candidates with
// avail <= now that fit in memory are eligible. last_full is the type of the
// last completed F or D block on the stage.
std::optional<std::size_t> select_op(const std::vector<GreedyCandidate>& candidates, double now,
                                     GreedyPhase phase, std::optional<OpType> last_full);

struct GreedyResult {
  SchedulePlan plan;
  Timeline timeline;
  long iterations = 0;
};

// Generates a CrossUD (n_sub = 1) or CrossUDSub schedule for a UD spec under
// spec.m_limit, using spec.n_sub sub-blocks per block.
GreedyResult generate_greedy(const ProblemSpec& spec);

}  // namespace pipesched

#endif  // PIPESCHED_GREEDY_HPP_
