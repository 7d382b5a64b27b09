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

#ifndef PIPESCHED_PATTERNS_HPP_
#define PIPESCHED_PATTERNS_HPP_

#include <string_view>
#include <utility>
#include <vector>

#include "pipesched/types.hpp"

namespace pipesched {

// Forward path of one microbatch as (stage, chunk) positions. Backward
// traverses the same path in reverse.
std::vector<std::pair<int, int>> forward_path(const ProblemSpec& spec);

// True dependencies for every microbatch: F chain along the forward path,
// D chain along the reversed path, F->D at the turn and D->W at every
// position. Stage changes go through a CommOp; same-stage hops are direct.
// With combined_backward the gradient leaves a position only after its W,
// modelling a unified backward block B = D + W.
DependencyGraph build_true_deps(const ProblemSpec& spec, bool combined_backward = false);

// DP gradient synchronization after the last microbatch's W of every
// (stage, chunk), plus an allgather before the first F under ZeRO stage 1.
DependencyGraph attach_dp_ops(DependencyGraph graph, const ProblemSpec& spec);

// Splits every compute block into n_sub chained sub-blocks. Durations are
// divided evenly; the block's memory delta lands on the last sub-block.
DependencyGraph expand_sub_blocks(const DependencyGraph& graph, int n_sub);

// build_true_deps + attach_dp_ops (when configured) + expand_sub_blocks.
DependencyGraph build_graph(const ProblemSpec& spec, int n_sub = 1, bool combined_backward = false);

// Schedule families that run D and W back to back as one backward block.
bool uses_combined_backward(std::string_view family);

// Link carrying traffic from one stage to another under the spec's topology.
LinkId link_between(const ProblemSpec& spec, int src_stage, int dst_stage);

// Number of pipeline CommOps that cross a DC boundary for one microbatch.
int cross_dc_comms_per_microbatch(const ProblemSpec& spec);

}  // namespace pipesched

#endif  // PIPESCHED_PATTERNS_HPP_
