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

#ifndef PIPESCHED_STATIC_SCHEDULES_HPP_
#define PIPESCHED_STATIC_SCHEDULES_HPP_

#include <string_view>
#include <vector>

#include "pipesched/types.hpp"

namespace pipesched {

enum class StaticFamily { k1F1B, kIV1F1B, kZBH1, kZBV };

std::string_view to_string(StaticFamily f);
StaticFamily parse_static_family(std::string_view s);
// Traversal pattern a family is defined on.
Pattern pattern_of(StaticFamily f);

// Per-stage execution order of a published static layout. Throws
// ValidationError on a family/pattern mismatch or n_mb < n_pp, and
// InfeasibleError when the layout needs more memory than spec.m_limit.
SchedulePlan build_static(const ProblemSpec& spec, StaticFamily family);

// Peak of the running memory sum when each stage executes its plan order.
std::vector<double> plan_peak_memory(const SchedulePlan& plan, const ProblemSpec& spec);

// Wave ordering by list scheduling with priorities D > F(chunk 1) >
// F(chunk 0) > W under an activation cap of n_pp microbatches per stage.
// With zero_delay the spec's communication costs are ignored; this is the
// frozen ZBV layout. Otherwise the order adapts to the actual delays.
std::vector<std::vector<OpKey>> wave_priority_order(const ProblemSpec& spec, bool zero_delay);

// Per-stage peak memory of the 1F1B layout for a UD spec.
std::vector<double> one_f_one_b_peak(const ProblemSpec& spec);

}  // namespace pipesched

#endif  // PIPESCHED_STATIC_SCHEDULES_HPP_
