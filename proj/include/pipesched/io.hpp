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

#ifndef PIPESCHED_IO_HPP_
#define PIPESCHED_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pipesched/types.hpp"

namespace pipesched {

inline constexpr int kFormatVersion = 1;

// Problem files. Scalars are accepted wherever a per-stage vector or
// per-(stage, chunk) matrix is expected and are broadcast; saving always
// writes the expanded form. The result of parsing is validated.
ProblemSpec problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const ProblemSpec& spec);
ProblemSpec load_problem(const std::filesystem::path& path);
void save_problem(const ProblemSpec& spec, const std::filesystem::path& path);

SchedulePlan schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const SchedulePlan& plan);
SchedulePlan load_schedule(const std::filesystem::path& path);
void save_schedule(const SchedulePlan& plan, const std::filesystem::path& path);

Timeline timeline_from_json(const nlohmann::json& j);
nlohmann::json timeline_to_json(const Timeline& tl);
Timeline load_timeline(const std::filesystem::path& path);
void save_timeline(const Timeline& tl, const std::filesystem::path& path);

// Shared helpers.
// Throws ParseError unless j is an object with the given format tag and
// the supported version.
void check_header(const nlohmann::json& j, std::string_view format);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string dump_canonical(const nlohmann::json& j);

}  // namespace pipesched

#endif  // PIPESCHED_IO_HPP_
