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

// pipesched command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pipesched/analysis.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/io.hpp"
#include "pipesched/patterns.hpp"
#include "pipesched/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void report(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

// Writes to path, or stdout for "-".
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    pipesched::write_text_file(path, text);
  }
}

struct GenArgs {
  std::string problem, schedule, out;
  int nsub = 0;
  double budget = 30.0;
  long max_nodes = -1;
  double gap = 0.01;
  std::string engine = "auto";
  std::string objective = "span";
};

int run_gen(const GenArgs& a) {
  const pipesched::ProblemSpec spec = pipesched::load_problem(a.problem);
  pipesched::GenerateOptions opt;
  opt.engine = a.engine;
  opt.exact.budget_seconds = a.budget;
  opt.exact.max_nodes = a.max_nodes;
  opt.exact.gap = a.gap;
  opt.objective = pipesched::parse_objective(a.objective);
  if (a.nsub > 0) opt.n_sub = {a.nsub};
  else if (a.schedule == "cross-ud-sub") opt.n_sub = {spec.n_sub > 1 ? spec.n_sub : 2};
  const auto g = pipesched::generate_schedule(spec, a.schedule, opt);
  emit(a.out, pipesched::dump_canonical(pipesched::schedule_to_json(g.plan)));
  return kExitOk;
}

int run_sim(const std::string& problem, const std::string& schedule, const std::string& out) {
  const auto spec = pipesched::load_problem(problem);
  const auto plan = pipesched::load_schedule(schedule);
  const auto tl = pipesched::simulate(plan, spec);
  emit(out, pipesched::dump_canonical(pipesched::timeline_to_json(tl)));
  return kExitOk;
}

int run_validate(const std::string& problem, const std::string& schedule) {
  const auto spec = pipesched::load_problem(problem);
  const auto plan = pipesched::load_schedule(schedule);
  const auto graph =
      pipesched::build_graph(spec, plan.n_sub, pipesched::uses_combined_backward(plan.family));
  const auto violations = pipesched::validate_schedule(graph, plan, spec);
  for (const auto& v : violations) {
    json j{{"kind", v.kind}, {"message", v.message}, {"stage", v.stage}};
    if (v.op) j["op"] = pipesched::to_string(*v.op);
    std::cout << j.dump() << "\n";
  }
  std::cout.flush();
  return violations.empty() ? kExitOk : kExitFailure;
}

int run_gantt(const std::string& timeline, const std::string& out) {
  emit(out, pipesched::gantt_svg(pipesched::load_timeline(timeline)));
  return kExitOk;
}

int run_sweep(const std::string& config, const std::string& out, int workers) {
  auto cfg = pipesched::load_sweep_config(config);
  if (workers > 0) cfg.workers = workers;
  emit(out, pipesched::sweep_csv(pipesched::delay_sweep(cfg)));
  return kExitOk;
}

int run_ppdp(const std::string& config, const std::string& out, int workers) {
  auto cfg = pipesched::load_ppdp_config(config);
  if (workers > 0) cfg.workers = workers;
  emit(out, pipesched::ppdp_csv(pipesched::pp_vs_dp(cfg)));
  return kExitOk;
}

int run_export_lp(const std::string& problem, const std::string& pattern, int nsub,
                  const std::string& objective, const std::string& out) {
  pipesched::ProblemSpec spec = pipesched::load_problem(problem);
  if (!pattern.empty()) {
    const auto pat = pipesched::parse_pattern(pattern);
    if (pat != spec.pattern) spec = pipesched::rechunk(spec, pat, 2);
  }
  const int k = nsub > 0 ? nsub : spec.n_sub;
  const auto model = pipesched::build_model(pipesched::build_graph(spec, k, false), spec,
                                            pipesched::parse_objective(objective));
  emit(out, pipesched::lp_text(model));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pipeline-parallel schedule generation and simulation under cross-DC delays"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a schedule for a problem");
  gen_cmd->add_option("--problem", gen.problem, "Problem file")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--schedule", gen.schedule, "Schedule family")
      ->required()
      ->check(CLI::IsMember(pipesched::family_names()));
  gen_cmd->add_option("--out", gen.out, "Output schedule file ('-' for stdout)")->required();
  gen_cmd->add_option("--nsub", gen.nsub, "Sub-blocks per block (cross-ud-sub)")
      ->check(CLI::Range(1, 64));
  gen_cmd->add_option("--budget", gen.budget, "Exact solver time budget in seconds")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-nodes", gen.max_nodes, "Exact solver node budget (-1: unlimited)");
  gen_cmd->add_option("--gap", gen.gap, "Exact solver relative gap")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--engine", gen.engine, "auto, exact, greedy or list")
      ->check(CLI::IsMember({"auto", "exact", "greedy", "list"}));
  gen_cmd->add_option("--objective", gen.objective, "Exact objective: span or runtime")
      ->check(CLI::IsMember({"span", "runtime"}));

  std::string problem, schedule_file, out, timeline, config, pattern, objective = "span";
  int workers = 0, nsub = 0;

  auto* sim_cmd = app.add_subcommand("sim", "Simulate a schedule and write its timeline");
  sim_cmd->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--schedule-file", schedule_file)->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", out, "Timeline file ('-' for stdout)")->required();

  auto* val_cmd = app.add_subcommand("validate", "Check a schedule; violations go to stdout");
  val_cmd->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--schedule-file", schedule_file)->required()->check(CLI::ExistingFile);

  auto* gantt_cmd = app.add_subcommand("gantt", "Render a timeline as SVG");
  gantt_cmd->add_option("--timeline", timeline)->required()->check(CLI::ExistingFile);
  gantt_cmd->add_option("--out", out, "SVG file ('-' for stdout)")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Delay-sensitivity sweep to CSV");
  sweep_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", out, "CSV file (default stdout)")->default_val("-");
  sweep_cmd->add_option("--workers", workers, "Parallel cells (default PIPESCHED_WORKERS or cores)")
      ->check(CLI::PositiveNumber);

  auto* ppdp_cmd = app.add_subcommand("ppdp", "Cross-DC PP vs DP comparison to CSV");
  ppdp_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  ppdp_cmd->add_option("--out", out, "CSV file (default stdout)")->default_val("-");
  ppdp_cmd->add_option("--workers", workers)->check(CLI::PositiveNumber);

  auto* lp_cmd = app.add_subcommand("export-lp", "Write the scheduling model in LP format");
  lp_cmd->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  lp_cmd->add_option("--pattern", pattern, "UD, Loop or Wave (single-chunk problems are split)");
  lp_cmd->add_option("--nsub", nsub)->check(CLI::Range(1, 64));
  lp_cmd->add_option("--objective", objective)->check(CLI::IsMember({"span", "runtime"}));
  lp_cmd->add_option("--out", out, "LP file ('-' for stdout)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*sim_cmd) return run_sim(problem, schedule_file, out);
    if (*val_cmd) return run_validate(problem, schedule_file);
    if (*gantt_cmd) return run_gantt(timeline, out);
    if (*sweep_cmd) return run_sweep(config, out, workers);
    if (*ppdp_cmd) return run_ppdp(config, out, workers);
    if (*lp_cmd) return run_export_lp(problem, pattern, nsub, objective, out);
  } catch (const pipesched::ParseError& e) {
    report("parse", e.what());
  } catch (const pipesched::ValidationError& e) {
    report("validation", e.what());
  } catch (const pipesched::UnsupportedError& e) {
    report("unsupported", e.what());
  } catch (const pipesched::InfeasibleError& e) {
    report("infeasible", e.what());
  } catch (const pipesched::DeadlockError& e) {
    report("deadlock", e.what());
  } catch (const std::exception& e) {
    report("internal", e.what());
  }
  return kExitFailure;
}
