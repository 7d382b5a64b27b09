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

#ifndef PIPESCHED_ANALYSIS_HPP_
#define PIPESCHED_ANALYSIS_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/types.hpp"

namespace pipesched {

// ---------------------------------------------------------------------------
// Schedule generation by family name.

// Families: 1f1b, iv1f1b, zbh1, zbv, cross-ud, cross-ud-sub, cross-wave,
// cross-loop.
const std::vector<std::string>& family_names();
Pattern family_pattern(std::string_view family);
bool is_static_family(std::string_view family);

struct GenerateOptions {
  // "auto", "exact", "greedy" (cross-ud) or "list" (cross-wave). Auto picks
  // the exact solver for small instances.
  std::string engine = "auto";
  std::vector<int> n_sub = {};  // cross-ud-sub: best over these; empty: {spec.n_sub}
  ExactOptions exact = {};
  Objective objective = Objective::kStage0Span;
};

struct GeneratedSchedule {
  SchedulePlan plan;
  Timeline timeline;  // with metrics
  bool optimal = false;
};

// Instances small enough for the exact solver under engine "auto".
bool fits_exact_guideline(const ProblemSpec& spec);

// Builds or solves the family on spec (which must already use the family's
// pattern) and simulates the result.
GeneratedSchedule generate_schedule(const ProblemSpec& spec, std::string_view family,
                                    const GenerateOptions& options = {});

// ---------------------------------------------------------------------------
// Problem transforms.

// Splits every stage of a single-chunk spec into n_chunks equal chunks and
// switches to the given pattern. Durations and memory deltas are divided.
ProblemSpec rechunk(const ProblemSpec& base, Pattern pattern, int n_chunks);

// Cross-DC latency lat_ratio * t_f_ref and bandwidth time bw_ratio * t_f_ref
// for the largest boundary message. Intra-DC entries are kept.
ProblemSpec with_delay_ratios(const ProblemSpec& spec, double lat_ratio, double bw_ratio,
                              double t_f_ref);

// ---------------------------------------------------------------------------
// Delay sweep.

struct SweepConfig {
  ProblemSpec base;  // UD, single chunk
  std::vector<double> lat_ratios = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> bw_ratios = {0.0, 0.5, 1.0, 2.0};
  std::vector<std::string> families = {"1f1b", "iv1f1b", "zbh1", "zbv", "cross-ud", "cross-ud-sub",
                                       "cross-wave", "cross-loop"};
  std::string reference_family = "zbv";
  double reference_lat = 0.0;
  double reference_bw = 0.0;
  int n_chunks = 2;  // Loop and Wave
  std::vector<int> greedy_n_sub = {1, 2, 4};
  ExactOptions exact = {60.0, 300000, 0.0, true, {}};
  Objective objective = Objective::kRuntime;
  int n_dp = 1;
  int workers = 0;  // 0: PIPESCHED_WORKERS or hardware concurrency

  double epsilon() const { return static_cast<double>(base.n_mb) / base.n_pp; }
  double global_batch() const { return epsilon() * base.n_pp * n_dp; }
};

void validate(const SweepConfig& config);

struct SweepRow {
  std::string family;
  double lat_ratio = 0.0;
  double bw_ratio = 0.0;
  double makespan = 0.0;  // first F on stage 0 to last completion
  double slowdown = 0.0;  // makespan / reference makespan
  std::string engine;
  bool optimal = false;
  std::string error;  // non-empty when the cell failed
};

// Spec a family runs on at a grid point, including its memory budget: UD
// dynamic families get the 1F1B peak, Wave the ZBV peak, Loop the
// interleaved 1F1B peak; static families are unbounded.
ProblemSpec sweep_cell_spec(const SweepConfig& config, std::string_view family, double lat_ratio,
                            double bw_ratio);

// Rows sorted by (family, lat_ratio, bw_ratio).
std::vector<SweepRow> delay_sweep(const SweepConfig& config);

// header: family,lat_ratio,bw_ratio,makespan,slowdown,engine,optimal,error
std::string sweep_csv(const std::vector<SweepRow>& rows);

SweepConfig sweep_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
nlohmann::json sweep_config_to_json(const SweepConfig& config);
SweepConfig load_sweep_config(const std::filesystem::path& path);

// Worker count from the environment (PIPESCHED_WORKERS) or the hardware.
int default_workers();

// ---------------------------------------------------------------------------
// Cross-DC pipeline parallelism vs cross-DC data parallelism.

struct PPDPConfig {
  double n_params = 406e9;
  long hidden = 16384;
  long seq_len = 8192;
  long microbatch = 1;
  int n_tp = 8;
  int n_pp = 16;
  int n_dp = 64;
  int n_layers = 126;  // transformer layers; embedding and output add two
  double p_gpu = 500e12;
  double c_layer = 5.45e13;  // FLOP per layer and microbatch
  int n_dc = 2;
  int bytes_per_elem = 2;
  long global_batch = 0;  // 0: 2 * n_pp * n_dp
  double d_ratio = 1.0;   // t_d / t_f
  double w_ratio = 1.0;   // t_w / t_f
  std::vector<double> bandwidths_gBps = {4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::vector<double> latencies_s = {0.004, 0.008, 0.016, 0.032, 0.064, 0.128};
  std::vector<int> greedy_n_sub = {1, 2, 4};
  int workers = 0;

  int layers_per_stage() const;
  int n_mb() const;
  double forward_time() const;     // per stage and microbatch
  double message_bytes() const;    // one pipeline boundary, all DP replicas
  // Bytes per direction of one cross-DC gradient synchronization: two
  // rounds, each moving half of the parameters.
  double dp_bytes() const;
};

void validate(const PPDPConfig& config);

// UD (or Wave with two chunks) instance of the configuration at one link
// setting. Memory budgets follow the sweep rules.
ProblemSpec ppdp_problem(const PPDPConfig& config, Pattern pattern, double bandwidth_gBps,
                         double latency_s);

struct PPDPRow {
  double bandwidth_gBps = 0.0;
  double latency_s = 0.0;
  double t_pp = 0.0;
  double t_dp = 0.0;
  double speedup = 0.0;                // t_dp / t_pp
  double slowdown_vs_single_dc = 0.0;  // t_pp / zero-delay single-DC ZBV
  std::string pp_family;
  std::string pp_engine;
};

// Iteration time of the zero-delay single-DC ZBV run.
double ppdp_single_dc_time(const PPDPConfig& config);
std::vector<PPDPRow> pp_vs_dp(const PPDPConfig& config);

// header: bandwidth_gBps,latency_s,t_pp,t_dp,speedup,slowdown_vs_single_dc,pp_family,pp_engine
std::string ppdp_csv(const std::vector<PPDPRow>& rows);

PPDPConfig ppdp_config_from_json(const nlohmann::json& j);
nlohmann::json ppdp_config_to_json(const PPDPConfig& config);
PPDPConfig load_ppdp_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Bubble strides.

struct StridePoint {
  double latency = 0.0;
  double makespan = 0.0;
  int critical_crossings = 0;  // cross-DC transfers on the critical path
  std::string svg;
};

struct StrideReport {
  std::vector<StridePoint> points;
  std::vector<double> slopes;  // makespan change per unit latency between neighbours
};

// Cross-DC transfers on the chain of binding constraints that ends at the
// last completion of the timeline. Timeline ids must match the graph.
int critical_path_crossings(const DependencyGraph& graph, const Timeline& timeline);

// Simulates a static family with every cross-DC latency set to each point.
StrideReport bubble_stride_demo(const ProblemSpec& spec, std::string_view family,
                                const std::vector<double>& latency_points);

// ---------------------------------------------------------------------------
// Gantt rendering.

// One row per stage, blocks classed op-F / op-D / op-W, transfers as thin
// bars below the sending stage (class comm, or dp for DP traffic), dashed
// lines between DCs. Output depends only on the timeline.
std::string gantt_svg(const Timeline& timeline);
void render_gantt(const Timeline& timeline, const std::filesystem::path& path);
void render_gantt(const Timeline& timeline, const ProblemSpec& spec,
                  const std::filesystem::path& path);

}  // namespace pipesched

#endif  // PIPESCHED_ANALYSIS_HPP_
