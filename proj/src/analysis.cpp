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

#include "pipesched/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "pipesched/greedy.hpp"
#include "pipesched/io.hpp"
#include "pipesched/patterns.hpp"
#include "pipesched/presets.hpp"
#include "pipesched/simulator.hpp"
#include "pipesched/static_schedules.hpp"

namespace pipesched {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double runtime_of(const Timeline& tl) { return tl.metrics.makespan_stage0; }

// Memory limit no schedule can exceed.
std::vector<double> unbounded_limit(const ProblemSpec& spec) {
  std::vector<double> out(spec.n_pp, 0.0);
  for (int s = 0; s < spec.n_pp; ++s) {
    for (int c = 0; c < spec.n_chunks; ++c) out[s] += std::max(spec.m_f[s][c], 0.0) * spec.n_mb;
  }
  return out;
}

GeneratedSchedule finish(SchedulePlan plan, Timeline tl, bool optimal) {
  GeneratedSchedule g;
  g.plan = std::move(plan);
  g.timeline = std::move(tl);
  g.optimal = optimal;
  return g;
}

GeneratedSchedule run_exact(const ProblemSpec& spec, std::string_view family,
                            const GenerateOptions& opt) {
  ProblemSpec one = spec;
  one.n_sub = 1;
  const COModel model = build_model(build_graph(one, 1, false), one, opt.objective);
  ExactResult r = solve_exact(model, opt.exact);
  r.plan.family = std::string(family);
  r.plan.engine = "exact";
  return finish(std::move(r.plan), std::move(r.timeline), r.optimal);
}

GeneratedSchedule run_greedy(const ProblemSpec& spec, std::string_view family,
                             const std::vector<int>& subs) {
  std::optional<GreedyResult> best;
  for (int k : subs) {
    ProblemSpec s = spec;
    s.n_sub = k;
    GreedyResult r = generate_greedy(s);
    if (!best || runtime_of(r.timeline) < runtime_of(best->timeline) - kTimeEps) best = std::move(r);
  }
  if (!best) throw ValidationError("no sub-block counts given");
  best->plan.family = std::string(family);
  return finish(std::move(best->plan), std::move(best->timeline), false);
}

// Delay-aware list order, or the frozen ZBV order when that is faster.
GeneratedSchedule run_wave_list(const ProblemSpec& spec) {
  SchedulePlan list;
  list.family = "cross-wave";
  list.engine = "list";
  list.stage_order = wave_priority_order(spec, false);
  list.memory_budget = spec.m_limit;
  Timeline tl = simulate(list, spec);
  try {
    SchedulePlan zbv = build_static(spec, StaticFamily::kZBV);
    Timeline ztl = simulate(zbv, spec);
    if (runtime_of(ztl) < runtime_of(tl) - kTimeEps) {
      list.stage_order = zbv.stage_order;
      tl = std::move(ztl);
    }
  } catch (const InfeasibleError&) {
  }
  return finish(std::move(list), std::move(tl), false);
}

}  // namespace

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {"1f1b",     "iv1f1b",       "zbh1",       "zbv",
                                                 "cross-ud", "cross-ud-sub", "cross-wave", "cross-loop"};
  return names;
}

Pattern family_pattern(std::string_view family) {
  if (family == "1f1b" || family == "zbh1" || family == "cross-ud" || family == "cross-ud-sub") {
    return Pattern::kUD;
  }
  if (family == "iv1f1b" || family == "cross-loop") return Pattern::kLoop;
  if (family == "zbv" || family == "cross-wave") return Pattern::kWave;
  throw ValidationError("unknown schedule family '" + std::string(family) + "'");
}

bool is_static_family(std::string_view family) {
  return family == "1f1b" || family == "iv1f1b" || family == "zbh1" || family == "zbv";
}

bool fits_exact_guideline(const ProblemSpec& spec) {
  return spec.n_pp <= 4 && spec.n_mb <= 6 && spec.n_chunks <= 2;
}

GeneratedSchedule generate_schedule(const ProblemSpec& spec, std::string_view family,
                                    const GenerateOptions& opt) {
  validate(spec);
  const Pattern pat = family_pattern(family);
  if (spec.pattern != pat) {
    throw ValidationError("schedule " + std::string(family) + " requires the " +
                          std::string(to_string(pat)) + " pattern, problem uses " +
                          std::string(to_string(spec.pattern)));
  }
  if (is_static_family(family)) {
    SchedulePlan plan = build_static(spec, parse_static_family(family));
    Timeline tl = simulate(plan, spec);
    return finish(std::move(plan), std::move(tl), false);
  }
  const bool small = fits_exact_guideline(spec);
  const std::string& engine = opt.engine;
  if (engine != "auto" && engine != "exact" && engine != "greedy" && engine != "list") {
    throw ValidationError("unknown engine '" + engine + "'");
  }
  if (family == "cross-ud-sub") {
    if (engine == "exact" || engine == "list") throw ValidationError("cross-ud-sub is greedy only");
    return run_greedy(spec, family, opt.n_sub.empty() ? std::vector<int>{spec.n_sub} : opt.n_sub);
  }
  if (family == "cross-ud") {
    if (engine == "list") throw ValidationError("cross-ud has no list engine");
    if (engine == "exact" || (engine == "auto" && small)) return run_exact(spec, family, opt);
    return run_greedy(spec, family, {1});
  }
  if (family == "cross-wave") {
    if (engine == "greedy") throw ValidationError("cross-wave has no greedy engine");
    if (engine == "exact" || (engine == "auto" && small)) return run_exact(spec, family, opt);
    return run_wave_list(spec);
  }
  // cross-loop
  if (engine == "greedy" || engine == "list") {
    throw ValidationError("cross-loop supports the exact engine only");
  }
  return run_exact(spec, family, opt);
}

ProblemSpec rechunk(const ProblemSpec& base, Pattern pattern, int n_chunks) {
  if (base.n_chunks != 1) throw ValidationError("rechunk expects a single-chunk problem");
  if (n_chunks < 1) throw ValidationError("n_chunks must be >= 1");
  ProblemSpec s = base;
  s.pattern = pattern;
  s.n_chunks = n_chunks;
  auto split = [&](const Matrix<double>& m) {
    Matrix<double> out(base.n_pp, std::vector<double>(n_chunks));
    for (int st = 0; st < base.n_pp; ++st) {
      for (int c = 0; c < n_chunks; ++c) out[st][c] = m[st][0] / n_chunks;
    }
    return out;
  };
  s.t_f = split(base.t_f);
  s.t_d = split(base.t_d);
  s.t_w = split(base.t_w);
  s.m_f = split(base.m_f);
  s.m_d = split(base.m_d);
  s.m_w = split(base.m_w);
  validate(s);
  return s;
}

ProblemSpec with_delay_ratios(const ProblemSpec& spec, double lat_ratio, double bw_ratio,
                              double t_f_ref) {
  if (lat_ratio < 0 || bw_ratio < 0) throw ValidationError("delay ratios must be >= 0");
  if (!(t_f_ref > 0)) throw ValidationError("reference forward time must be positive");
  double msg = 0.0;
  for (double m : spec.msg_fwd) msg = std::max(msg, m);
  for (double m : spec.msg_bwd) msg = std::max(msg, m);
  if (bw_ratio > 0 && msg <= 0) throw ValidationError("bandwidth ratio needs a positive message size");
  ProblemSpec s = spec;
  for (int a = 0; a < s.n_dc(); ++a) {
    for (int b = 0; b < s.n_dc(); ++b) {
      if (a == b) continue;
      s.alpha[a][b] = lat_ratio * t_f_ref;
      s.beta[a][b] = bw_ratio > 0 ? bw_ratio * t_f_ref / msg : 0.0;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

void validate(const SweepConfig& c) {
  validate(c.base);
  if (c.base.pattern != Pattern::kUD || c.base.n_chunks != 1) {
    throw ValidationError("sweep base problem must be UD with one chunk");
  }
  if (c.lat_ratios.empty() || c.bw_ratios.empty()) throw ValidationError("empty delay grid");
  for (double r : c.lat_ratios) {
    if (!(r >= 0)) throw ValidationError("latency ratios must be >= 0");
  }
  for (double r : c.bw_ratios) {
    if (!(r >= 0)) throw ValidationError("bandwidth ratios must be >= 0");
  }
  if (c.reference_lat < 0 || c.reference_bw < 0) throw ValidationError("reference ratios must be >= 0");
  if (c.families.empty()) throw ValidationError("no families to compare");
  for (const auto& f : c.families) family_pattern(f);
  if (std::find(c.families.begin(), c.families.end(), c.reference_family) == c.families.end()) {
    throw ValidationError("reference family '" + c.reference_family + "' is not in the family list");
  }
  if (c.n_chunks < 2) throw ValidationError("sweep n_chunks must be >= 2");
  if (c.greedy_n_sub.empty()) throw ValidationError("greedy_n_sub must not be empty");
  for (int k : c.greedy_n_sub) {
    if (k < 1) throw ValidationError("greedy_n_sub entries must be >= 1");
  }
  if (c.n_dp < 1) throw ValidationError("n_dp must be >= 1");
  if (c.workers < 0) throw ValidationError("workers must be >= 0");
}

ProblemSpec sweep_cell_spec(const SweepConfig& config, std::string_view family, double lat_ratio,
                            double bw_ratio) {
  const Pattern pat = family_pattern(family);
  ProblemSpec s = config.base;
  if (pat != Pattern::kUD) s = rechunk(config.base, pat, pat == Pattern::kWave ? 2 : config.n_chunks);
  s = with_delay_ratios(s, lat_ratio, bw_ratio, config.base.forward_time_per_stage());
  s.n_sub = 1;
  s.m_limit = unbounded_limit(s);
  if (is_static_family(family)) return s;
  switch (pat) {
    case Pattern::kUD:
      s.m_limit = one_f_one_b_peak(s);
      break;
    case Pattern::kWave:
      s.m_limit = plan_peak_memory(build_static(s, StaticFamily::kZBV), s);
      break;
    case Pattern::kLoop:
      s.m_limit = plan_peak_memory(build_static(s, StaticFamily::kIV1F1B), s);
      break;
  }
  return s;
}

int default_workers() {
  if (const char* env = std::getenv("PIPESCHED_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs task(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& task) {
  const int k = std::clamp(workers > 0 ? workers : default_workers(), 1, std::max(n, 1));
  if (k == 1) {
    for (int i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < k; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

SweepRow run_cell(const SweepConfig& config, const std::string& family, double lat, double bw) {
  SweepRow row;
  row.family = family;
  row.lat_ratio = lat;
  row.bw_ratio = bw;
  try {
    const ProblemSpec spec = sweep_cell_spec(config, family, lat, bw);
    GenerateOptions opt;
    opt.engine = family == "cross-ud-sub" ? "greedy" : "exact";
    if (is_static_family(family)) opt.engine = "auto";
    opt.n_sub = config.greedy_n_sub;
    opt.exact = config.exact;
    opt.objective = config.objective;
    const GeneratedSchedule g = generate_schedule(spec, family, opt);
    row.makespan = runtime_of(g.timeline);
    row.engine = g.plan.engine;
    row.optimal = g.optimal;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

}  // namespace

std::vector<SweepRow> delay_sweep(const SweepConfig& config) {
  validate(config);
  std::vector<std::tuple<std::string, double, double>> cells;
  for (const auto& f : config.families) {
    for (double l : config.lat_ratios) {
      for (double b : config.bw_ratios) cells.emplace_back(f, l, b);
    }
  }
  std::vector<SweepRow> rows(cells.size());
  parallel_for(static_cast<int>(cells.size()), config.workers, [&](int i) {
    const auto& [f, l, b] = cells[i];
    rows[i] = run_cell(config, f, l, b);
  });

  // The reference cell is recomputed only when it is not on the grid.
  std::optional<double> ref;
  for (const auto& r : rows) {
    if (r.family == config.reference_family && r.lat_ratio == config.reference_lat &&
        r.bw_ratio == config.reference_bw && r.error.empty()) {
      ref = r.makespan;
    }
  }
  if (!ref) {
    const SweepRow r = run_cell(config, config.reference_family, config.reference_lat,
                                config.reference_bw);
    if (!r.error.empty()) throw ValidationError("reference cell failed: " + r.error);
    ref = r.makespan;
  }
  for (auto& r : rows) {
    if (r.error.empty()) r.slowdown = r.makespan / *ref;
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.family, a.lat_ratio, a.bw_ratio) < std::tie(b.family, b.lat_ratio, b.bw_ratio);
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "family,lat_ratio,bw_ratio,makespan,slowdown,engine,optimal,error\n";
  for (const auto& r : rows) {
    os << csv_field(r.family) << ',' << fmt(r.lat_ratio) << ',' << fmt(r.bw_ratio) << ','
       << (r.error.empty() ? fmt(r.makespan) : "") << ',' << (r.error.empty() ? fmt(r.slowdown) : "")
       << ',' << csv_field(r.engine) << ',' << (r.optimal ? "true" : "false") << ','
       << csv_field(r.error) << '\n';
  }
  return os.str();
}

namespace {

template <class T>
void read_opt(const json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace

SweepConfig sweep_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_header(j, "pipesched-sweep");
  SweepConfig c;
  if (j.contains("problem")) {
    c.base = problem_from_json(j.at("problem"));
  } else if (j.contains("problem_file")) {
    std::filesystem::path p = j.at("problem_file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    c.base = load_problem(p);
  } else {
    throw ParseError("sweep config needs 'problem' or 'problem_file'");
  }
  read_opt(j, "lat_ratios", c.lat_ratios);
  read_opt(j, "bw_ratios", c.bw_ratios);
  read_opt(j, "families", c.families);
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    read_opt(r, "family", c.reference_family);
    read_opt(r, "lat_ratio", c.reference_lat);
    read_opt(r, "bw_ratio", c.reference_bw);
  }
  read_opt(j, "n_chunks", c.n_chunks);
  read_opt(j, "greedy_n_sub", c.greedy_n_sub);
  read_opt(j, "n_dp", c.n_dp);
  read_opt(j, "workers", c.workers);
  if (j.contains("exact")) {
    const json& e = j.at("exact");
    read_opt(e, "budget_seconds", c.exact.budget_seconds);
    read_opt(e, "max_nodes", c.exact.max_nodes);
    read_opt(e, "gap", c.exact.gap);
    std::string obj = std::string(to_string(c.objective));
    read_opt(e, "objective", obj);
    c.objective = parse_objective(obj);
  }
  validate(c);
  return c;
}

json sweep_config_to_json(const SweepConfig& c) {
  json j;
  j["format"] = "pipesched-sweep";
  j["version"] = kFormatVersion;
  j["problem"] = problem_to_json(c.base);
  j["lat_ratios"] = c.lat_ratios;
  j["bw_ratios"] = c.bw_ratios;
  j["families"] = c.families;
  j["reference"] = {{"family", c.reference_family},
                    {"lat_ratio", c.reference_lat},
                    {"bw_ratio", c.reference_bw}};
  j["n_chunks"] = c.n_chunks;
  j["greedy_n_sub"] = c.greedy_n_sub;
  j["n_dp"] = c.n_dp;
  j["workers"] = c.workers;
  j["exact"] = {{"budget_seconds", c.exact.budget_seconds},
                {"max_nodes", c.exact.max_nodes},
                {"gap", c.exact.gap},
                {"objective", std::string(to_string(c.objective))}};
  return j;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  return sweep_config_from_json(read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------

int PPDPConfig::layers_per_stage() const { return (n_layers + 2 + n_pp - 1) / n_pp; }

int PPDPConfig::n_mb() const {
  const long gbs = global_batch > 0 ? global_batch : 2L * n_pp * n_dp;
  return static_cast<int>(gbs / (microbatch * n_dp));
}

double PPDPConfig::forward_time() const { return layers_per_stage() * c_layer / (p_gpu * n_tp); }

double PPDPConfig::message_bytes() const {
  return message_size(microbatch, seq_len, hidden, n_dp, bytes_per_elem);
}

double PPDPConfig::dp_bytes() const { return 2.0 * (n_params / 2.0) * bytes_per_elem; }

void validate(const PPDPConfig& c) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
  };
  need(c.n_params > 0, "n_params must be positive");
  need(c.hidden > 0 && c.seq_len > 0 && c.microbatch > 0, "model shape must be positive");
  need(c.n_tp > 0 && c.n_pp > 1 && c.n_dp > 0, "parallel degrees must be positive, n_pp >= 2");
  need(c.n_layers > 0, "n_layers must be positive");
  need(c.p_gpu > 0 && c.c_layer > 0, "p_gpu and c_layer must be positive");
  need(c.n_dc >= 2 && c.n_dc <= c.n_pp, "n_dc must be in [2, n_pp]");
  need(c.bytes_per_elem > 0, "bytes_per_elem must be positive");
  need(c.global_batch >= 0, "global_batch must be >= 0");
  need(c.d_ratio > 0 && c.w_ratio > 0, "backward ratios must be positive");
  need(!c.bandwidths_gBps.empty() && !c.latencies_s.empty(), "empty link grid");
  for (double b : c.bandwidths_gBps) need(b > 0, "bandwidths must be positive");
  for (double l : c.latencies_s) need(l >= 0, "latencies must be >= 0");
  need(!c.greedy_n_sub.empty(), "greedy_n_sub must not be empty");
  for (int k : c.greedy_n_sub) need(k >= 1, "greedy_n_sub entries must be >= 1");
  need(c.workers >= 0, "workers must be >= 0");
  need(c.n_mb() >= c.n_pp, "global batch gives fewer microbatches than stages");
}

namespace {

ProblemSpec ppdp_base(const PPDPConfig& c, int n_dc, double alpha, double beta) {
  UniformOptions o;
  o.n_pp = c.n_pp;
  o.n_mb = c.n_mb();
  o.n_dc = n_dc;
  o.t_f = c.forward_time();
  o.t_d = c.d_ratio * o.t_f;
  o.t_w = c.w_ratio * o.t_f;
  o.msg = c.message_bytes();
  o.m_f = 1.0;
  o.m_d = -1.0;
  o.m_w = 0.0;
  o.alpha = alpha;
  o.beta = beta;
  return uniform_problem(o);
}

ProblemSpec with_budget(ProblemSpec ud, Pattern pattern) {
  if (pattern == Pattern::kUD) {
    ud.m_limit = one_f_one_b_peak(ud);
    return ud;
  }
  if (pattern != Pattern::kWave) throw ValidationError("pp_vs_dp uses the UD or Wave pattern");
  ProblemSpec w = rechunk(ud, Pattern::kWave, 2);
  w.m_limit = plan_peak_memory(build_static(w, StaticFamily::kZBV), w);
  return w;
}

}  // namespace

ProblemSpec ppdp_problem(const PPDPConfig& config, Pattern pattern, double bandwidth_gBps,
                         double latency_s) {
  validate(config);
  if (!(bandwidth_gBps > 0) || latency_s < 0) throw ValidationError("invalid link setting");
  return with_budget(ppdp_base(config, config.n_dc, latency_s, gBps_to_beta(bandwidth_gBps)),
                     pattern);
}

double ppdp_single_dc_time(const PPDPConfig& config) {
  validate(config);
  const ProblemSpec w = with_budget(ppdp_base(config, 1, 0.0, 0.0), Pattern::kWave);
  return runtime_of(simulate(build_static(w, StaticFamily::kZBV), w));
}

std::vector<PPDPRow> pp_vs_dp(const PPDPConfig& config) {
  validate(config);
  const double single = ppdp_single_dc_time(config);
  std::vector<std::pair<double, double>> cells;
  for (double b : config.bandwidths_gBps) {
    for (double l : config.latencies_s) cells.emplace_back(b, l);
  }
  std::vector<PPDPRow> rows(cells.size());
  parallel_for(static_cast<int>(cells.size()), config.workers, [&](int i) {
    const auto [bw, lat] = cells[i];
    PPDPRow row;
    row.bandwidth_gBps = bw;
    row.latency_s = lat;
    GenerateOptions opt;
    opt.engine = "greedy";
    opt.n_sub = config.greedy_n_sub;
    const GeneratedSchedule ud =
        generate_schedule(ppdp_problem(config, Pattern::kUD, bw, lat), "cross-ud-sub", opt);
    opt.engine = "list";
    const GeneratedSchedule wave =
        generate_schedule(ppdp_problem(config, Pattern::kWave, bw, lat), "cross-wave", opt);
    const GeneratedSchedule& best = runtime_of(wave.timeline) < runtime_of(ud.timeline) ? wave : ud;
    row.t_pp = runtime_of(best.timeline);
    row.pp_family = best.plan.n_sub > 1 || best.plan.family == "cross-wave"
                        ? best.plan.family
                        : std::string("cross-ud");
    row.pp_engine = best.plan.engine;
    row.t_dp = single + 2.0 * lat + config.dp_bytes() * gBps_to_beta(bw);
    row.speedup = row.t_dp / row.t_pp;
    row.slowdown_vs_single_dc = row.t_pp / single;
    rows[i] = row;
  });
  std::sort(rows.begin(), rows.end(), [](const PPDPRow& a, const PPDPRow& b) {
    return std::tie(a.bandwidth_gBps, a.latency_s) < std::tie(b.bandwidth_gBps, b.latency_s);
  });
  return rows;
}

std::string ppdp_csv(const std::vector<PPDPRow>& rows) {
  std::ostringstream os;
  os << "bandwidth_gBps,latency_s,t_pp,t_dp,speedup,slowdown_vs_single_dc,pp_family,pp_engine\n";
  for (const auto& r : rows) {
    os << fmt(r.bandwidth_gBps) << ',' << fmt(r.latency_s) << ',' << fmt(r.t_pp) << ','
       << fmt(r.t_dp) << ',' << fmt(r.speedup) << ',' << fmt(r.slowdown_vs_single_dc) << ','
       << r.pp_family << ',' << r.pp_engine << '\n';
  }
  return os.str();
}

PPDPConfig ppdp_config_from_json(const json& j) {
  check_header(j, "pipesched-ppdp");
  PPDPConfig c;
  read_opt(j, "n_params", c.n_params);
  read_opt(j, "hidden", c.hidden);
  read_opt(j, "seq_len", c.seq_len);
  read_opt(j, "microbatch", c.microbatch);
  read_opt(j, "n_tp", c.n_tp);
  read_opt(j, "n_pp", c.n_pp);
  read_opt(j, "n_dp", c.n_dp);
  read_opt(j, "n_layers", c.n_layers);
  read_opt(j, "p_gpu", c.p_gpu);
  read_opt(j, "c_layer", c.c_layer);
  read_opt(j, "n_dc", c.n_dc);
  read_opt(j, "bytes_per_elem", c.bytes_per_elem);
  read_opt(j, "global_batch", c.global_batch);
  read_opt(j, "d_ratio", c.d_ratio);
  read_opt(j, "w_ratio", c.w_ratio);
  read_opt(j, "bandwidths_gBps", c.bandwidths_gBps);
  read_opt(j, "latencies_s", c.latencies_s);
  read_opt(j, "greedy_n_sub", c.greedy_n_sub);
  read_opt(j, "workers", c.workers);
  validate(c);
  return c;
}

json ppdp_config_to_json(const PPDPConfig& c) {
  json j;
  j["format"] = "pipesched-ppdp";
  j["version"] = kFormatVersion;
  j["n_params"] = c.n_params;
  j["hidden"] = c.hidden;
  j["seq_len"] = c.seq_len;
  j["microbatch"] = c.microbatch;
  j["n_tp"] = c.n_tp;
  j["n_pp"] = c.n_pp;
  j["n_dp"] = c.n_dp;
  j["n_layers"] = c.n_layers;
  j["p_gpu"] = c.p_gpu;
  j["c_layer"] = c.c_layer;
  j["n_dc"] = c.n_dc;
  j["bytes_per_elem"] = c.bytes_per_elem;
  j["global_batch"] = c.global_batch;
  j["d_ratio"] = c.d_ratio;
  j["w_ratio"] = c.w_ratio;
  j["bandwidths_gBps"] = c.bandwidths_gBps;
  j["latencies_s"] = c.latencies_s;
  j["greedy_n_sub"] = c.greedy_n_sub;
  j["workers"] = c.workers;
  return j;
}

PPDPConfig load_ppdp_config(const std::filesystem::path& path) {
  return ppdp_config_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------

int critical_path_crossings(const DependencyGraph& g, const Timeline& tl) {
  const double eps = 1e-9;
  std::map<int, const ComputeRecord*> ops;
  std::map<int, const CommRecord*> comms;
  for (const auto& r : tl.compute) ops[r.id] = &r;
  for (const auto& r : tl.comms) comms[r.id] = &r;
  if (ops.size() != g.compute.size() || comms.size() != g.comms.size()) {
    throw ValidationError("timeline does not match the dependency graph");
  }
  // Previous occupant per stage and per link, by start time.
  std::map<int, std::vector<const ComputeRecord*>> by_stage;
  for (const auto& r : tl.compute) by_stage[r.key.stage].push_back(&r);
  for (auto& [s, v] : by_stage) {
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->start < b->start; });
  }
  std::map<LinkId, std::vector<const CommRecord*>> by_link;
  for (const auto& r : tl.comms) {
    if (r.end > r.start) by_link[r.link].push_back(&r);
  }

  // Start from the latest completion; compute ops win ties.
  bool at_comm = false;
  int cur = -1;
  double last = -kInf;
  for (const auto& r : tl.compute) {
    if (r.end > last + eps) {
      last = r.end;
      cur = r.id;
    }
  }
  for (const auto& r : tl.comms) {
    if (r.arrival > last + eps) {
      last = r.arrival;
      cur = r.id;
      at_comm = true;
    }
  }
  int crossings = 0;
  while (cur >= 0) {
    if (at_comm) {
      const CommRecord& c = *comms.at(cur);
      if (c.link.cross_dc) ++crossings;
      if (c.start > c.ready + eps) {
        int prev = -1;
        for (const CommRecord* o : by_link[c.link]) {
          if (o->id != c.id && std::abs(o->end - c.start) <= eps) prev = o->id;
        }
        cur = prev;
        continue;
      }
      const int producer = g.comms[cur].producer;
      if (producer < 0) break;
      cur = producer;
      at_comm = false;
      continue;
    }
    const ComputeRecord& r = *ops.at(cur);
    int next = -1;
    bool next_comm = false;
    for (const PredRef& p : g.compute_preds[cur]) {
      const double t = p.is_comm ? comms.at(p.id)->arrival : ops.at(p.id)->end;
      if (t >= r.start - eps) {
        next = p.id;
        next_comm = p.is_comm;
        if (p.is_comm) break;
      }
    }
    if (next < 0) {
      for (const ComputeRecord* o : by_stage[r.key.stage]) {
        if (o->id != r.id && std::abs(o->end - r.start) <= eps) next = o->id;
      }
    }
    cur = next;
    at_comm = next_comm;
  }
  return crossings;
}

StrideReport bubble_stride_demo(const ProblemSpec& spec, std::string_view family,
                                const std::vector<double>& latency_points) {
  if (!is_static_family(family)) throw ValidationError("bubble strides are shown for static families");
  if (spec.n_dc() != 2) throw ValidationError("bubble stride demo needs exactly 2 DCs");
  for (double l : latency_points) {
    if (l < 0) throw ValidationError("latency points must be >= 0");
  }
  ProblemSpec base = spec;
  base.m_limit = unbounded_limit(spec);
  const SchedulePlan plan = build_static(base, parse_static_family(family));
  StrideReport rep;
  for (double lat : latency_points) {
    ProblemSpec s = base;
    s.alpha[0][1] = s.alpha[1][0] = lat;
    const DependencyGraph g = build_graph(s, plan.n_sub, uses_combined_backward(plan.family));
    const Timeline tl = simulate(g, plan, s);
    StridePoint p;
    p.latency = lat;
    p.makespan = runtime_of(tl);
    p.critical_crossings = critical_path_crossings(g, tl);
    p.svg = gantt_svg(tl);
    rep.points.push_back(std::move(p));
  }
  for (std::size_t i = 1; i < rep.points.size(); ++i) {
    const double dl = rep.points[i].latency - rep.points[i - 1].latency;
    rep.slopes.push_back(dl != 0 ? (rep.points[i].makespan - rep.points[i - 1].makespan) / dl : 0.0);
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kLeft = 80.0, kTop = 30.0, kPlotWidth = 1000.0, kRowHeight = 28.0,
                 kBlockHeight = 18.0, kCommHeight = 5.0, kAxisHeight = 30.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string label(const OpKey& k) {
  std::string s = std::string(to_string(k.type)) + " mb" + std::to_string(k.mb) + " c" +
                  std::to_string(k.chunk);
  if (k.sub > 0) s += " u" + std::to_string(k.sub);
  return s;
}

}  // namespace

std::string gantt_svg(const Timeline& tl) {
  double t0 = kInf, t1 = -kInf;
  for (const auto& r : tl.compute) {
    t0 = std::min(t0, r.start);
    t1 = std::max(t1, r.end);
  }
  for (const auto& r : tl.comms) {
    t0 = std::min(t0, r.start);
    t1 = std::max(t1, r.arrival);
  }
  if (!(t0 < kInf)) t0 = t1 = 0.0;
  const double span = t1 > t0 ? t1 - t0 : 1.0;
  const double scale = kPlotWidth / span;
  auto x = [&](double t) { return kLeft + (t - t0) * scale; };
  const double height = kTop + tl.n_pp * kRowHeight + kAxisHeight;
  const double width = kLeft + kPlotWidth + 20.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
     << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  os << "<style>.op-F{fill:#4e79a7}.op-D{fill:#59a14f}.op-W{fill:#edc948}"
        ".comm{fill:#e15759}.dp{fill:#b07aa1}.dc{stroke:#333;stroke-dasharray:4 3}"
        "text{font:11px sans-serif}</style>\n";
  for (int s = 0; s < tl.n_pp; ++s) {
    os << "<text x=\"4\" y=\"" << num(kTop + s * kRowHeight + kBlockHeight - 5) << "\">stage " << s
       << "</text>\n";
  }
  for (const auto& r : tl.compute) {
    const double y = kTop + r.key.stage * kRowHeight;
    os << "<rect class=\"op-" << to_string(r.key.type) << "\" x=\"" << num(x(r.start)) << "\" y=\""
       << num(y) << "\" width=\"" << num((r.end - r.start) * scale) << "\" height=\""
       << num(kBlockHeight) << "\"><title>" << label(r.key) << "</title></rect>\n";
  }
  for (const auto& r : tl.comms) {
    if (r.end <= r.start) continue;
    const double y = kTop + r.src_stage * kRowHeight + kBlockHeight + 1;
    os << "<rect class=\"" << (r.kind == CommKind::kPipeline ? "comm" : "dp") << "\" x=\""
       << num(x(r.start)) << "\" y=\"" << num(y) << "\" width=\"" << num((r.end - r.start) * scale)
       << "\" height=\"" << num(kCommHeight) << "\"><title>" << to_string(r.kind) << ' '
       << to_string(r.link) << "</title></rect>\n";
  }
  for (int s = 1; s < tl.n_pp && s < static_cast<int>(tl.dc_of_stage.size()); ++s) {
    if (tl.dc_of_stage[s] == tl.dc_of_stage[s - 1]) continue;
    const double y = kTop + s * kRowHeight - (kRowHeight - kBlockHeight - kCommHeight) / 2;
    os << "<line class=\"dc\" x1=\"0\" y1=\"" << num(y) << "\" x2=\"" << num(width) << "\" y2=\""
       << num(y) << "\"/>\n";
  }
  const double axis_y = kTop + tl.n_pp * kRowHeight + 4;
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(axis_y) << "\" x2=\""
     << num(kLeft + kPlotWidth) << "\" y2=\"" << num(axis_y) << "\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = t0 + span * i / 5.0;
    os << "<text x=\"" << num(x(t) - 10) << "\" y=\"" << num(axis_y + 16) << "\">" << num(t)
       << "s</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_gantt(const Timeline& tl, const std::filesystem::path& path) {
  write_text_file(path, gantt_svg(tl));
}

void render_gantt(const Timeline& tl, const ProblemSpec& spec, const std::filesystem::path& path) {
  if (spec.n_pp != tl.n_pp) throw ValidationError("timeline and problem disagree on stage count");
  Timeline copy = tl;
  copy.dc_of_stage = spec.dc_of_stage;
  render_gantt(copy, path);
}

}  // namespace pipesched
