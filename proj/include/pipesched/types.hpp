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

#ifndef PIPESCHED_TYPES_HPP_
#define PIPESCHED_TYPES_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pipesched {

// Absolute tolerance for every time comparison in the library.
inline constexpr double kTimeEps = 1e-12;

template <class T>
using Matrix = std::vector<std::vector<T>>;

enum class Pattern { kUD, kLoop, kWave };
enum class OpType { kF = 0, kD = 1, kW = 2 };
enum class CommKind { kPipeline, kDpSync, kAllgather };

std::string_view to_string(Pattern p);
std::string_view to_string(OpType t);
std::string_view to_string(CommKind k);
Pattern parse_pattern(std::string_view s);
OpType parse_op_type(std::string_view s);
CommKind parse_comm_kind(std::string_view s);

// Malformed input that cannot be parsed at all.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request the library deliberately does not support (e.g. BD traversal).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Memory budget too small for the requested layout or scheduler.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schedule order that contradicts data flow; the simulation cannot finish.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DpOverlap {
  double volume_bytes = 0.0;  // per (stage, chunk)
  int zero_stage = 0;         // 0 or 1
  int peer_dc = -1;           // -1: synchronize inside the stage's own DC
};

// A full scheduling instance. Matrices indexed [stage][chunk] unless noted.
struct ProblemSpec {
  int n_pp = 1;
  int n_mb = 1;
  int n_chunks = 1;
  int n_sub = 1;
  Pattern pattern = Pattern::kUD;

  Matrix<double> t_f, t_d, t_w;  // seconds
  Matrix<double> m_f, m_d, m_w;  // bytes
  std::vector<double> m_limit;   // [stage]

  std::vector<int> dc_of_stage;  // [stage]
  Matrix<double> alpha;          // [dc][dc], seconds
  Matrix<double> beta;           // [dc][dc], seconds per byte

  std::vector<double> msg_fwd;   // [sending stage], bytes
  std::vector<double> msg_bwd;   // [sending stage], bytes

  std::optional<DpOverlap> dp_overlap;

  int n_dc() const { return static_cast<int>(alpha.size()); }
  double duration(int stage, int chunk, OpType type) const;
  double mem_delta(int stage, int chunk, OpType type) const;
  // Max per-microbatch forward time of a stage (summed over its chunks).
  double forward_time_per_stage() const;
};

// Throws ValidationError naming the first violated invariant.
void validate(const ProblemSpec& spec);

// Convenience constructor for homogeneous instances.
struct UniformOptions {
  int n_pp = 4;
  int n_mb = 8;
  int n_chunks = 1;
  Pattern pattern = Pattern::kUD;
  double t_f = 1.0, t_d = 1.0, t_w = 1.0;
  double m_f = 1.0, m_d = -0.5, m_w = -0.5;
  double m_limit = 0.0;   // 0: unbounded (n_mb * n_chunks * m_f)
  int n_dc = 1;           // stages split evenly and contiguously
  double alpha = 0.0;     // cross-DC latency
  double beta = 0.0;      // cross-DC inverse bandwidth
  double msg = 1.0;       // bytes per boundary message
};
ProblemSpec uniform_problem(const UniformOptions& opt);

// Stage-major contiguous split of n_pp stages over n_dc datacenters.
std::vector<int> even_dc_split(int n_pp, int n_dc);

struct OpKey {
  int stage = 0;
  int chunk = 0;
  OpType type = OpType::kF;
  int mb = 0;
  int sub = 0;

  auto operator<=>(const OpKey&) const = default;
  bool operator==(const OpKey&) const = default;
};
std::string to_string(const OpKey& k);

struct ComputeOp {
  int id = 0;
  OpKey key;
  double duration = 0.0;
  double mem_delta = 0.0;  // applied when this op completes
};

// A directed transmission resource. Cross-DC traffic shares one link per
// ordered DC pair; intra-DC traffic gets a private link per stage pair.
struct LinkId {
  bool cross_dc = true;
  int src = 0;  // DC index when cross_dc, otherwise stage index
  int dst = 0;

  auto operator<=>(const LinkId&) const = default;
  bool operator==(const LinkId&) const = default;
};
std::string to_string(const LinkId& l);
LinkId parse_link_id(std::string_view s);

struct CommOp {
  int id = 0;
  CommKind kind = CommKind::kPipeline;
  int producer = -1;  // compute op id, -1 for sources (allgather)
  int consumer = -1;  // compute op id, -1 for sinks (DP sync)
  int src_stage = 0;
  int dst_stage = 0;
  double latency = 0.0;
  double bw_time = 0.0;
  LinkId link;
};

// Identifies a CommOp independently of graph numbering.
struct CommKey {
  CommKind kind = CommKind::kPipeline;
  OpKey anchor;  // producer for pipeline/DP ops, consumer for allgather

  auto operator<=>(const CommKey&) const = default;
  bool operator==(const CommKey&) const = default;
};

// Predecessor reference: either a compute op (same stage, no delay) or a
// communication op.
struct PredRef {
  bool is_comm = false;
  int id = 0;
  bool operator==(const PredRef&) const = default;
};

struct DependencyGraph {
  int n_pp = 0;
  int n_sub = 1;
  std::vector<int> dc_of_stage;
  std::vector<ComputeOp> compute;
  std::vector<CommOp> comms;
  std::vector<std::vector<PredRef>> compute_preds;   // true dependencies
  std::vector<std::vector<int>> compute_succ;        // direct compute successors
  std::vector<std::vector<int>> compute_out_comms;   // comms produced

  std::optional<int> find(const OpKey& k) const;
  std::optional<int> find(const CommKey& k) const;
  CommKey comm_key(int comm_id) const;

  // Rebuilds successor lists and the key index after edits.
  void reindex();

 private:
  std::map<OpKey, int> index_;
  std::map<CommKey, int> comm_index_;
};

struct SchedulePlan {
  std::string family;     // e.g. "1f1b", "cross-ud-sub"
  std::string engine;     // which generator produced the plan
  int n_sub = 1;
  std::vector<std::vector<OpKey>> stage_order;
  std::optional<std::map<LinkId, std::vector<CommKey>>> link_order;
  std::vector<double> memory_budget;
};

struct ComputeRecord {
  int id = 0;
  OpKey key;
  double start = 0.0;
  double end = 0.0;
};

struct CommRecord {
  int id = 0;
  CommKind kind = CommKind::kPipeline;
  CommKey key;
  LinkId link;
  int src_stage = 0;
  int dst_stage = 0;
  double ready = 0.0;    // producer completion
  double start = 0.0;    // bandwidth window start
  double end = 0.0;      // bandwidth window end
  double arrival = 0.0;  // end + latency
};

struct MetricsReport {
  double stage0_span = 0.0;       // first start to last end on stage 0
  double makespan_stage0 = 0.0;   // first F on stage 0 to last completion anywhere
  double makespan_global = 0.0;   // first start anywhere to last completion anywhere
  std::vector<double> bubble_ratio;
  std::vector<double> peak_memory;
  std::map<LinkId, double> link_utilization;
};

struct Timeline {
  int n_pp = 0;
  std::vector<int> dc_of_stage;
  std::vector<ComputeRecord> compute;
  std::vector<CommRecord> comms;
  std::map<LinkId, std::vector<std::pair<double, double>>> link_reservations;
  MetricsReport metrics;
};

}  // namespace pipesched

#endif  // PIPESCHED_TYPES_HPP_
