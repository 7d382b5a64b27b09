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

#include "pipesched/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pipesched {

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::kUD:
      return "UD";
    case Pattern::kLoop:
      return "Loop";
    case Pattern::kWave:
      return "Wave";
  }
  return "?";
}

std::string_view to_string(OpType t) {
  switch (t) {
    case OpType::kF:
      return "F";
    case OpType::kD:
      return "D";
    case OpType::kW:
      return "W";
  }
  return "?";
}

std::string_view to_string(CommKind k) {
  switch (k) {
    case CommKind::kPipeline:
      return "pp";
    case CommKind::kDpSync:
      return "dp";
    case CommKind::kAllgather:
      return "allgather";
  }
  return "?";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Pattern parse_pattern(std::string_view s) {
  const std::string l = lower(s);
  if (l == "ud") return Pattern::kUD;
  if (l == "loop") return Pattern::kLoop;
  if (l == "wave") return Pattern::kWave;
  if (l == "bd") {
    throw UnsupportedError(
        "traversal pattern BD is out of scope: bidirectional schedules mix "
        "pipeline and data-parallel cross-DC traffic");
  }
  throw ParseError("unknown traversal pattern '" + std::string(s) + "'");
}

OpType parse_op_type(std::string_view s) {
  if (s == "F") return OpType::kF;
  if (s == "D") return OpType::kD;
  if (s == "W") return OpType::kW;
  throw ParseError("unknown op type '" + std::string(s) + "'");
}

CommKind parse_comm_kind(std::string_view s) {
  if (s == "pp") return CommKind::kPipeline;
  if (s == "dp") return CommKind::kDpSync;
  if (s == "allgather") return CommKind::kAllgather;
  throw ParseError("unknown communication kind '" + std::string(s) + "'");
}

std::string to_string(const OpKey& k) {
  std::ostringstream os;
  os << to_string(k.type) << "(s" << k.stage << ",c" << k.chunk << ",mb" << k.mb;
  if (k.sub != 0) os << ",sub" << k.sub;
  os << ")";
  return os.str();
}

std::string to_string(const LinkId& l) {
  std::ostringstream os;
  os << (l.cross_dc ? "dc" : "s") << l.src << "->" << (l.cross_dc ? "dc" : "s")
     << l.dst;
  return os.str();
}

LinkId parse_link_id(std::string_view s) {
  LinkId id;
  const auto arrow = s.find("->");
  if (arrow == std::string_view::npos) {
    throw ParseError("malformed link id '" + std::string(s) + "'");
  }
  auto side = [&](std::string_view part, bool& cross) {
    if (part.rfind("dc", 0) == 0) {
      cross = true;
      part.remove_prefix(2);
    } else if (part.rfind("s", 0) == 0) {
      cross = false;
      part.remove_prefix(1);
    } else {
      throw ParseError("malformed link id '" + std::string(s) + "'");
    }
    try {
      return std::stoi(std::string(part));
    } catch (const std::exception&) {
      throw ParseError("malformed link id '" + std::string(s) + "'");
    }
  };
  bool cross_src = true, cross_dst = true;
  id.src = side(s.substr(0, arrow), cross_src);
  id.dst = side(s.substr(arrow + 2), cross_dst);
  if (cross_src != cross_dst) {
    throw ParseError("malformed link id '" + std::string(s) + "'");
  }
  id.cross_dc = cross_src;
  return id;
}

double ProblemSpec::duration(int stage, int chunk, OpType type) const {
  switch (type) {
    case OpType::kF:
      return t_f[stage][chunk];
    case OpType::kD:
      return t_d[stage][chunk];
    case OpType::kW:
      return t_w[stage][chunk];
  }
  return 0.0;
}

double ProblemSpec::mem_delta(int stage, int chunk, OpType type) const {
  switch (type) {
    case OpType::kF:
      return m_f[stage][chunk];
    case OpType::kD:
      return m_d[stage][chunk];
    case OpType::kW:
      return m_w[stage][chunk];
  }
  return 0.0;
}

double ProblemSpec::forward_time_per_stage() const {
  double best = 0.0;
  for (const auto& row : t_f) {
    double sum = 0.0;
    for (double v : row) sum += v;
    best = std::max(best, sum);
  }
  return best;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_shape(const Matrix<double>& m, int rows, int cols, const char* name) {
  bool ok = static_cast<int>(m.size()) == rows;
  for (const auto& r : m) ok = ok && static_cast<int>(r.size()) == cols;
  if (!ok) {
    std::ostringstream os;
    os << name << " must be a " << rows << "x" << cols << " matrix";
    throw ValidationError(os.str());
  }
}

}  // namespace

void validate(const ProblemSpec& spec) {
  require(spec.n_pp >= 1, "n_pp must be >= 1");
  require(spec.n_mb >= 1, "n_mb must be >= 1");
  require(spec.n_chunks >= 1, "n_chunks must be >= 1");
  require(spec.n_sub >= 1, "n_sub must be >= 1");
  if (spec.pattern == Pattern::kUD) {
    require(spec.n_chunks == 1, "UD pattern requires n_chunks == 1");
  }
  if (spec.pattern == Pattern::kWave) {
    require(spec.n_chunks == 2, "Wave pattern requires n_chunks == 2");
  }

  const int p = spec.n_pp;
  const int c = spec.n_chunks;
  require_shape(spec.t_f, p, c, "t_f");
  require_shape(spec.t_d, p, c, "t_d");
  require_shape(spec.t_w, p, c, "t_w");
  require_shape(spec.m_f, p, c, "m_f");
  require_shape(spec.m_d, p, c, "m_d");
  require_shape(spec.m_w, p, c, "m_w");

  for (int s = 0; s < p; ++s) {
    for (int k = 0; k < c; ++k) {
      require(spec.t_f[s][k] > 0 && spec.t_d[s][k] > 0 && spec.t_w[s][k] > 0 &&
                  std::isfinite(spec.t_f[s][k] + spec.t_d[s][k] + spec.t_w[s][k]),
              "durations must be positive and finite");
      const double mf = spec.m_f[s][k], md = spec.m_d[s][k], mw = spec.m_w[s][k];
      require(mf > 0, "m_f must be positive");
      require(md <= 0 && mw <= 0, "m_d and m_w must be <= 0");
      require(std::abs(mf + md + mw) <= 1e-9 * std::max(1.0, mf),
              "memory deltas do not sum to zero");
    }
  }

  require(static_cast<int>(spec.m_limit.size()) == p, "m_limit must have n_pp entries");
  for (int s = 0; s < p; ++s) {
    double need = 0.0;
    for (int k = 0; k < c; ++k) need = std::max(need, spec.m_f[s][k]);
    require(spec.m_limit[s] + 1e-9 * std::max(1.0, need) >= need,
            "m_limit below m_f: not even one microbatch fits on stage " +
                std::to_string(s));
  }

  const int n_dc = spec.n_dc();
  require(n_dc >= 1, "alpha must be a non-empty square matrix");
  require_shape(spec.alpha, n_dc, n_dc, "alpha");
  require_shape(spec.beta, n_dc, n_dc, "beta");
  for (int i = 0; i < n_dc; ++i) {
    for (int j = 0; j < n_dc; ++j) {
      require(spec.alpha[i][j] >= 0 && spec.beta[i][j] >= 0 &&
                  std::isfinite(spec.alpha[i][j] + spec.beta[i][j]),
              "alpha and beta must be non-negative and finite");
    }
  }

  require(static_cast<int>(spec.dc_of_stage.size()) == p,
          "dc_of_stage must have n_pp entries");
  for (int s = 0; s < p; ++s) {
    require(spec.dc_of_stage[s] >= 0 && spec.dc_of_stage[s] < n_dc,
            "dc_of_stage entry out of range");
    if (s > 0) {
      require(spec.dc_of_stage[s] >= spec.dc_of_stage[s - 1],
              "non-contiguous DC assignment");
    }
  }

  require(static_cast<int>(spec.msg_fwd.size()) == p &&
              static_cast<int>(spec.msg_bwd.size()) == p,
          "msg_fwd and msg_bwd must have n_pp entries");
  for (int s = 0; s < p; ++s) {
    require(spec.msg_fwd[s] >= 0 && spec.msg_bwd[s] >= 0,
            "message sizes must be non-negative");
  }

  if (spec.dp_overlap) {
    const auto& dp = *spec.dp_overlap;
    require(dp.volume_bytes >= 0, "dp_overlap.volume_bytes must be >= 0");
    require(dp.zero_stage == 0 || dp.zero_stage == 1, "dp_overlap.zero_stage must be 0 or 1");
    require(dp.peer_dc >= -1 && dp.peer_dc < n_dc, "dp_overlap.peer_dc out of range");
  }
}

std::vector<int> even_dc_split(int n_pp, int n_dc) {
  std::vector<int> out(n_pp);
  for (int s = 0; s < n_pp; ++s) out[s] = static_cast<int>((static_cast<long>(s) * n_dc) / n_pp);
  return out;
}

ProblemSpec uniform_problem(const UniformOptions& opt) {
  ProblemSpec spec;
  spec.n_pp = opt.n_pp;
  spec.n_mb = opt.n_mb;
  spec.n_chunks = opt.n_chunks;
  spec.pattern = opt.pattern;
  auto fill = [&](double v) { return Matrix<double>(opt.n_pp, std::vector<double>(opt.n_chunks, v)); };
  spec.t_f = fill(opt.t_f);
  spec.t_d = fill(opt.t_d);
  spec.t_w = fill(opt.t_w);
  spec.m_f = fill(opt.m_f);
  spec.m_d = fill(opt.m_d);
  spec.m_w = fill(opt.m_w);
  const double limit = opt.m_limit > 0 ? opt.m_limit : opt.n_mb * opt.n_chunks * opt.m_f;
  spec.m_limit.assign(opt.n_pp, limit);
  spec.dc_of_stage = even_dc_split(opt.n_pp, opt.n_dc);
  spec.alpha.assign(opt.n_dc, std::vector<double>(opt.n_dc, 0.0));
  spec.beta.assign(opt.n_dc, std::vector<double>(opt.n_dc, 0.0));
  for (int i = 0; i < opt.n_dc; ++i) {
    for (int j = 0; j < opt.n_dc; ++j) {
      if (i != j) {
        spec.alpha[i][j] = opt.alpha;
        spec.beta[i][j] = opt.beta;
      }
    }
  }
  spec.msg_fwd.assign(opt.n_pp, opt.msg);
  spec.msg_bwd.assign(opt.n_pp, opt.msg);
  return spec;
}

std::optional<int> DependencyGraph::find(const OpKey& k) const {
  auto it = index_.find(k);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> DependencyGraph::find(const CommKey& k) const {
  auto it = comm_index_.find(k);
  if (it == comm_index_.end()) return std::nullopt;
  return it->second;
}

CommKey DependencyGraph::comm_key(int comm_id) const {
  const CommOp& c = comms[comm_id];
  CommKey key;
  key.kind = c.kind;
  key.anchor = c.kind == CommKind::kAllgather ? compute[c.consumer].key : compute[c.producer].key;
  return key;
}

void DependencyGraph::reindex() {
  index_.clear();
  comm_index_.clear();
  const int n = static_cast<int>(compute.size());
  compute_preds.resize(n);
  compute_succ.assign(n, {});
  compute_out_comms.assign(n, {});
  for (int i = 0; i < n; ++i) {
    compute[i].id = i;
    index_[compute[i].key] = i;
    for (const PredRef& p : compute_preds[i]) {
      if (!p.is_comm) compute_succ[p.id].push_back(i);
    }
  }
  for (int c = 0; c < static_cast<int>(comms.size()); ++c) {
    comms[c].id = c;
    if (comms[c].producer >= 0) compute_out_comms[comms[c].producer].push_back(c);
    comm_index_[comm_key(c)] = c;
  }
}

}  // namespace pipesched
