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

#include "pipesched/patterns.hpp"

#include <map>

namespace pipesched {

std::vector<std::pair<int, int>> forward_path(const ProblemSpec& spec) {
  std::vector<std::pair<int, int>> path;
  const int p = spec.n_pp;
  switch (spec.pattern) {
    case Pattern::kUD:
      for (int s = 0; s < p; ++s) path.emplace_back(s, 0);
      break;
    case Pattern::kLoop:
      for (int k = 0; k < spec.n_chunks; ++k)
        for (int s = 0; s < p; ++s) path.emplace_back(s, k);
      break;
    case Pattern::kWave:
      if (spec.n_chunks != 2) throw ValidationError("Wave pattern requires n_chunks == 2");
      for (int s = 0; s < p; ++s) path.emplace_back(s, 0);
      for (int s = p - 1; s >= 0; --s) path.emplace_back(s, 1);
      break;
  }
  return path;
}

LinkId link_between(const ProblemSpec& spec, int src_stage, int dst_stage) {
  const int a = spec.dc_of_stage[src_stage];
  const int b = spec.dc_of_stage[dst_stage];
  if (a != b) return LinkId{true, a, b};
  return LinkId{false, src_stage, dst_stage};
}

namespace {

CommOp make_comm(const ProblemSpec& spec, int producer, int consumer, int src, int dst, double bytes) {
  CommOp c;
  c.kind = CommKind::kPipeline;
  c.producer = producer;
  c.consumer = consumer;
  c.src_stage = src;
  c.dst_stage = dst;
  const int a = spec.dc_of_stage[src];
  const int b = spec.dc_of_stage[dst];
  c.latency = spec.alpha[a][b];
  c.bw_time = spec.beta[a][b] * bytes;
  c.link = link_between(spec, src, dst);
  return c;
}

}  // namespace

DependencyGraph build_true_deps(const ProblemSpec& spec, bool combined_backward) {
  validate(spec);
  DependencyGraph g;
  g.n_pp = spec.n_pp;
  g.n_sub = 1;
  g.dc_of_stage = spec.dc_of_stage;
  const auto path = forward_path(spec);
  const int len = static_cast<int>(path.size());

  auto add_op = [&](int stage, int chunk, OpType type, int mb) {
    ComputeOp op;
    op.id = static_cast<int>(g.compute.size());
    op.key = OpKey{stage, chunk, type, mb, 0};
    op.duration = spec.duration(stage, chunk, type);
    op.mem_delta = spec.mem_delta(stage, chunk, type);
    g.compute.push_back(op);
    g.compute_preds.emplace_back();
    return op.id;
  };
  auto connect = [&](int from, int to, double bytes) {
    const int src = g.compute[from].key.stage;
    const int dst = g.compute[to].key.stage;
    if (src == dst) {
      g.compute_preds[to].push_back(PredRef{false, from});
      return;
    }
    CommOp c = make_comm(spec, from, to, src, dst, bytes);
    c.id = static_cast<int>(g.comms.size());
    g.comms.push_back(c);
    g.compute_preds[to].push_back(PredRef{true, c.id});
  };

  for (int mb = 0; mb < spec.n_mb; ++mb) {
    std::vector<int> f(len), d(len), w(len);
    for (int i = 0; i < len; ++i) {
      f[i] = add_op(path[i].first, path[i].second, OpType::kF, mb);
      if (i > 0) connect(f[i - 1], f[i], spec.msg_fwd[path[i - 1].first]);
    }
    for (int i = len - 1; i >= 0; --i) {
      d[i] = add_op(path[i].first, path[i].second, OpType::kD, mb);
      w[i] = add_op(path[i].first, path[i].second, OpType::kW, mb);
      connect(d[i], w[i], 0.0);
      if (i == len - 1) {
        connect(f[i], d[i], 0.0);
      } else {
        connect(combined_backward ? w[i + 1] : d[i + 1], d[i], spec.msg_bwd[path[i + 1].first]);
      }
    }
  }
  g.reindex();
  return g;
}

DependencyGraph attach_dp_ops(DependencyGraph graph, const ProblemSpec& spec) {
  if (!spec.dp_overlap) throw ValidationError("attach_dp_ops requires dp_overlap");
  if (graph.n_sub != 1) throw ValidationError("attach_dp_ops expects a graph without sub-blocks");
  const DpOverlap& dp = *spec.dp_overlap;
  for (int s = 0; s < spec.n_pp; ++s) {
    const int dc = spec.dc_of_stage[s];
    const int peer = dp.peer_dc < 0 ? dc : dp.peer_dc;
    for (int k = 0; k < spec.n_chunks; ++k) {
      auto make = [&](CommKind kind) {
        CommOp c;
        c.id = static_cast<int>(graph.comms.size());
        c.kind = kind;
        c.src_stage = s;
        c.dst_stage = s;
        const bool outgoing = kind == CommKind::kDpSync;
        const int a = outgoing ? dc : peer;
        const int b = outgoing ? peer : dc;
        c.latency = spec.alpha[a][b];
        c.bw_time = spec.beta[a][b] * dp.volume_bytes;
        c.link = a != b ? LinkId{true, a, b} : LinkId{false, s, s};
        return c;
      };
      auto last_w = graph.find(OpKey{s, k, OpType::kW, spec.n_mb - 1, 0});
      if (!last_w) throw ValidationError("graph does not match spec");
      CommOp sync = make(CommKind::kDpSync);
      sync.producer = *last_w;
      graph.comms.push_back(sync);
      if (dp.zero_stage == 1) {
        auto first_f = graph.find(OpKey{s, k, OpType::kF, 0, 0});
        if (!first_f) throw ValidationError("graph does not match spec");
        CommOp gather = make(CommKind::kAllgather);
        gather.consumer = *first_f;
        graph.comms.push_back(gather);
        graph.compute_preds[*first_f].push_back(PredRef{true, gather.id});
      }
    }
  }
  graph.reindex();
  return graph;
}

DependencyGraph expand_sub_blocks(const DependencyGraph& graph, int n_sub) {
  if (n_sub < 1) throw ValidationError("n_sub must be >= 1");
  if (graph.n_sub != 1) throw ValidationError("graph is already split into sub-blocks");
  if (n_sub == 1) return graph;
  DependencyGraph out;
  out.n_pp = graph.n_pp;
  out.n_sub = n_sub;
  out.dc_of_stage = graph.dc_of_stage;
  const int n = static_cast<int>(graph.compute.size());
  auto first_sub = [&](int id) { return id * n_sub; };
  auto last_sub = [&](int id) { return id * n_sub + n_sub - 1; };
  for (int i = 0; i < n; ++i) {
    const ComputeOp& op = graph.compute[i];
    for (int j = 0; j < n_sub; ++j) {
      ComputeOp sub = op;
      sub.id = i * n_sub + j;
      sub.key.sub = j;
      sub.duration = op.duration / n_sub;
      sub.mem_delta = j == n_sub - 1 ? op.mem_delta : 0.0;
      out.compute.push_back(sub);
      std::vector<PredRef> preds;
      if (j > 0) {
        preds.push_back(PredRef{false, sub.id - 1});
      } else {
        for (const PredRef& p : graph.compute_preds[i]) {
          preds.push_back(p.is_comm ? p : PredRef{false, last_sub(p.id)});
        }
      }
      out.compute_preds.push_back(std::move(preds));
    }
  }
  out.comms = graph.comms;
  for (CommOp& c : out.comms) {
    if (c.producer >= 0) c.producer = last_sub(c.producer);
    if (c.consumer >= 0) c.consumer = first_sub(c.consumer);
  }
  out.reindex();
  return out;
}

DependencyGraph build_graph(const ProblemSpec& spec, int n_sub, bool combined_backward) {
  DependencyGraph g = build_true_deps(spec, combined_backward);
  if (spec.dp_overlap) g = attach_dp_ops(std::move(g), spec);
  return expand_sub_blocks(g, n_sub);
}

bool uses_combined_backward(std::string_view family) {
  return family == "1f1b" || family == "iv1f1b";
}

int cross_dc_comms_per_microbatch(const ProblemSpec& spec) {
  const auto path = forward_path(spec);
  int hops = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (spec.dc_of_stage[path[i - 1].first] != spec.dc_of_stage[path[i].first]) ++hops;
  }
  return 2 * hops;
}

}  // namespace pipesched
