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

#include "pipesched/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pipesched/presets.hpp"

namespace pipesched {

using nlohmann::json;

void check_header(const json& j, std::string_view format) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  if (!j.contains("format") || j["format"] != format) {
    throw ParseError("missing or wrong 'format' field, expected '" + std::string(format) + "'");
  }
  if (!j.contains("version") || !j["version"].is_number_integer()) {
    throw ParseError("missing integer 'version' field");
  }
  if (j["version"].get<int>() != kFormatVersion) {
    throw ParseError("unsupported version " + j["version"].dump());
  }
}

namespace {

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw ParseError(std::string("missing field '") + name + "'");
  return j.at(name);
}

template <class T>
T get_as(const json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what());
  }
}

Matrix<double> stage_chunk_matrix(const json& j, const char* name, int p, int c) {
  const json& v = field(j, name);
  if (v.is_number()) return Matrix<double>(p, std::vector<double>(c, v.get<double>()));
  return get_as<Matrix<double>>(j, name);
}

std::vector<double> stage_vector(const json& j, const char* name, int p) {
  const json& v = field(j, name);
  if (v.is_number()) return std::vector<double>(p, v.get<double>());
  return get_as<std::vector<double>>(j, name);
}

json key_to_json(const OpKey& k) {
  return json::array({k.stage, k.chunk, std::string(to_string(k.type)), k.mb, k.sub});
}

OpKey key_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw ParseError("op key must be [stage, chunk, type, mb, sub]");
  try {
    OpKey k;
    k.stage = j[0].get<int>();
    k.chunk = j[1].get<int>();
    k.type = parse_op_type(j[2].get<std::string>());
    k.mb = j[3].get<int>();
    k.sub = j[4].get<int>();
    return k;
  } catch (const json::exception& e) {
    throw ParseError(std::string("op key: ") + e.what());
  }
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

ProblemSpec problem_from_json(const json& j) {
  check_header(j, "pipesched-problem");
  ProblemSpec spec;
  spec.n_pp = get_as<int>(j, "n_pp");
  spec.n_mb = get_as<int>(j, "n_mb");
  spec.n_chunks = j.contains("n_chunks") ? get_as<int>(j, "n_chunks") : 1;
  spec.n_sub = j.contains("n_sub") ? get_as<int>(j, "n_sub") : 1;
  spec.pattern = parse_pattern(get_as<std::string>(j, "pattern"));
  if (spec.n_pp < 1 || spec.n_chunks < 1) throw ValidationError("n_pp and n_chunks must be >= 1");
  const int p = spec.n_pp, c = spec.n_chunks;
  spec.t_f = stage_chunk_matrix(j, "t_f", p, c);
  spec.t_d = stage_chunk_matrix(j, "t_d", p, c);
  spec.t_w = stage_chunk_matrix(j, "t_w", p, c);
  spec.m_f = stage_chunk_matrix(j, "m_f", p, c);
  spec.m_d = stage_chunk_matrix(j, "m_d", p, c);
  spec.m_w = stage_chunk_matrix(j, "m_w", p, c);
  spec.m_limit = stage_vector(j, "m_limit", p);
  spec.dc_of_stage = j.contains("dc_of_stage") ? get_as<std::vector<int>>(j, "dc_of_stage")
                                               : std::vector<int>(p, 0);
  int n_dc = 1;
  for (int d : spec.dc_of_stage) n_dc = std::max(n_dc, d + 1);

  auto dc_matrix = [&](const char* name, double preset_value) {
    if (!j.contains(name)) {
      Matrix<double> m(n_dc, std::vector<double>(n_dc, 0.0));
      for (int a = 0; a < n_dc; ++a)
        for (int b = 0; b < n_dc; ++b)
          if (a != b) m[a][b] = preset_value;
      return m;
    }
    const json& v = j.at(name);
    if (v.is_number()) {
      Matrix<double> m(n_dc, std::vector<double>(n_dc, 0.0));
      for (int a = 0; a < n_dc; ++a)
        for (int b = 0; b < n_dc; ++b)
          if (a != b) m[a][b] = v.get<double>();
      return m;
    }
    return get_as<Matrix<double>>(j, name);
  };
  LinkPreset lp{0.0, 0.0};
  if (j.contains("link_preset")) lp = preset(get_as<std::string>(j, "link_preset"));
  spec.alpha = dc_matrix("alpha", lp.alpha);
  spec.beta = dc_matrix("beta", lp.beta);
  spec.msg_fwd = stage_vector(j, "msg_fwd", p);
  spec.msg_bwd = stage_vector(j, "msg_bwd", p);
  if (j.contains("dp_overlap") && !j["dp_overlap"].is_null()) {
    const json& d = j["dp_overlap"];
    DpOverlap dp;
    dp.volume_bytes = get_as<double>(d, "volume_bytes");
    dp.zero_stage = d.contains("zero_stage") ? get_as<int>(d, "zero_stage") : 0;
    dp.peer_dc = d.contains("peer_dc") ? get_as<int>(d, "peer_dc") : -1;
    spec.dp_overlap = dp;
  }
  validate(spec);
  return spec;
}

json problem_to_json(const ProblemSpec& spec) {
  json j;
  j["format"] = "pipesched-problem";
  j["version"] = kFormatVersion;
  j["n_pp"] = spec.n_pp;
  j["n_mb"] = spec.n_mb;
  j["n_chunks"] = spec.n_chunks;
  j["n_sub"] = spec.n_sub;
  j["pattern"] = std::string(to_string(spec.pattern));
  j["t_f"] = spec.t_f;
  j["t_d"] = spec.t_d;
  j["t_w"] = spec.t_w;
  j["m_f"] = spec.m_f;
  j["m_d"] = spec.m_d;
  j["m_w"] = spec.m_w;
  j["m_limit"] = spec.m_limit;
  j["dc_of_stage"] = spec.dc_of_stage;
  j["alpha"] = spec.alpha;
  j["beta"] = spec.beta;
  j["msg_fwd"] = spec.msg_fwd;
  j["msg_bwd"] = spec.msg_bwd;
  if (spec.dp_overlap) {
    j["dp_overlap"] = {{"volume_bytes", spec.dp_overlap->volume_bytes},
                       {"zero_stage", spec.dp_overlap->zero_stage},
                       {"peer_dc", spec.dp_overlap->peer_dc}};
  }
  return j;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  return problem_from_json(read_json_file(path));
}

void save_problem(const ProblemSpec& spec, const std::filesystem::path& path) {
  write_text_file(path, dump_canonical(problem_to_json(spec)));
}

SchedulePlan schedule_from_json(const json& j) {
  check_header(j, "pipesched-schedule");
  SchedulePlan plan;
  plan.family = get_as<std::string>(j, "family");
  plan.engine = j.contains("engine") ? get_as<std::string>(j, "engine") : "";
  plan.n_sub = j.contains("n_sub") ? get_as<int>(j, "n_sub") : 1;
  if (j.contains("memory_budget")) plan.memory_budget = get_as<std::vector<double>>(j, "memory_budget");
  const json& stages = field(j, "stages");
  if (!stages.is_array()) throw ParseError("'stages' must be an array");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    std::vector<OpKey> seq;
    for (const json& e : stages[s]) {
      if (!e.is_array() || e.size() != 4) throw ParseError("stage entry must be [chunk, type, mb, sub]");
      try {
        OpKey k;
        k.stage = static_cast<int>(s);
        k.chunk = e[0].get<int>();
        k.type = parse_op_type(e[1].get<std::string>());
        k.mb = e[2].get<int>();
        k.sub = e[3].get<int>();
        seq.push_back(k);
      } catch (const json::exception& ex) {
        throw ParseError(std::string("stage entry: ") + ex.what());
      }
    }
    plan.stage_order.push_back(std::move(seq));
  }
  if (j.contains("links") && !j["links"].is_null()) {
    std::map<LinkId, std::vector<CommKey>> links;
    for (const auto& [name, arr] : j["links"].items()) {
      std::vector<CommKey> seq;
      for (const json& e : arr) {
        if (!e.is_array() || e.size() != 2) throw ParseError("link entry must be [kind, key]");
        CommKey ck;
        ck.kind = parse_comm_kind(e[0].get<std::string>());
        ck.anchor = key_from_json(e[1]);
        seq.push_back(ck);
      }
      links[parse_link_id(name)] = std::move(seq);
    }
    plan.link_order = std::move(links);
  }
  return plan;
}

json schedule_to_json(const SchedulePlan& plan) {
  json j;
  j["format"] = "pipesched-schedule";
  j["version"] = kFormatVersion;
  j["family"] = plan.family;
  j["engine"] = plan.engine;
  j["n_sub"] = plan.n_sub;
  j["memory_budget"] = plan.memory_budget;
  json stages = json::array();
  for (const auto& seq : plan.stage_order) {
    json row = json::array();
    for (const OpKey& k : seq) row.push_back(json::array({k.chunk, std::string(to_string(k.type)), k.mb, k.sub}));
    stages.push_back(std::move(row));
  }
  j["stages"] = std::move(stages);
  if (plan.link_order) {
    json links = json::object();
    for (const auto& [link, seq] : *plan.link_order) {
      json row = json::array();
      for (const CommKey& ck : seq) row.push_back(json::array({std::string(to_string(ck.kind)), key_to_json(ck.anchor)}));
      links[to_string(link)] = std::move(row);
    }
    j["links"] = std::move(links);
  }
  return j;
}

SchedulePlan load_schedule(const std::filesystem::path& path) {
  return schedule_from_json(read_json_file(path));
}

void save_schedule(const SchedulePlan& plan, const std::filesystem::path& path) {
  write_text_file(path, dump_canonical(schedule_to_json(plan)));
}

json timeline_to_json(const Timeline& tl) {
  json j;
  j["format"] = "pipesched-timeline";
  j["version"] = kFormatVersion;
  j["n_pp"] = tl.n_pp;
  j["dc_of_stage"] = tl.dc_of_stage;
  json ops = json::array();
  for (const ComputeRecord& r : tl.compute) {
    ops.push_back({{"id", r.id},
                   {"stage", r.key.stage},
                   {"chunk", r.key.chunk},
                   {"type", std::string(to_string(r.key.type))},
                   {"mb", r.key.mb},
                   {"sub", r.key.sub},
                   {"start", r.start},
                   {"end", r.end}});
  }
  j["ops"] = std::move(ops);
  json comms = json::array();
  for (const CommRecord& r : tl.comms) {
    comms.push_back({{"id", r.id},
                     {"kind", std::string(to_string(r.kind))},
                     {"anchor", key_to_json(r.key.anchor)},
                     {"link", to_string(r.link)},
                     {"src_stage", r.src_stage},
                     {"dst_stage", r.dst_stage},
                     {"ready", r.ready},
                     {"start", r.start},
                     {"end", r.end},
                     {"arrival", r.arrival}});
  }
  j["comms"] = std::move(comms);
  json util = json::object();
  for (const auto& [link, u] : tl.metrics.link_utilization) util[to_string(link)] = u;
  j["metrics"] = {{"stage0_span", tl.metrics.stage0_span},
                  {"makespan_stage0", tl.metrics.makespan_stage0},
                  {"makespan_global", tl.metrics.makespan_global},
                  {"bubble_ratio", tl.metrics.bubble_ratio},
                  {"peak_memory", tl.metrics.peak_memory},
                  {"link_utilization", std::move(util)}};
  return j;
}

Timeline timeline_from_json(const json& j) {
  check_header(j, "pipesched-timeline");
  Timeline tl;
  tl.n_pp = get_as<int>(j, "n_pp");
  tl.dc_of_stage = get_as<std::vector<int>>(j, "dc_of_stage");
  try {
    for (const json& o : field(j, "ops")) {
      ComputeRecord r;
      r.id = o.at("id").get<int>();
      r.key.stage = o.at("stage").get<int>();
      r.key.chunk = o.at("chunk").get<int>();
      r.key.type = parse_op_type(o.at("type").get<std::string>());
      r.key.mb = o.at("mb").get<int>();
      r.key.sub = o.at("sub").get<int>();
      r.start = o.at("start").get<double>();
      r.end = o.at("end").get<double>();
      tl.compute.push_back(r);
    }
    if (j.contains("comms")) {
      for (const json& o : j["comms"]) {
        CommRecord r;
        r.id = o.at("id").get<int>();
        r.kind = parse_comm_kind(o.at("kind").get<std::string>());
        r.key.kind = r.kind;
        r.key.anchor = key_from_json(o.at("anchor"));
        r.link = parse_link_id(o.at("link").get<std::string>());
        r.src_stage = o.at("src_stage").get<int>();
        r.dst_stage = o.at("dst_stage").get<int>();
        r.ready = o.at("ready").get<double>();
        r.start = o.at("start").get<double>();
        r.end = o.at("end").get<double>();
        r.arrival = o.at("arrival").get<double>();
        tl.comms.push_back(r);
        if (r.end > r.start) tl.link_reservations[r.link].emplace_back(r.start, r.end);
      }
    }
    const json& m = field(j, "metrics");
    tl.metrics.stage0_span = m.at("stage0_span").get<double>();
    tl.metrics.makespan_stage0 = m.at("makespan_stage0").get<double>();
    tl.metrics.makespan_global = m.at("makespan_global").get<double>();
    tl.metrics.bubble_ratio = m.at("bubble_ratio").get<std::vector<double>>();
    tl.metrics.peak_memory = m.at("peak_memory").get<std::vector<double>>();
    for (const auto& [name, u] : m.at("link_utilization").items()) {
      tl.metrics.link_utilization[parse_link_id(name)] = u.get<double>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("timeline: ") + e.what());
  }
  for (auto& [link, iv] : tl.link_reservations) std::sort(iv.begin(), iv.end());
  return tl;
}

Timeline load_timeline(const std::filesystem::path& path) {
  return timeline_from_json(read_json_file(path));
}

void save_timeline(const Timeline& tl, const std::filesystem::path& path) {
  write_text_file(path, dump_canonical(timeline_to_json(tl)));
}

}  // namespace pipesched
