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

#include "pipesched/presets.hpp"

#include <array>
#include <string>

#include "pipesched/types.hpp"

namespace pipesched {

namespace {

struct Entry {
  std::string_view name;
  double latency_s;
  double gbit_per_s;
};

// Cross-campus and the cloud tiers are single points picked inside the
// published ranges (10-200 us; 30-100 ms at 1.4-5.0 Gb/s).
constexpr std::array<Entry, 4> kPresets{{
    {"same-campus", 10e-6, 800.0},
    {"cross-campus", 100e-6, 200.0},
    {"same-region-cloud", 1e-3, 11.3},
    {"cross-region-cloud", 65e-3, 3.0},
}};

}  // namespace

double gbps_to_beta(double gbit_per_s) { return 1.0 / (gbit_per_s / 8.0 * 1e9); }

double gBps_to_beta(double gbyte_per_s) { return 1.0 / (gbyte_per_s * 1e9); }

LinkPreset preset(std::string_view name) {
  for (const Entry& e : kPresets) {
    if (e.name == name) return {e.latency_s, gbps_to_beta(e.gbit_per_s)};
  }
  throw ValidationError("unknown infrastructure preset '" + std::string(name) + "'");
}

std::vector<std::string_view> preset_names() {
  std::vector<std::string_view> out;
  for (const Entry& e : kPresets) out.push_back(e.name);
  return out;
}

double message_size(long b, long s, long d, long n_dp, long bytes_per_elem) {
  if (b < 1 || s < 1 || d < 1 || n_dp < 1 || bytes_per_elem < 1) {
    throw ValidationError("message_size inputs must all be >= 1");
  }
  return static_cast<double>(b) * static_cast<double>(s) * static_cast<double>(d) *
         static_cast<double>(n_dp) * static_cast<double>(bytes_per_elem);
}

}  // namespace pipesched
