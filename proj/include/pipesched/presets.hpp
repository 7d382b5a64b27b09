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

#ifndef PIPESCHED_PRESETS_HPP_
#define PIPESCHED_PRESETS_HPP_

#include <string_view>
#include <vector>

namespace pipesched {

struct LinkPreset {
  double alpha;  // seconds
  double beta;   // seconds per byte
};

// Representative cross-DC link for an infrastructure tag: "same-campus",
// "cross-campus", "same-region-cloud", "cross-region-cloud".
LinkPreset preset(std::string_view name);
std::vector<std::string_view> preset_names();

// Converts a link rate in gigabits per second to seconds per byte.
double gbps_to_beta(double gbit_per_s);
// Converts a link rate in gigabytes per second to seconds per byte.
double gBps_to_beta(double gbyte_per_s);

// Pipeline boundary message: microbatch * seq_len * hidden * n_dp * bytes.
double message_size(long b, long s, long d, long n_dp, long bytes_per_elem);

}  // namespace pipesched

#endif  // PIPESCHED_PRESETS_HPP_
