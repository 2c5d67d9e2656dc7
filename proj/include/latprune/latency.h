// Copyright 2026 The latprune Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATPRUNE_LATENCY_H_
#define LATPRUNE_LATENCY_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "latprune/network.h"

namespace latprune {

inline constexpr int64_t kDefaultScale = 10000;  // integer units per ms

// Latency of one layer at effective widths (cin, cout), in milliseconds:
//   alpha * cin * cout * kh * kw * out_h * out_w + beta * cout * out_h * out_w + gamma
struct LinearCost {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  bool operator==(const LinearCost&) const = default;
};

class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(LinearCost fallback,
                     std::map<std::string, LinearCost, std::less<>> per_layer = {});

  const LinearCost& For(std::string_view layer_id) const;
  double LayerMs(const LayerSpec& layer, int cin, int cout) const;

  nlohmann::json ToJson() const;

 private:
  LinearCost default_;
  std::map<std::string, LinearCost, std::less<>> per_layer_;
};

// {"model":"linear","default":{"alpha","beta","gamma"},"per_layer":{...}}
CostModel CostModelFromJson(const nlohmann::json& doc);
CostModel ParseCostModel(std::string_view text);

// round-half-away-from-zero(latency * factor). Throws on negative input,
// non-positive factor, or a result outside the int64 range.
int64_t ScaleToInt(double latency, double factor);

double EvalLatencyMs(const NetworkSpec& spec, std::span<const int> kept,
                     const CostModel& model);

// Model latency in integer units: the per-layer costs are summed in ms and
// rounded once.
int64_t EvalLatency(const NetworkSpec& spec, std::span<const int> kept,
                    const CostModel& model, int64_t scale);
int64_t EvalLatency(const NetworkSpec& spec, const KeptCounts& kept,
                    const CostModel& model, int64_t scale);

// out[0] = in[0], out[p] = max(out[p - 1], in[p]).
std::vector<int64_t> MonotoneClamp(std::span<const int64_t> values);

struct LatencyRow {
  std::string key;                     // prune unit key
  std::vector<int64_t> raw;            // T[0..m] before repair
  std::vector<int64_t> table;          // T[0..m], nondecreasing
  std::vector<int64_t> contributions;  // c[j - 1] = T[j] - T[j - 1], j = 1..m

  int width() const { return static_cast<int>(table.size()) - 1; }
};

// Model-level latency of the network with one prune unit at p kept filters
// and every other unit at full width. Rows are indexed like
// NetworkSpec::units().
struct LatencyTable {
  int64_t scale = kDefaultScale;
  int64_t full_latency = 0;
  std::vector<LatencyRow> rows;
  std::optional<CostModel> cost_model;  // set when built analytically
};

LatencyRow MakeRow(std::string key, std::vector<int64_t> raw);

LatencyTable BuildLookupTable(const NetworkSpec& spec, const CostModel& model,
                              int64_t scale);

// Reads a measured table ({"scale","unit","layers":{key:[T0..Tm]}}) or a
// table previously written by TableToJson. `unit` is "ms", "s" or "units";
// `default_scale` applies when the file carries no scale.
LatencyTable LatencyTableFromJson(const NetworkSpec& spec, const nlohmann::json& doc,
                                  int64_t default_scale = kDefaultScale);
LatencyTable IngestLookupTable(const NetworkSpec& spec, std::string_view text,
                               int64_t default_scale = kDefaultScale);

nlohmann::json TableToJson(const LatencyTable& table);

// Additive latency estimate of a configuration: the full latency minus the
// per-unit reductions T_u(m_u) - T_u(p_u). Equals the plain sum of table
// entries with the shared full-model baseline counted once.
int64_t SurrogateLatency(const LatencyTable& table, std::span<const int> unit_kept);

}  // namespace latprune

#endif  // LATPRUNE_LATENCY_H_
