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

#include "latprune/latency.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latprune/error.h"

namespace latprune {
namespace {

LinearCost ParseLinear(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) ThrowInvalid("cost model: " + where + " must be an object");
  LinearCost c;
  try {
    c.alpha = j.value("alpha", 0.0);
    c.beta = j.value("beta", 0.0);
    c.gamma = j.value("gamma", 0.0);
  } catch (const nlohmann::json::exception&) {
    ThrowInvalid("cost model: " + where + " has non-numeric coefficients");
  }
  for (double v : {c.alpha, c.beta, c.gamma}) {
    if (!std::isfinite(v) || v < 0.0) {
      ThrowInvalid("cost model: " + where + " coefficients must be finite and nonnegative");
    }
  }
  return c;
}

nlohmann::json LinearToJson(const LinearCost& c) {
  return {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}};
}

}  // namespace

CostModel::CostModel(LinearCost fallback,
                     std::map<std::string, LinearCost, std::less<>> per_layer)
    : default_(fallback), per_layer_(std::move(per_layer)) {}

const LinearCost& CostModel::For(std::string_view layer_id) const {
  auto it = per_layer_.find(layer_id);
  return it == per_layer_.end() ? default_ : it->second;
}

double CostModel::LayerMs(const LayerSpec& layer, int cin, int cout) const {
  const LinearCost& c = For(layer.id);
  const double area = static_cast<double>(layer.OutputArea());
  return c.alpha * cin * cout * static_cast<double>(layer.KernelArea()) * area +
         c.beta * cout * area + c.gamma;
}

nlohmann::json CostModel::ToJson() const {
  nlohmann::json per_layer = nlohmann::json::object();
  for (const auto& [id, c] : per_layer_) per_layer[id] = LinearToJson(c);
  return {{"model", "linear"}, {"default", LinearToJson(default_)}, {"per_layer", per_layer}};
}

CostModel CostModelFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) ThrowInvalid("cost model: expected a JSON object");
  const std::string model = doc.value("model", std::string("linear"));
  if (model != "linear") ThrowInvalid("cost model: unsupported model '" + model + "'");
  LinearCost fallback;
  if (doc.contains("default")) fallback = ParseLinear(doc["default"], "default");
  std::map<std::string, LinearCost, std::less<>> per_layer;
  if (doc.contains("per_layer")) {
    for (const auto& [id, j] : doc["per_layer"].items()) {
      per_layer[id] = ParseLinear(j, "per_layer." + id);
    }
  }
  return CostModel(fallback, std::move(per_layer));
}

CostModel ParseCostModel(std::string_view text) {
  try {
    return CostModelFromJson(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    ThrowInvalid(std::string("cost model: malformed JSON: ") + e.what());
  }
}

int64_t ScaleToInt(double latency, double factor) {
  if (!(factor > 0.0)) ThrowInvalid("latency scale must be positive");
  if (!(latency >= 0.0)) ThrowInvalid("latency must be nonnegative");
  const double scaled = latency * factor;
  // 2^63 is exactly representable; anything at or above it cannot be held.
  if (!std::isfinite(scaled) || scaled >= 9223372036854775808.0) {
    ThrowInvalid("scaled latency overflows the integer range");
  }
  // Decimal inputs such as 7.77775 ms land a few ulps short of an exact
  // half after conversion; treat anything within that error as the half.
  const double lower = std::floor(scaled);
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scaled);
  if (std::abs(scaled - lower - 0.5) <= slack) return static_cast<int64_t>(lower) + 1;
  return std::llround(scaled);
}

double EvalLatencyMs(const NetworkSpec& spec, std::span<const int> kept,
                     const CostModel& model) {
  const std::vector<EffectiveWidth> widths = EffectiveWidths(spec, kept);
  double total = 0.0;
  for (int i = 0; i < spec.num_layers(); ++i) {
    total += model.LayerMs(spec.layer(i), widths[i].in, widths[i].out);
  }
  return total;
}

int64_t EvalLatency(const NetworkSpec& spec, std::span<const int> kept,
                    const CostModel& model, int64_t scale) {
  return ScaleToInt(EvalLatencyMs(spec, kept, model), static_cast<double>(scale));
}

int64_t EvalLatency(const NetworkSpec& spec, const KeptCounts& kept,
                    const CostModel& model, int64_t scale) {
  return EvalLatency(spec, ResolveKept(spec, kept), model, scale);
}

std::vector<int64_t> MonotoneClamp(std::span<const int64_t> values) {
  std::vector<int64_t> out(values.begin(), values.end());
  for (size_t p = 1; p < out.size(); ++p) out[p] = std::max(out[p - 1], out[p]);
  return out;
}

LatencyRow MakeRow(std::string key, std::vector<int64_t> raw) {
  LatencyRow row;
  row.key = std::move(key);
  row.table = MonotoneClamp(raw);
  row.raw = std::move(raw);
  for (size_t j = 1; j < row.table.size(); ++j) {
    row.contributions.push_back(row.table[j] - row.table[j - 1]);
  }
  return row;
}

LatencyTable BuildLookupTable(const NetworkSpec& spec, const CostModel& model,
                              int64_t scale) {
  LatencyTable table;
  table.scale = scale;
  table.cost_model = model;
  std::vector<int> kept(spec.num_layers());
  for (int i = 0; i < spec.num_layers(); ++i) kept[i] = spec.layer(i).out_channels;
  table.full_latency = EvalLatency(spec, kept, model, scale);

  for (const PruneUnit& unit : spec.units()) {
    std::vector<int64_t> raw(unit.width + 1);
    for (int p = 0; p <= unit.width; ++p) {
      for (int m : unit.members) kept[m] = p;
      raw[p] = EvalLatency(spec, kept, model, scale);
    }
    for (int m : unit.members) kept[m] = unit.width;
    table.rows.push_back(MakeRow(unit.key, std::move(raw)));
  }
  return table;
}

LatencyTable LatencyTableFromJson(const NetworkSpec& spec, const nlohmann::json& doc,
                                  int64_t default_scale) {
  if (!doc.is_object()) ThrowInvalid("latency table: expected a JSON object");
  LatencyTable table;
  try {
    table.scale = doc.value("scale", default_scale);
  } catch (const nlohmann::json::exception&) {
    ThrowInvalid("latency table: 'scale' must be an integer");
  }
  if (table.scale <= 0) ThrowInvalid("latency table: scale must be positive");
  if (doc.contains("unit") && !doc["unit"].is_string()) {
    ThrowInvalid("latency table: 'unit' must be a string");
  }
  const std::string unit = doc.value("unit", std::string("ms"));
  double factor = 0.0;
  if (unit == "ms") {
    factor = static_cast<double>(table.scale);
  } else if (unit == "s") {
    factor = static_cast<double>(table.scale) * 1000.0;
  } else if (unit != "units") {
    ThrowInvalid("latency table: unknown unit '" + unit + "'");
  }
  if (!doc.contains("layers") || !doc["layers"].is_object()) {
    ThrowInvalid("latency table: missing 'layers' object");
  }
  const nlohmann::json& layers = doc["layers"];

  for (const auto& [key, _] : layers.items()) {
    bool known = false;
    for (const PruneUnit& u : spec.units()) {
      if (u.key == key) known = true;
      for (int m : u.members) known = known || spec.layer(m).id == key;
    }
    if (!known) ThrowInvalid("latency table: row for unknown layer " + key);
  }

  for (const PruneUnit& u : spec.units()) {
    // Coupled groups may also be keyed by one of their member ids.
    const nlohmann::json* entry = nullptr;
    if (layers.contains(u.key)) {
      entry = &layers[u.key];
    } else {
      for (int m : u.members) {
        if (layers.contains(spec.layer(m).id)) {
          entry = &layers[spec.layer(m).id];
          break;
        }
      }
    }
    if (entry == nullptr) ThrowInvalid("latency table: missing layer " + u.key);
    if (!entry->is_array() || entry->size() != static_cast<size_t>(u.width) + 1) {
      ThrowInvalid("latency table: layer " + u.key + " needs " +
                   std::to_string(u.width + 1) + " entries, got " +
                   std::to_string(entry->is_array() ? entry->size() : 0));
    }
    std::vector<int64_t> raw;
    raw.reserve(entry->size());
    for (const nlohmann::json& v : *entry) {
      if (!v.is_number()) ThrowInvalid("latency table: layer " + u.key + " has a non-numeric entry");
      const double value = v.get<double>();
      if (!(value >= 0.0)) ThrowInvalid("latency table: layer " + u.key + " has a negative latency");
      if (factor == 0.0) {
        if (!v.is_number_integer()) {
          ThrowInvalid("latency table: layer " + u.key + " must hold integer units");
        }
        raw.push_back(v.get<int64_t>());
      } else {
        raw.push_back(ScaleToInt(value, factor));
      }
    }
    table.rows.push_back(MakeRow(u.key, std::move(raw)));
  }

  if (doc.contains("full_latency")) {
    const nlohmann::json& full = doc["full_latency"];
    if (!full.is_number_integer() || full.get<int64_t>() < 0) {
      ThrowInvalid("latency table: 'full_latency' must be a nonnegative integer");
    }
    table.full_latency = full.get<int64_t>();
  } else {
    for (const LatencyRow& row : table.rows) {
      table.full_latency = std::max(table.full_latency, row.table.back());
    }
  }
  if (doc.contains("cost_model")) table.cost_model = CostModelFromJson(doc["cost_model"]);
  return table;
}

LatencyTable IngestLookupTable(const NetworkSpec& spec, std::string_view text,
                               int64_t default_scale) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    ThrowInvalid(std::string("latency table: malformed JSON: ") + e.what());
  }
  return LatencyTableFromJson(spec, doc, default_scale);
}

nlohmann::json TableToJson(const LatencyTable& table) {
  nlohmann::json layers = nlohmann::json::object();
  nlohmann::json raw = nlohmann::json::object();
  nlohmann::json contributions = nlohmann::json::object();
  for (const LatencyRow& row : table.rows) {
    layers[row.key] = row.table;
    raw[row.key] = row.raw;
    contributions[row.key] = row.contributions;
  }
  nlohmann::json doc = {{"scale", table.scale},
                        {"unit", "units"},
                        {"full_latency", table.full_latency},
                        {"layers", layers},
                        {"raw", raw},
                        {"contributions", contributions}};
  if (table.cost_model) doc["cost_model"] = table.cost_model->ToJson();
  return doc;
}

int64_t SurrogateLatency(const LatencyTable& table, std::span<const int> unit_kept) {
  if (unit_kept.size() != table.rows.size()) {
    ThrowInvalid("surrogate latency: kept counts do not match the table");
  }
  int64_t total = table.full_latency;
  for (size_t u = 0; u < table.rows.size(); ++u) {
    const LatencyRow& row = table.rows[u];
    total += row.table.at(unit_kept[u]) - row.table.back();
  }
  return total;
}

}  // namespace latprune
