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

// Python bindings. JSON documents cross the boundary as strings; the
// latprune package wraps them with the json module.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "latprune/error.h"
#include "latprune/knapsack.h"
#include "latprune/latency.h"
#include "latprune/network.h"
#include "latprune/planner.h"
#include "latprune/scoring.h"
#include "latprune/tensor_store.h"
#include "latprune/verify.h"

namespace py = pybind11;

namespace latprune {
namespace {

std::span<const std::byte> AsBytes(const py::bytes& data) {
  const std::string_view view = data;
  return {reinterpret_cast<const std::byte*>(view.data()), view.size()};
}

py::tuple ScoreTuple(const ScoreRow& row) { return py::make_tuple(row.scores, row.asc_perm); }

nlohmann::json ScoreUnitsJson(const std::string& spec_json, const py::bytes& weights) {
  const NetworkSpec spec = ParseNetworkSpec(spec_json);
  const TensorStore store = LoadTensors(AsBytes(weights), spec);
  const auto units = ScoreUnits(spec, store, spec.FullSurvivors());
  nlohmann::json layers = nlohmann::json::object();
  for (int l = 0; l < spec.num_layers(); ++l) {
    const ScoreRow& row = units[spec.UnitOf(l)].row;
    layers[spec.layer(l).id] = {{"scores", row.scores}, {"asc_perm", row.asc_perm}};
  }
  return {{"layers", layers}};
}

KnapsackInstance MakeInstance(const std::vector<std::vector<std::pair<int64_t, double>>>& layers,
                              int64_t capacity) {
  KnapsackInstance inst;
  inst.capacity = capacity;
  for (const auto& groups : layers) {
    auto& out = inst.layers.emplace_back();
    for (const auto& [cost, score] : groups) out.push_back({cost, score});
  }
  return inst;
}

py::dict SolutionDict(const KnapsackSolution& s) {
  py::dict d;
  d["choice"] = s.choice;
  d["kept"] = s.KeptCounts();
  d["score"] = s.total_score;
  d["cost"] = s.total_cost;
  return d;
}

std::string Plan(const std::string& spec_json, const py::bytes& weights,
                 const std::string& table_json, std::optional<int64_t> target_latency,
                 std::optional<double> keep_ratio, std::optional<double> remove_ratio,
                 int stages, int64_t scale) {
  const int given = target_latency.has_value() + keep_ratio.has_value() + remove_ratio.has_value();
  if (given != 1) {
    ThrowInvalid("exactly one of target_latency, keep_ratio, remove_ratio is required");
  }
  if (stages < 1) ThrowInvalid("stages must be positive");
  const NetworkSpec spec = ParseNetworkSpec(spec_json);
  const TensorStore store = LoadTensors(AsBytes(weights), spec);
  const LatencyTable table = IngestLookupTable(spec, table_json, scale);
  PlannerConfig config;
  config.stages = stages;
  if (target_latency) config.target_latency = *target_latency;
  if (keep_ratio) config.target_latency = TargetFromKeepRatio(table.full_latency, *keep_ratio);
  if (remove_ratio) config.target_latency = TargetFromRemoveRatio(table.full_latency, *remove_ratio);
  return PlanToJson(spec, RunPlan(spec, store, table, config)).dump(2);
}

std::vector<py::tuple> Verify(const std::string& spec_json, const py::bytes& weights,
                              const std::string& table_json, const std::string& plan_json,
                              bool oracle, int64_t scale) {
  const NetworkSpec spec = ParseNetworkSpec(spec_json);
  const TensorStore store = LoadTensors(AsBytes(weights), spec);
  const LatencyTable table = IngestLookupTable(spec, table_json, scale);
  nlohmann::json plan;
  try {
    plan = nlohmann::json::parse(plan_json);
  } catch (const nlohmann::json::exception& e) {
    ThrowInvalid(std::string("plan: ") + e.what());
  }
  std::vector<py::tuple> out;
  for (const CheckResult& c : VerifyPlan(spec, store, table, plan, oracle).checks) {
    out.push_back(py::make_tuple(c.name, c.passed, c.detail));
  }
  return out;
}

}  // namespace
}  // namespace latprune

PYBIND11_MODULE(_core, m) {
  using namespace latprune;
  m.doc() = "Latency-constrained structured pruning planner";

  py::exception<Error> error(m, "Error", PyExc_ValueError);
  py::exception<Error> infeasible(m, "InfeasibleError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::module_ core = py::module_::import("latprune._core");
      const char* type = e.code() == ErrorCode::kInfeasible ? "InfeasibleError" : "Error";
      const std::string msg = std::string(ErrorCodeName(e.code())) + ": " + e.what();
      PyErr_SetString(core.attr(type).ptr(), msg.c_str());
    } catch (const nlohmann::json::exception& e) {
      const py::module_ core = py::module_::import("latprune._core");
      const std::string msg = std::string("invalid-input: ") + e.what();
      PyErr_SetString(core.attr("Error").ptr(), msg.c_str());
    }
  });

  m.attr("DEFAULT_SCALE") = kDefaultScale;

  m.def("structured_lamp_scores",
        [](const std::vector<double>& values) { return ScoreTuple(StructuredLampScores(values)); },
        py::arg("values"), "Scores and ascending order of a layer's filter values.");
  m.def("lamp_scores",
        [](const std::vector<float>& weights) { return ScoreTuple(LampScores(weights)); },
        py::arg("weights"));
  m.def("score_network",
        [](const std::string& spec, const py::bytes& weights) {
          return ScoreUnitsJson(spec, weights).dump();
        },
        py::arg("spec_json"), py::arg("weights"));

  m.def("solve_group_knapsack",
        [](const std::vector<std::vector<std::pair<int64_t, double>>>& layers, int64_t capacity) {
          return SolutionDict(SolveGroupKnapsack(MakeInstance(layers, capacity)));
        },
        py::arg("layers"), py::arg("capacity"),
        "layers[l] lists (cost, score) of nested groups; picks at most one per layer.");
  m.def("solve_brute_force",
        [](const std::vector<std::vector<std::pair<int64_t, double>>>& layers, int64_t capacity) {
          return SolutionDict(SolveBruteForce(MakeInstance(layers, capacity)));
        },
        py::arg("layers"), py::arg("capacity"));

  m.def("scale_to_int", &ScaleToInt, py::arg("latency"), py::arg("factor"));
  m.def("build_table",
        [](const std::string& spec, const std::string& cost_model, int64_t scale) {
          return TableToJson(BuildLookupTable(ParseNetworkSpec(spec), ParseCostModel(cost_model),
                                              scale))
              .dump(2);
        },
        py::arg("spec_json"), py::arg("cost_model_json"), py::arg("scale") = kDefaultScale);
  m.def("ingest_table",
        [](const std::string& spec, const std::string& measured, int64_t scale) {
          return TableToJson(IngestLookupTable(ParseNetworkSpec(spec), measured, scale)).dump(2);
        },
        py::arg("spec_json"), py::arg("table_json"), py::arg("scale") = kDefaultScale);

  m.def("plan", &Plan, py::arg("spec_json"), py::arg("weights"), py::arg("table_json"),
        py::kw_only(), py::arg("target_latency") = py::none(), py::arg("keep_ratio") = py::none(),
        py::arg("remove_ratio") = py::none(), py::arg("stages") = 1,
        py::arg("scale") = kDefaultScale);
  m.def("verify", &Verify, py::arg("spec_json"), py::arg("weights"), py::arg("table_json"),
        py::arg("plan_json"), py::kw_only(), py::arg("oracle") = false,
        py::arg("scale") = kDefaultScale);

  m.def("count_flops",
        [](const std::string& spec, const KeptCounts& kept) {
          return CountFlops(ParseNetworkSpec(spec), kept);
        },
        py::arg("spec_json"), py::arg("kept") = KeptCounts{});

  m.def("encode_tensors",
        [](const std::vector<std::tuple<std::string, std::array<uint32_t, 4>, std::vector<float>>>&
               tensors) {
          TensorStore store;
          for (const auto& [name, shape, data] : tensors) {
            if (!store.emplace(name, Tensor4(shape, data)).second) {
              ThrowInvalid("duplicate tensor '" + name + "'");
            }
          }
          const std::vector<std::byte> bytes = EncodeTensors(store);
          return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("tensors"), "Packs (name, shape, flat f32 values) triples into an SPLW container.");
  m.def("decode_tensors",
        [](const py::bytes& data) {
          std::vector<std::tuple<std::string, std::array<uint32_t, 4>, std::vector<float>>> out;
          for (const auto& [name, t] : DecodeTensors(AsBytes(data))) {
            out.emplace_back(name, t.shape, t.data);
          }
          return out;
        },
        py::arg("data"));
}
