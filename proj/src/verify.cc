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

#include "latprune/verify.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include "latprune/error.h"
#include "latprune/knapsack.h"
#include "latprune/planner.h"

namespace latprune {
namespace {

class Checker {
 public:
  void Pass(const std::string& name) { Get(name); }

  void Fail(const std::string& name, const std::string& detail) {
    CheckResult& check = Get(name);
    if (check.passed) {
      check.passed = false;
      check.detail = detail;
    }
  }

  VerifyReport Report() && { return {std::move(checks_)}; }

 private:
  CheckResult& Get(const std::string& name) {
    for (CheckResult& c : checks_) {
      if (c.name == name) return c;
    }
    checks_.push_back({name, true, ""});
    return checks_.back();
  }

  std::vector<CheckResult> checks_;
};

struct PlanStageView {
  int64_t capacity = 0;
  nlohmann::json kept;
  nlohmann::json masks;
  int64_t surrogate = 0;
  std::optional<int64_t> exact;
  double score = 0.0;
};

std::string StageName(size_t i) { return "stage " + std::to_string(i + 1); }

bool SameScore(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
}

// Reads per-layer masks into per-unit survivors. Returns nullopt (after
// recording failures) when the masks are malformed.
std::optional<Survivors> ReadMasks(const NetworkSpec& spec, const nlohmann::json& masks,
                                   const std::string& where, Checker& checker) {
  bool ok = true;
  std::vector<std::vector<int>> per_layer(spec.num_layers());
  for (int l = 0; l < spec.num_layers(); ++l) {
    const LayerSpec& layer = spec.layer(l);
    if (!masks.contains(layer.id) || !masks[layer.id].is_array()) {
      checker.Fail("mask-format", where + ": no mask for layer " + layer.id);
      ok = false;
      continue;
    }
    for (const nlohmann::json& v : masks[layer.id]) {
      if (!v.is_number_integer()) {
        checker.Fail("mask-format", where + ": non-integer index in " + layer.id);
        ok = false;
        break;
      }
      per_layer[l].push_back(v.get<int>());
    }
    const auto& mask = per_layer[l];
    for (size_t k = 0; k < mask.size(); ++k) {
      if (mask[k] < 0 || mask[k] >= layer.out_channels ||
          (k > 0 && mask[k] <= mask[k - 1])) {
        checker.Fail("mask-format",
                     where + ": mask of " + layer.id + " is not a sorted set of filter indices");
        ok = false;
        break;
      }
    }
    if (mask.empty()) {
      checker.Fail("never-empty-layer", where + ": layer " + layer.id + " keeps no filter");
    }
  }
  checker.Pass("mask-format");
  checker.Pass("never-empty-layer");

  Survivors survivors(spec.num_units());
  for (int u = 0; u < spec.num_units(); ++u) {
    const PruneUnit& unit = spec.units()[u];
    survivors[u] = per_layer[unit.members.front()];
    for (int m : unit.members) {
      if (per_layer[m] != survivors[u]) {
        checker.Fail("coupling", where + ": coupled layers of " + unit.key +
                                     " keep different filters");
        ok = false;
      }
    }
  }
  checker.Pass("coupling");
  if (!ok) return std::nullopt;
  return survivors;
}

bool IsSubset(const std::vector<int>& inner, const std::vector<int>& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

}  // namespace

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerifyReport::FirstFailure() const {
  for (const CheckResult& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

VerifyReport VerifyPlan(const NetworkSpec& spec, const TensorStore& store,
                        const LatencyTable& table, const nlohmann::json& plan,
                        bool use_oracle) {
  Checker checker;

  int64_t target = 0;
  int num_stages = 0;
  std::vector<PlanStageView> stages;
  nlohmann::json final_json;
  try {
    const nlohmann::json& config = plan.at("config");
    target = config.at("target_latency").get<int64_t>();
    num_stages = config.at("stages").get<int>();
    if (config.at("full_latency").get<int64_t>() != table.full_latency) {
      checker.Fail("schedule", "plan full latency differs from the table");
    }
    for (const nlohmann::json& s : plan.at("stages")) {
      PlanStageView view;
      view.capacity = s.at("capacity").get<int64_t>();
      view.kept = s.at("kept");
      view.masks = s.at("masks");
      view.surrogate = s.at("surrogate_latency").get<int64_t>();
      if (!s.at("exact_latency").is_null()) view.exact = s["exact_latency"].get<int64_t>();
      view.score = s.at("score").get<double>();
      stages.push_back(std::move(view));
    }
    final_json = plan.at("final");
    if (stages.empty()) throw std::runtime_error("plan has no stages");
  } catch (const std::exception& e) {
    checker.Fail("plan-format", e.what());
    return std::move(checker).Report();
  }
  checker.Pass("plan-format");

  try {
    CheckTableMatches(table, spec);
  } catch (const Error& e) {
    checker.Fail("table", e.what());
    return std::move(checker).Report();
  }

  try {
    const std::vector<int64_t> schedule =
        MakeSchedule(table.full_latency, target, num_stages);
    if (schedule.size() != stages.size()) {
      checker.Fail("schedule", "plan has " + std::to_string(stages.size()) +
                                   " stages, config says " + std::to_string(num_stages));
    } else {
      for (size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].capacity != schedule[i]) {
          checker.Fail("schedule", StageName(i) + ": capacity " +
                                       std::to_string(stages[i].capacity) + " expected " +
                                       std::to_string(schedule[i]));
        }
      }
    }
  } catch (const Error& e) {
    checker.Fail("schedule", e.what());
  }
  checker.Pass("schedule");

  Survivors previous = spec.FullSurvivors();
  std::optional<int64_t> previous_exact;
  if (table.cost_model) {
    std::vector<int> full;
    for (const PruneUnit& u : spec.units()) full.push_back(u.width);
    previous_exact = EvalLatency(spec, spec.KeptFromUnitCounts(full),
                                 *table.cost_model, table.scale);
  }
  bool chain_ok = true;
  Survivors last;

  for (size_t i = 0; i < stages.size(); ++i) {
    const PlanStageView& stage = stages[i];
    const std::string where = StageName(i);
    std::optional<Survivors> current = ReadMasks(spec, stage.masks, where, checker);
    if (!current) {
      chain_ok = false;
      break;
    }

    std::vector<int> unit_kept;
    for (const auto& s : *current) unit_kept.push_back(static_cast<int>(s.size()));
    for (int l = 0; l < spec.num_layers(); ++l) {
      const std::string& id = spec.layer(l).id;
      if (!stage.kept.contains(id) || !stage.kept[id].is_number_integer() ||
          stage.kept[id].get<int>() != unit_kept[spec.UnitOf(l)]) {
        checker.Fail("kept-matches-mask", where + ": kept count of " + id +
                                              " disagrees with its mask");
      }
    }
    checker.Pass("kept-matches-mask");

    for (int u = 0; u < spec.num_units(); ++u) {
      if (!IsSubset((*current)[u], previous[u])) {
        checker.Fail("nested-masks", where + ": unit " + spec.units()[u].key +
                                         " revives a pruned filter");
      }
    }
    checker.Pass("nested-masks");

    const int64_t surrogate = SurrogateLatency(table, unit_kept);
    if (surrogate != stage.surrogate) {
      checker.Fail("capacity", where + ": recorded surrogate latency " +
                                   std::to_string(stage.surrogate) + " but recomputed " +
                                   std::to_string(surrogate));
    }
    if (surrogate > stage.capacity) {
      checker.Fail("capacity", where + ": surrogate latency " + std::to_string(surrogate) +
                                   " exceeds capacity " + std::to_string(stage.capacity));
    }
    checker.Pass("capacity");

    if (table.cost_model) {
      const int64_t exact = EvalLatency(spec, spec.KeptFromUnitCounts(unit_kept),
                                        *table.cost_model, table.scale);
      if (!stage.exact || *stage.exact != exact) {
        checker.Fail("exact-latency", where + ": recorded exact latency disagrees with "
                                              "the cost model (" +
                                              std::to_string(exact) + ")");
      }
      if (previous_exact && exact > *previous_exact) {
        checker.Fail("exact-latency", where + ": exact latency increased");
      }
      previous_exact = exact;
      checker.Pass("exact-latency");
    }

    // Re-solve the stage from the previous survivors.
    try {
      const StageProblem problem =
          BuildStageProblem(spec, store, table, previous, stage.capacity);
      std::vector<int> choice;
      for (int u = 0; u < spec.num_units(); ++u) {
        const int n = static_cast<int>((*current)[u].size());
        choice.push_back(std::clamp(n - 1, 0, problem.groups[u].size()));
      }
      if (SelectSurvivors(problem, choice) != *current) {
        checker.Fail("dp-optimality",
                     where + ": masks are not the top-ranked filters of each layer");
      }
      const KnapsackSolution dp = SolveGroupKnapsack(problem.instance);
      double optimum = dp.total_score;
      if (use_oracle) {
        try {
          const KnapsackSolution oracle = SolveBruteForce(problem.instance);
          if (oracle.total_score != dp.total_score) {
            checker.Fail("oracle-agreement", where + ": knapsack optimum differs from "
                                                     "exhaustive enumeration");
          }
          optimum = std::max(optimum, oracle.total_score);
        } catch (const Error&) {
          // Too many combinations to enumerate; the DP optimum stands.
        }
        checker.Pass("oracle-agreement");
      }
      const double achieved = ChoiceScore(problem.instance, choice);
      if (ChoiceCost(problem.instance, choice) > problem.instance.capacity) {
        checker.Fail("capacity", where + ": selection exceeds the knapsack capacity");
      }
      if (!SameScore(achieved, optimum)) {
        checker.Fail("dp-optimality", where + ": score " + std::to_string(achieved) +
                                          " but the optimum is " +
                                          std::to_string(optimum));
      }
      if (!SameScore(stage.score, achieved + spec.num_units())) {
        checker.Fail("score-record", where + ": recorded score does not match the masks");
      }
    } catch (const Error& e) {
      checker.Fail("dp-optimality", where + ": " + e.what());
    }
    checker.Pass("dp-optimality");
    checker.Pass("score-record");

    previous = *current;
    last = *current;
  }

  if (chain_ok) {
    try {
      const nlohmann::json& masks = final_json.at("masks");
      if (masks != MasksToJson(spec, last)) {
        checker.Fail("final", "final masks differ from the last stage");
      }
      std::vector<int> full;
      for (const PruneUnit& u : spec.units()) full.push_back(u.width);
      if (final_json.at("flops_before").get<int64_t>() !=
          CountFlops(spec, spec.KeptFromUnitCounts(full))) {
        checker.Fail("final", "flops_before does not match the network");
      }
      if (final_json.at("flops_after").get<int64_t>() !=
          CountFlops(spec, spec.KeptFromSurvivors(last))) {
        checker.Fail("final", "flops_after does not match the final masks");
      }
    } catch (const std::exception& e) {
      checker.Fail("final", e.what());
    }
    checker.Pass("final");
  }
  return std::move(checker).Report();
}

}  // namespace latprune
