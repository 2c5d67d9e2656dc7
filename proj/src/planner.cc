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

#include "latprune/planner.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "latprune/error.h"

namespace latprune {

std::vector<int64_t> MakeSchedule(int64_t full_latency, int64_t target, int stages) {
  if (stages < 1) ThrowInvalid("stage count must be at least 1");
  if (target < 0) ThrowInvalid("target latency must be nonnegative");
  if (target > full_latency) {
    ThrowInvalid("target latency " + std::to_string(target) +
                 " exceeds full latency " + std::to_string(full_latency));
  }
  const int64_t span = full_latency - target;
  const int64_t q = span / stages;
  const int64_t r = span % stages;
  std::vector<int64_t> schedule;
  for (int64_t i = 1; i <= stages; ++i) {
    // full - ceil(i * span / stages), without overflowing i * span.
    const int64_t removed = i * q + (i * r + stages - 1) / stages;
    schedule.push_back(full_latency - removed);
  }
  return schedule;
}

int64_t MandatoryFloor(const LatencyTable& table) {
  std::vector<int> ones(table.rows.size(), 1);
  for (size_t u = 0; u < table.rows.size(); ++u) {
    if (table.rows[u].width() < 1) ones[u] = 0;
  }
  return SurrogateLatency(table, ones);
}

int64_t ReserveMandatory(const LatencyTable& table, int64_t capacity) {
  if (capacity < 0) ThrowInvalid("capacity must be nonnegative");
  const int64_t floor = MandatoryFloor(table);
  if (capacity < floor) ThrowInfeasible("infeasible: floor=" + std::to_string(floor));
  return capacity - floor;
}

void CheckTableMatches(const LatencyTable& table, const NetworkSpec& spec) {
  if (table.rows.size() != spec.units().size()) {
    ThrowInvalid("latency table has " + std::to_string(table.rows.size()) +
                 " rows but the network has " + std::to_string(spec.num_units()) +
                 " prune units");
  }
  for (int u = 0; u < spec.num_units(); ++u) {
    const PruneUnit& unit = spec.units()[u];
    const LatencyRow& row = table.rows[u];
    if (row.key != unit.key || row.width() != unit.width) {
      ThrowInvalid("latency table row " + row.key + " does not match prune unit " +
                   unit.key);
    }
  }
}

StageProblem BuildStageProblem(const NetworkSpec& spec, const TensorStore& store,
                               const LatencyTable& table, const Survivors& survivors,
                               int64_t capacity) {
  CheckTableMatches(table, spec);
  StageProblem problem;
  problem.instance.capacity = ReserveMandatory(table, capacity);
  problem.scores = ScoreUnits(spec, store, survivors);
  for (int u = 0; u < spec.num_units(); ++u) {
    const UnitScores& unit = problem.scores[u];
    const auto& c = table.rows[u].contributions;
    GroupRow groups = BuildGroups(
        unit.row, std::span(c).first(unit.filters.size()));
    std::vector<KnapsackGroup> items;
    items.reserve(groups.size());
    for (int i = 0; i < groups.size(); ++i) {
      items.push_back({groups.cost[i], groups.importance[i]});
    }
    problem.instance.layers.push_back(std::move(items));
    problem.groups.push_back(std::move(groups));
  }
  return problem;
}

Survivors SelectSurvivors(const StageProblem& problem, std::span<const int> choice) {
  Survivors next(problem.scores.size());
  for (size_t u = 0; u < problem.scores.size(); ++u) {
    const UnitScores& unit = problem.scores[u];
    const GroupRow& groups = problem.groups[u];
    for (int r = 0; r <= choice[u]; ++r) {
      next[u].push_back(unit.filters[groups.desc_order[r]]);
    }
    std::sort(next[u].begin(), next[u].end());
  }
  return next;
}

StageRecord PlanStage(const NetworkSpec& spec, const TensorStore& store,
                      const LatencyTable& table, const Survivors& survivors,
                      int64_t capacity, bool record_frontier) {
  StageProblem problem = BuildStageProblem(spec, store, table, survivors, capacity);

  StageRecord record;
  record.capacity = capacity;
  record.knapsack_capacity = problem.instance.capacity;
  record.solution = SolveGroupKnapsack(
      problem.instance, record_frontier ? &record.frontier : nullptr);
  record.survivors = SelectSurvivors(problem, record.solution.choice);
  for (const auto& s : record.survivors) {
    record.unit_kept.push_back(static_cast<int>(s.size()));
  }
  record.surrogate_latency = SurrogateLatency(table, record.unit_kept);
  if (table.cost_model) {
    const KeptCounts kept = spec.KeptFromUnitCounts(record.unit_kept);
    record.exact_latency = EvalLatency(spec, kept, *table.cost_model, table.scale);
  }
  record.knapsack_score = record.solution.total_score;
  record.score = record.knapsack_score + static_cast<double>(spec.num_units());
  return record;
}

PruningPlan RunPlan(const NetworkSpec& spec, const TensorStore& store,
                    const LatencyTable& table, const PlannerConfig& config) {
  CheckTableMatches(table, spec);
  PruningPlan plan;
  plan.config = config;
  plan.scale = table.scale;
  plan.full_latency = table.full_latency;
  plan.floor = MandatoryFloor(table);
  plan.analytic = table.cost_model.has_value();

  if (config.target_latency <= 0) ThrowInvalid("target latency must be positive");
  const std::vector<int64_t> schedule =
      MakeSchedule(table.full_latency, config.target_latency, config.stages);
  if (config.target_latency < plan.floor) {
    ThrowInfeasible("infeasible: floor=" + std::to_string(plan.floor));
  }

  Survivors survivors = spec.FullSurvivors();
  const std::vector<int> full_counts = [&] {
    std::vector<int> counts;
    for (const PruneUnit& u : spec.units()) counts.push_back(u.width);
    return counts;
  }();
  plan.flops_before = CountFlops(spec, spec.KeptFromUnitCounts(full_counts));
  if (table.cost_model) {
    plan.exact_latency_before = EvalLatency(
        spec, spec.KeptFromUnitCounts(full_counts), *table.cost_model, table.scale);
  }

  for (size_t i = 0; i < schedule.size(); ++i) {
    try {
      plan.stages.push_back(PlanStage(spec, store, table, survivors, schedule[i],
                                      config.record_frontier));
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + std::to_string(i + 1) + ": " + e.what());
    }
    survivors = plan.stages.back().survivors;
  }
  plan.flops_after = CountFlops(spec, spec.KeptFromSurvivors(survivors));
  plan.exact_latency_after = plan.stages.back().exact_latency;
  return plan;
}

int64_t TargetFromKeepRatio(int64_t full_latency, double keep_ratio) {
  if (!(keep_ratio >= 0.0 && keep_ratio <= 1.0)) {
    ThrowInvalid("keep ratio must lie in [0, 1]");
  }
  return static_cast<int64_t>(std::floor(keep_ratio * static_cast<double>(full_latency)));
}

int64_t TargetFromRemoveRatio(int64_t full_latency, double remove_ratio) {
  if (!(remove_ratio >= 0.0 && remove_ratio <= 1.0)) {
    ThrowInvalid("remove ratio must lie in [0, 1]");
  }
  return TargetFromKeepRatio(full_latency, 1.0 - remove_ratio);
}

nlohmann::json MasksToJson(const NetworkSpec& spec, const Survivors& survivors) {
  nlohmann::json masks = nlohmann::json::object();
  for (int l = 0; l < spec.num_layers(); ++l) {
    masks[spec.layer(l).id] = survivors.at(spec.UnitOf(l));
  }
  return masks;
}

namespace {

nlohmann::json OptionalInt(const std::optional<int64_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json PlanToJson(const NetworkSpec& spec, const PruningPlan& plan) {
  nlohmann::json stages = nlohmann::json::array();
  for (const StageRecord& stage : plan.stages) {
    nlohmann::json kept = nlohmann::json::object();
    for (const auto& [id, n] : spec.KeptFromUnitCounts(stage.unit_kept)) kept[id] = n;
    stages.push_back({{"capacity", stage.capacity},
                      {"knapsack_capacity", stage.knapsack_capacity},
                      {"kept", kept},
                      {"masks", MasksToJson(spec, stage.survivors)},
                      {"surrogate_latency", stage.surrogate_latency},
                      {"exact_latency", OptionalInt(stage.exact_latency)},
                      {"knapsack_score", stage.knapsack_score},
                      {"score", stage.score}});
  }
  const StageRecord& last = plan.stages.back();
  return {
      {"config",
       {{"target_latency", plan.config.target_latency},
        {"stages", plan.config.stages},
        {"scale", plan.scale},
        {"full_latency", plan.full_latency},
        {"floor", plan.floor},
        {"latency_source", plan.analytic ? "analytic" : "measured"}}},
      {"stages", stages},
      {"final",
       {{"masks", MasksToJson(spec, last.survivors)},
        {"flops_before", plan.flops_before},
        {"flops_after", plan.flops_after},
        {"latency_before", plan.full_latency},
        {"latency_after", last.surrogate_latency},
        {"exact_latency_before", OptionalInt(plan.exact_latency_before)},
        {"exact_latency_after", OptionalInt(plan.exact_latency_after)}}}};
}

nlohmann::json FrontierToJson(const PruningPlan& plan) {
  nlohmann::json stages = nlohmann::json::array();
  for (const StageRecord& stage : plan.stages) {
    nlohmann::json points = nlohmann::json::array();
    for (const FrontierPoint& p : stage.frontier) {
      points.push_back({p.capacity, p.score});
    }
    stages.push_back({{"knapsack_capacity", stage.knapsack_capacity},
                      {"frontier", points}});
  }
  return {{"stages", stages}};
}

}  // namespace latprune
