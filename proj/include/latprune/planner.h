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

#ifndef LATPRUNE_PLANNER_H_
#define LATPRUNE_PLANNER_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "latprune/knapsack.h"
#include "latprune/latency.h"
#include "latprune/network.h"
#include "latprune/scoring.h"
#include "latprune/tensor_store.h"

namespace latprune {

// Stage capacities interpolated linearly from `full_latency` down to
// `target`, each rounded toward the target; the last entry equals `target`.
std::vector<int64_t> MakeSchedule(int64_t full_latency, int64_t target, int stages);

// Surrogate latency of the configuration that keeps only the mandatory filter
// of every prune unit.
int64_t MandatoryFloor(const LatencyTable& table);

// Capacity left for the knapsack once every mandatory filter is paid for.
// Throws Error(kInfeasible) "infeasible: floor=F" when capacity < floor.
int64_t ReserveMandatory(const LatencyTable& table, int64_t capacity);

// Throws unless the table has one row of width m_u + 1 per prune unit.
void CheckTableMatches(const LatencyTable& table, const NetworkSpec& spec);

// Everything one stage's solve depends on.
struct StageProblem {
  std::vector<UnitScores> scores;
  std::vector<GroupRow> groups;
  KnapsackInstance instance;  // capacity already net of the mandatory floor
};

StageProblem BuildStageProblem(const NetworkSpec& spec, const TensorStore& store,
                               const LatencyTable& table, const Survivors& survivors,
                               int64_t capacity);

// Survivors implied by choosing `choice[u]` groups in every unit.
Survivors SelectSurvivors(const StageProblem& problem, std::span<const int> choice);

struct StageRecord {
  int64_t capacity = 0;
  int64_t knapsack_capacity = 0;
  Survivors survivors;
  std::vector<int> unit_kept;
  int64_t surrogate_latency = 0;
  std::optional<int64_t> exact_latency;
  double knapsack_score = 0.0;  // the optimized objective, mandatory filters excluded
  double score = 0.0;           // sum of all kept filters' scores
  KnapsackSolution solution;
  std::vector<FrontierPoint> frontier;  // filled only on request
};

StageRecord PlanStage(const NetworkSpec& spec, const TensorStore& store,
                      const LatencyTable& table, const Survivors& survivors,
                      int64_t capacity, bool record_frontier = false);

struct PlannerConfig {
  int64_t target_latency = 0;
  int stages = 1;
  bool record_frontier = false;
};

struct PruningPlan {
  PlannerConfig config;
  int64_t scale = kDefaultScale;
  int64_t full_latency = 0;
  int64_t floor = 0;
  bool analytic = false;
  std::vector<StageRecord> stages;
  int64_t flops_before = 0;
  int64_t flops_after = 0;
  std::optional<int64_t> exact_latency_before;
  std::optional<int64_t> exact_latency_after;

  const Survivors& FinalSurvivors() const { return stages.back().survivors; }
};

PruningPlan RunPlan(const NetworkSpec& spec, const TensorStore& store,
                    const LatencyTable& table, const PlannerConfig& config);

// Target latency for a kept (or removed) fraction of the full latency,
// rounded down so the resulting plan never exceeds the ratio.
int64_t TargetFromKeepRatio(int64_t full_latency, double keep_ratio);
int64_t TargetFromRemoveRatio(int64_t full_latency, double remove_ratio);

nlohmann::json PlanToJson(const NetworkSpec& spec, const PruningPlan& plan);
nlohmann::json FrontierToJson(const PruningPlan& plan);

// Per-layer masks of a survivor set, keyed by layer id.
nlohmann::json MasksToJson(const NetworkSpec& spec, const Survivors& survivors);

}  // namespace latprune

#endif  // LATPRUNE_PLANNER_H_
