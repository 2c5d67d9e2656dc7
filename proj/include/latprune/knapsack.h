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

#ifndef LATPRUNE_KNAPSACK_H_
#define LATPRUNE_KNAPSACK_H_

#include <cstdint>
#include <span>
#include <vector>

namespace latprune {

struct KnapsackGroup {
  int64_t cost = 0;
  double score = 0.0;
};

// One list of candidate groups per layer; at most one group per layer may be
// chosen. Groups are nested prefixes, so within a layer cost and score are
// nondecreasing in the group index.
struct KnapsackInstance {
  std::vector<std::vector<KnapsackGroup>> layers;
  int64_t capacity = 0;
};

struct KnapsackSolution {
  // Per layer: 0 for no group (only the mandatory filter survives), otherwise
  // the 1-based group index.
  std::vector<int> choice;
  // Sum of the chosen scores, accumulated from the last layer backwards.
  double total_score = 0.0;
  int64_t total_cost = 0;

  // Filters kept per layer, counting the mandatory one: choice + 1.
  std::vector<int> KeptCounts() const;
};

// A point where the best achievable score increases with capacity.
struct FrontierPoint {
  int64_t capacity = 0;
  double score = 0.0;
};

// Sum of the chosen groups' scores in the same order the solvers use.
double ChoiceScore(const KnapsackInstance& instance, std::span<const int> choice);
int64_t ChoiceCost(const KnapsackInstance& instance, std::span<const int> choice);

// Group knapsack by dynamic programming over capacities 0..capacity.
// Among optimal selections it returns the one with the lowest total cost,
// then the lexicographically smallest choice vector in layer order. When
// `frontier` is non-null it receives the score-vs-capacity frontier.
KnapsackSolution SolveGroupKnapsack(const KnapsackInstance& instance,
                                    std::vector<FrontierPoint>* frontier = nullptr);

inline constexpr int64_t kMaxOracleCombinations = 10'000'000;

// Exhaustive enumeration with the same objective and tie-breaking. Throws if
// the instance has more than kMaxOracleCombinations selections.
KnapsackSolution SolveBruteForce(const KnapsackInstance& instance);

// An individual filter for the 0-1 baseline.
struct FilterItem {
  int layer = 0;
  int64_t cost = 0;
  double score = 0.0;
};

struct ZeroOneSelection {
  std::vector<bool> taken;
  std::vector<int> kept_per_layer;  // may contain zeros
  double total_score = 0.0;
  int64_t total_cost = 0;
};

// Classic 0-1 knapsack over individual filters with no per-layer reservation.
ZeroOneSelection SolveZeroOneKnapsack(std::span<const FilterItem> items,
                                      int num_layers, int64_t capacity);

}  // namespace latprune

#endif  // LATPRUNE_KNAPSACK_H_
