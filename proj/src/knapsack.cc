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

#include "latprune/knapsack.h"

#include <cmath>
#include <limits>
#include <string>

#include "latprune/error.h"

namespace latprune {
namespace {

void Validate(const KnapsackInstance& instance) {
  if (instance.capacity < 0) ThrowInvalid("knapsack capacity must be nonnegative");
  for (const auto& layer : instance.layers) {
    if (layer.size() > std::numeric_limits<uint16_t>::max()) {
      ThrowInvalid("knapsack layer has too many groups");
    }
    for (const KnapsackGroup& g : layer) {
      if (g.cost < 0) ThrowInvalid("knapsack group cost must be nonnegative");
      if (!std::isfinite(g.score)) ThrowInvalid("knapsack group score must be finite");
    }
  }
}

}  // namespace

std::vector<int> KnapsackSolution::KeptCounts() const {
  std::vector<int> kept(choice.size());
  for (size_t l = 0; l < choice.size(); ++l) kept[l] = choice[l] + 1;
  return kept;
}

double ChoiceScore(const KnapsackInstance& instance, std::span<const int> choice) {
  double score = 0.0;
  for (size_t l = choice.size(); l-- > 0;) {
    if (choice[l] > 0) score = instance.layers[l][choice[l] - 1].score + score;
  }
  return score;
}

int64_t ChoiceCost(const KnapsackInstance& instance, std::span<const int> choice) {
  int64_t cost = 0;
  for (size_t l = 0; l < choice.size(); ++l) {
    if (choice[l] > 0) cost += instance.layers[l][choice[l] - 1].cost;
  }
  return cost;
}

KnapsackSolution SolveGroupKnapsack(const KnapsackInstance& instance,
                                    std::vector<FrontierPoint>* frontier) {
  Validate(instance);
  const size_t num_layers = instance.layers.size();
  const size_t width = static_cast<size_t>(instance.capacity) + 1;

  // best[v]: highest score of layers l..L-1 within capacity v. Layers are
  // folded in from the back so that the recorded choices can be replayed
  // front to back, which yields the lexicographically smallest optimum.
  std::vector<double> next(width, 0.0);
  std::vector<double> best(width, 0.0);
  std::vector<uint16_t> choice(num_layers * width, 0);

  for (size_t l = num_layers; l-- > 0;) {
    best = next;
    uint16_t* row = choice.data() + l * width;
    const auto& groups = instance.layers[l];
    for (size_t i = 0; i < groups.size(); ++i) {
      const int64_t cost = groups[i].cost;
      if (cost > instance.capacity) continue;
      const double score = groups[i].score;
      for (size_t v = static_cast<size_t>(cost); v < width; ++v) {
        const double candidate = score + next[v - cost];
        // Strict comparison keeps the smallest group index among ties.
        if (candidate > best[v]) {
          best[v] = candidate;
          row[v] = static_cast<uint16_t>(i + 1);
        }
      }
    }
    std::swap(best, next);
  }
  const std::vector<double>& top = next;

  if (frontier != nullptr) {
    frontier->clear();
    for (size_t v = 0; v < width; ++v) {
      if (v == 0 || top[v] > top[v - 1]) {
        frontier->push_back({static_cast<int64_t>(v), top[v]});
      }
    }
  }

  // The lowest capacity reaching the optimum is the lowest achievable cost.
  size_t v = width - 1;
  while (v > 0 && top[v - 1] == top[width - 1]) --v;

  KnapsackSolution solution;
  solution.total_score = top[v];
  solution.choice.resize(num_layers, 0);
  for (size_t l = 0; l < num_layers; ++l) {
    const int i = choice[l * width + v];
    solution.choice[l] = i;
    if (i > 0) v -= static_cast<size_t>(instance.layers[l][i - 1].cost);
  }
  solution.total_cost = ChoiceCost(instance, solution.choice);
  return solution;
}

KnapsackSolution SolveBruteForce(const KnapsackInstance& instance) {
  Validate(instance);
  const size_t num_layers = instance.layers.size();
  int64_t combinations = 1;
  for (const auto& layer : instance.layers) {
    combinations *= static_cast<int64_t>(layer.size()) + 1;
    if (combinations > kMaxOracleCombinations) {
      ThrowInvalid("instance too large for enumeration");
    }
  }

  KnapsackSolution best;
  best.choice.assign(num_layers, 0);
  best.total_score = 0.0;
  best.total_cost = 0;

  // Odometer over all choice vectors in lexicographic order; with strict
  // comparisons the first optimum seen is the lexicographically smallest.
  std::vector<int> choice(num_layers, 0);
  while (true) {
    const int64_t cost = ChoiceCost(instance, choice);
    if (cost <= instance.capacity) {
      const double score = ChoiceScore(instance, choice);
      if (score > best.total_score ||
          (score == best.total_score && cost < best.total_cost)) {
        best.choice = choice;
        best.total_score = score;
        best.total_cost = cost;
      }
    }
    size_t l = num_layers;
    while (l > 0) {
      --l;
      if (choice[l] < static_cast<int>(instance.layers[l].size())) {
        ++choice[l];
        break;
      }
      choice[l] = 0;
      if (l == 0) return best;
    }
    if (num_layers == 0) return best;
  }
}

ZeroOneSelection SolveZeroOneKnapsack(std::span<const FilterItem> items,
                                      int num_layers, int64_t capacity) {
  if (capacity < 0) ThrowInvalid("knapsack capacity must be nonnegative");
  const size_t n = items.size();
  const size_t width = static_cast<size_t>(capacity) + 1;
  for (const FilterItem& item : items) {
    if (item.cost < 0) ThrowInvalid("knapsack item cost must be nonnegative");
    if (item.layer < 0 || item.layer >= num_layers) {
      ThrowInvalid("knapsack item has an out-of-range layer tag");
    }
  }

  std::vector<double> best(width, 0.0);
  std::vector<uint8_t> take(n * width, 0);
  for (size_t i = 0; i < n; ++i) {
    const int64_t cost = items[i].cost;
    if (cost > capacity) continue;
    for (size_t v = width; v-- > static_cast<size_t>(cost);) {
      const double candidate = best[v - cost] + items[i].score;
      if (candidate > best[v]) {
        best[v] = candidate;
        take[i * width + v] = 1;
      }
    }
  }

  size_t v = width - 1;
  while (v > 0 && best[v - 1] == best[width - 1]) --v;

  ZeroOneSelection selection;
  selection.taken.assign(n, false);
  selection.kept_per_layer.assign(num_layers, 0);
  selection.total_score = best[v];
  for (size_t i = n; i-- > 0;) {
    if (take[i * width + v]) {
      selection.taken[i] = true;
      ++selection.kept_per_layer[items[i].layer];
      selection.total_cost += items[i].cost;
      v -= static_cast<size_t>(items[i].cost);
    }
  }
  return selection;
}

}  // namespace latprune
