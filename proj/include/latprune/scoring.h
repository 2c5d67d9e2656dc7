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

#ifndef LATPRUNE_SCORING_H_
#define LATPRUNE_SCORING_H_

#include <cstdint>
#include <span>
#include <vector>

#include "latprune/network.h"
#include "latprune/tensor_store.h"

namespace latprune {

// ||W[k, :, :, :]||^2 for every output filter k.
std::vector<double> FilterSqNorms(const Tensor4& weights);

// ||W[:, k, :, :]||^2 for every input channel k.
std::vector<double> ChannelSqNorms(const Tensor4& weights);

// Raw per-layer norms, indexed like NetworkSpec::layers().
struct NormInputs {
  std::vector<std::vector<double>> filter_sq;   // length out_channels
  std::vector<std::vector<double>> channel_sq;  // length in_channels
};

NormInputs ComputeNorms(const NetworkSpec& spec, const TensorStore& store);

// Norms of the pruned network: pruned filters and the input channels they fed
// contribute nothing, so every entry is computed on survivors only.
NormInputs ComputeNorms(const NetworkSpec& spec, const TensorStore& store,
                        const Survivors& survivors);

struct FilterNorms {
  std::vector<double> filter_sq;
  // Input-channel norms of all consumers at this layer's channel positions,
  // summed across consumers. Empty for terminal layers.
  std::vector<double> consumer_sq;
  // filter_sq * consumer_sq, or filter_sq alone for terminal layers.
  std::vector<double> value;
};

// Combines filter norms with the matching consumer channel norms (honoring
// concat offsets). Throws if a consumer's channel vector is too short.
std::vector<FilterNorms> ComposeValues(const NetworkSpec& spec,
                                       const NormInputs& norms);

// Per-position importance scores of one layer (or prune unit).
struct ScoreRow {
  std::vector<double> scores;
  // Positions sorted by value ascending; ties keep the lower position first.
  std::vector<int> asc_perm;
  // Position of the unique score-1 filter (the last entry of asc_perm).
  int mandatory = 0;

  std::vector<int> DescendingOrder() const {
    return {asc_perm.rbegin(), asc_perm.rend()};
  }
};

// score(rank u) = value_u / sum_{v >= u} value_v over the ascending order.
// The top-ranked filter always scores exactly 1; zero values score 0, and an
// all-zero row still promotes its last-ranked filter to 1.
ScoreRow StructuredLampScores(std::span<const double> values);

// Unstructured magnitude score over the squared entries of a flat tensor.
ScoreRow LampScores(std::span<const float> weights);

// Importance inputs for one prune unit at the current survivor set.
struct UnitScores {
  std::vector<int> filters;    // original filter indices (the survivors)
  std::vector<double> values;  // summed across coupled members
  ScoreRow row;                // positions index into `filters`
};

// Scores every prune unit of the network restricted to `survivors`.
std::vector<UnitScores> ScoreUnits(const NetworkSpec& spec,
                                   const TensorStore& store,
                                   const Survivors& survivors);

// Nested filter groups of one unit. Group i (1-based) holds the i best
// filters after the mandatory one, so choosing it keeps i + 1 filters.
struct GroupRow {
  std::vector<int> desc_order;     // positions, mandatory first
  std::vector<double> importance;  // importance[i - 1] = I of group i
  std::vector<int64_t> cost;       // cost[i - 1] = sum of contributions 2..i+1

  int size() const { return static_cast<int>(importance.size()); }
  std::span<const int> Members(int group) const {
    return std::span(desc_order).subspan(1, group);
  }
};

// `contributions[j - 1]` is the latency contribution of the j-th kept filter
// position; it must have one entry per scored filter and be nonnegative.
GroupRow BuildGroups(const ScoreRow& row, std::span<const int64_t> contributions);

}  // namespace latprune

#endif  // LATPRUNE_SCORING_H_
