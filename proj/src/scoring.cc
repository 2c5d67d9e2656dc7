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

#include "latprune/scoring.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "latprune/error.h"

namespace latprune {
namespace {

const Tensor4& TensorFor(const TensorStore& store, const LayerSpec& layer) {
  auto it = store.find(layer.id);
  if (it == store.end()) ThrowInvalid("missing tensor " + layer.id);
  return it->second;
}

// Squared norm of W[o, i, :, :].
double SliceSq(const Tensor4& w, size_t o, size_t i) {
  const size_t ks = w.KernelSize();
  const float* p = w.data.data() + (o * w.in() + i) * ks;
  double sum = 0.0;
  for (size_t k = 0; k < ks; ++k) sum += double{p[k]} * double{p[k]};
  return sum;
}

}  // namespace

std::vector<double> FilterSqNorms(const Tensor4& weights) {
  std::vector<double> norms(weights.out(), 0.0);
  for (size_t o = 0; o < weights.out(); ++o) {
    for (size_t i = 0; i < weights.in(); ++i) norms[o] += SliceSq(weights, o, i);
  }
  return norms;
}

std::vector<double> ChannelSqNorms(const Tensor4& weights) {
  std::vector<double> norms(weights.in(), 0.0);
  for (size_t o = 0; o < weights.out(); ++o) {
    for (size_t i = 0; i < weights.in(); ++i) norms[i] += SliceSq(weights, o, i);
  }
  return norms;
}

NormInputs ComputeNorms(const NetworkSpec& spec, const TensorStore& store) {
  NormInputs norms;
  for (const LayerSpec& layer : spec.layers()) {
    const Tensor4& w = TensorFor(store, layer);
    norms.filter_sq.push_back(FilterSqNorms(w));
    norms.channel_sq.push_back(ChannelSqNorms(w));
  }
  return norms;
}

NormInputs ComputeNorms(const NetworkSpec& spec, const TensorStore& store,
                        const Survivors& survivors) {
  NormInputs norms;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const LayerSpec& layer = spec.layer(l);
    const Tensor4& w = TensorFor(store, layer);
    const std::vector<bool> alive_in = AliveInputChannels(spec, survivors, l);
    std::vector<double> filter_sq(w.out(), 0.0);
    std::vector<double> channel_sq(w.in(), 0.0);
    for (int o : survivors.at(spec.UnitOf(l))) {
      for (size_t i = 0; i < w.in(); ++i) {
        if (!alive_in[i]) continue;
        const double sq = SliceSq(w, o, i);
        filter_sq[o] += sq;
        channel_sq[i] += sq;
      }
    }
    norms.filter_sq.push_back(std::move(filter_sq));
    norms.channel_sq.push_back(std::move(channel_sq));
  }
  return norms;
}

std::vector<FilterNorms> ComposeValues(const NetworkSpec& spec,
                                       const NormInputs& norms) {
  std::vector<FilterNorms> out(spec.num_layers());
  for (int l = 0; l < spec.num_layers(); ++l) {
    FilterNorms& fn = out[l];
    fn.filter_sq = norms.filter_sq.at(l);
    const size_t m = fn.filter_sq.size();
    if (spec.IsTerminal(l)) {
      fn.value = fn.filter_sq;
      continue;
    }
    fn.consumer_sq.assign(m, 0.0);
    for (const ConsumerEdge& edge : spec.consumers(l)) {
      const std::vector<double>& csn = norms.channel_sq.at(edge.consumer);
      if (edge.offset + m > csn.size()) {
        ThrowInvalid("layer " + spec.layer(l).id +
                     ": consumer channel index out of range in " +
                     spec.layer(edge.consumer).id);
      }
      for (size_t k = 0; k < m; ++k) fn.consumer_sq[k] += csn[edge.offset + k];
    }
    fn.value.resize(m);
    for (size_t k = 0; k < m; ++k) fn.value[k] = fn.filter_sq[k] * fn.consumer_sq[k];
  }
  return out;
}

ScoreRow StructuredLampScores(std::span<const double> values) {
  if (values.empty()) ThrowInvalid("cannot score an empty value vector");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      ThrowInvalid("importance values must be finite and nonnegative");
    }
  }
  const int n = static_cast<int>(values.size());
  ScoreRow row;
  row.asc_perm.resize(n);
  std::iota(row.asc_perm.begin(), row.asc_perm.end(), 0);
  std::stable_sort(row.asc_perm.begin(), row.asc_perm.end(),
                   [&](int a, int b) { return values[a] < values[b]; });

  row.scores.assign(n, 0.0);
  double tail = 0.0;
  for (int r = n - 1; r >= 0; --r) {
    const int k = row.asc_perm[r];
    tail += values[k];
    row.scores[k] = tail > 0.0 ? values[k] / tail : 0.0;
  }
  row.mandatory = row.asc_perm.back();
  row.scores[row.mandatory] = 1.0;
  return row;
}

ScoreRow LampScores(std::span<const float> weights) {
  std::vector<double> sq(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    sq[i] = double{weights[i]} * double{weights[i]};
  }
  return StructuredLampScores(sq);
}

std::vector<UnitScores> ScoreUnits(const NetworkSpec& spec,
                                   const TensorStore& store,
                                   const Survivors& survivors) {
  const std::vector<FilterNorms> layer_values =
      ComposeValues(spec, ComputeNorms(spec, store, survivors));
  std::vector<UnitScores> units(spec.num_units());
  for (int u = 0; u < spec.num_units(); ++u) {
    UnitScores& us = units[u];
    us.filters = survivors.at(u);
    if (us.filters.empty()) {
      ThrowInvalid("prune unit " + spec.units()[u].key + " has no surviving filters");
    }
    us.values.assign(us.filters.size(), 0.0);
    for (int member : spec.units()[u].members) {
      const std::vector<double>& value = layer_values[member].value;
      for (size_t j = 0; j < us.filters.size(); ++j) {
        us.values[j] += value[us.filters[j]];
      }
    }
    us.row = StructuredLampScores(us.values);
  }
  return units;
}

GroupRow BuildGroups(const ScoreRow& row, std::span<const int64_t> contributions) {
  const size_t n = row.scores.size();
  if (contributions.size() != n) {
    ThrowInvalid("group construction: " + std::to_string(n) + " scores but " +
                 std::to_string(contributions.size()) + " contributions");
  }
  GroupRow groups;
  groups.desc_order = row.DescendingOrder();
  double importance = 0.0;
  int64_t cost = 0;
  for (size_t i = 1; i < n; ++i) {
    if (contributions[i] < 0) ThrowInvalid("negative latency contribution");
    importance += row.scores[groups.desc_order[i]];
    cost += contributions[i];
    groups.importance.push_back(importance);
    groups.cost.push_back(cost);
  }
  return groups;
}

}  // namespace latprune
