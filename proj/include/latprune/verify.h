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

#ifndef LATPRUNE_VERIFY_H_
#define LATPRUNE_VERIFY_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "latprune/latency.h"
#include "latprune/network.h"
#include "latprune/tensor_store.h"

namespace latprune {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  // First failing check, or nullptr.
  const CheckResult* FirstFailure() const;
};

// Re-derives every plan invariant from the inputs: schedule, coupling,
// never-empty layers, nested masks, capacity, exact latency, knapsack
// optimality of each stage and the final summary. With `use_oracle`, each
// stage's optimum is also confirmed by exhaustive enumeration when the
// instance is small enough.
VerifyReport VerifyPlan(const NetworkSpec& spec, const TensorStore& store,
                        const LatencyTable& table, const nlohmann::json& plan,
                        bool use_oracle);

}  // namespace latprune

#endif  // LATPRUNE_VERIFY_H_
