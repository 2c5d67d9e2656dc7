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

#include "latprune/network.h"

#include <random>
#include <string>
#include <vector>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "latprune/error.h"

namespace latprune {
namespace {

using ::latprune::testing::AddOf;
using ::latprune::testing::ChainSpec;
using ::latprune::testing::ConcatOf;
using ::latprune::testing::Conv;
using ::latprune::testing::Dense;
using ::latprune::testing::From;

// Runs `fn` and returns the Error message, failing if nothing is thrown.
template <typename Fn>
std::string ErrorOf(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
    return e.what();
  }
  ADD_FAILURE() << "expected an Error";
  return "";
}

TEST(NetworkSpecTest, ChainDerivesInChannels) {
  const NetworkSpec spec = ChainSpec({3, 4, 2}, 3, 32);
  ASSERT_EQ(spec.num_layers(), 2);
  EXPECT_EQ(spec.layer(0).in_channels, 3);
  EXPECT_EQ(spec.layer(1).in_channels, 4);
  EXPECT_FALSE(spec.IsTerminal(0));
  EXPECT_TRUE(spec.IsTerminal(1));
  ASSERT_EQ(spec.num_units(), 2);
  EXPECT_EQ(spec.units()[0].key, "conv1");
}

TEST(NetworkSpecTest, AddPreservesWidth) {
  const NetworkSpec spec = NetworkSpec::Create(
      "add", {3, 8, 8},
      {Conv("a", 16, 3, 8, From("input"), "g"), Conv("b", 16, 3, 8, From("a"), "g"),
       Conv("c", 4, 1, 8, AddOf({"a", "b"}))});
  EXPECT_EQ(spec.layer(spec.IndexOf("c")).in_channels, 16);
  EXPECT_EQ(spec.layer(spec.IndexOf("c")).combine, Combine::kAdd);
  ASSERT_EQ(spec.num_units(), 2);
  EXPECT_EQ(spec.units()[0].key, "g");
  EXPECT_EQ(spec.units()[0].members, (std::vector<int>{0, 1}));
  EXPECT_EQ(spec.units()[0].width, 16);
}

TEST(NetworkSpecTest, AddChannelMismatchIsRejected) {
  const std::string msg = ErrorOf([] {
    NetworkSpec::Create("bad", {3, 8, 8},
                        {Conv("a", 16, 3, 8, From("input")), Conv("b", 8, 3, 8, From("a")),
                         Conv("c", 4, 1, 8, AddOf({"a", "b"}))});
  });
  EXPECT_NE(msg.find("add-combine channel mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find("layer c"), std::string::npos) << msg;
}

TEST(NetworkSpecTest, AddWithoutCouplingIsRejected) {
  const std::string msg = ErrorOf([] {
    NetworkSpec::Create("bad", {3, 8, 8},
                        {Conv("a", 16, 3, 8, From("input")), Conv("b", 16, 3, 8, From("a")),
                         Conv("c", 4, 1, 8, AddOf({"a", "b"}))});
  });
  EXPECT_NE(msg.find("share a coupling group"), std::string::npos) << msg;
}

TEST(NetworkSpecTest, ConcatSumsWidths) {
  const NetworkSpec spec = NetworkSpec::Create(
      "cat", {3, 8, 8},
      {Conv("a", 3, 3, 8, From("input")), Conv("b", 5, 3, 8, From("input")),
       Conv("c", 2, 1, 8, ConcatOf({"a", "b"}))});
  EXPECT_EQ(spec.layer(2).in_channels, 8);
  ASSERT_EQ(spec.consumers(0).size(), 1u);
  EXPECT_EQ(spec.consumers(0)[0].offset, 0);
  EXPECT_EQ(spec.consumers(1)[0].offset, 3);
}

TEST(NetworkSpecTest, ErrorsNameTheLayer) {
  EXPECT_NE(ErrorOf([] {
              NetworkSpec::Create("x", {3, 8, 8}, {Conv("a", 4, 3, 8, From("nope"))});
            }).find("layer a: unknown producer nope"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] {
              NetworkSpec::Create("x", {3, 8, 8}, {Conv("a", 0, 3, 8, From("input"))});
            }).find("layer a: non-positive dimension"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] {
              NetworkSpec::Create("x", {3, 8, 8},
                                  {Conv("a", 4, 3, 8, From("b")), Conv("b", 4, 3, 8, From("a"))});
            }).find("cycle detected"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] {
              NetworkSpec::Create("x", {3, 8, 8},
                                  {Conv("a", 4, 3, 8, From("input")),
                                   Conv("a", 4, 3, 8, From("input"))});
            }).find("duplicate id"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] {
              NetworkSpec::Create("x", {3, 8, 8}, {Conv("a", 4, 3, 8, From("a"))});
            }).find("cycle detected"),
            std::string::npos);
}

TEST(NetworkSpecTest, CouplingWidthsMustAgree) {
  ErrorOf([] {
    NetworkSpec::Create("x", {3, 8, 8},
                        {Conv("a", 4, 3, 8, From("input"), "g"),
                         Conv("b", 5, 3, 8, From("a"), "g")});
  });
}

TEST(NetworkSpecTest, OutOfOrderLayersAreSortedTopologically) {
  const NetworkSpec spec = NetworkSpec::Create(
      "x", {3, 8, 8}, {Conv("b", 2, 3, 8, From("a")), Conv("a", 4, 3, 8, From("input"))});
  EXPECT_EQ(spec.layer(0).id, "a");
  EXPECT_EQ(spec.layer(1).id, "b");
  EXPECT_EQ(spec.layer(1).in_channels, 4);
}

TEST(NetworkSpecTest, JsonRoundTrip) {
  const NetworkSpec spec = testing::ResNet18Spec();
  const NetworkSpec again = NetworkSpecFromJson(spec.ToJson());
  EXPECT_EQ(again.ToJson(), spec.ToJson());
  EXPECT_EQ(again.num_units(), spec.num_units());
}

TEST(NetworkSpecTest, ParsesDocumentedFormat) {
  const NetworkSpec spec = ParseNetworkSpec(R"({
    "name": "toy", "input": {"channels": 3, "h": 32, "w": 32},
    "layers": [
      {"id": "conv1", "kind": "conv", "out": 4, "kh": 3, "kw": 3, "out_h": 32, "out_w": 32,
       "producers": [{"from": "input", "combine": "single"}]},
      {"id": "fc", "kind": "dense", "out": 2, "producers": [{"from": "conv1"}]}
    ]})");
  EXPECT_EQ(spec.name(), "toy");
  EXPECT_EQ(spec.layer(1).kind, LayerKind::kDense);
  EXPECT_EQ(spec.layer(1).in_channels, 4);
  EXPECT_EQ(spec.layer(1).KernelArea(), 1);
  ErrorOf([] { ParseNetworkSpec("{not json"); });
  ErrorOf([] { ParseNetworkSpec(R"({"name": "x", "input": {"channels": 3, "h": 1, "w": 1}})"); });
}

TEST(PassivePruneTest, ConsumerFollowsProducer) {
  const NetworkSpec spec = ChainSpec({3, 4, 2});
  const auto view = PassivePruneView(spec, {{"conv1", 2}, {"conv2", 2}});
  EXPECT_EQ(view.at("conv2").in, 2);
  EXPECT_EQ(view.at("conv1").in, 3);
  EXPECT_EQ(view.at("conv1").out, 2);
}

TEST(PassivePruneTest, AddPropagatesSharedWidth) {
  const NetworkSpec spec = NetworkSpec::Create(
      "res", {3, 8, 8},
      {Conv("a", 16, 3, 8, From("input"), "g"), Conv("b", 16, 3, 8, From("a"), "g"),
       Conv("c", 4, 1, 8, AddOf({"a", "b"})), Conv("d", 4, 1, 8, AddOf({"a", "b"}))});
  const auto view = PassivePruneView(spec, {{"a", 10}, {"b", 10}});
  EXPECT_EQ(view.at("c").in, 10);
  EXPECT_EQ(view.at("d").in, 10);
  EXPECT_EQ(view.at("b").in, 10);
  ErrorOf([&] { PassivePruneView(spec, {{"a", 10}, {"b", 9}}); });
}

TEST(PassivePruneTest, ConcatSums) {
  const NetworkSpec spec = NetworkSpec::Create(
      "cat", {3, 8, 8},
      {Conv("a", 6, 3, 8, From("input")), Conv("b", 7, 3, 8, From("input")),
       Conv("c", 2, 1, 8, ConcatOf({"a", "b"}))});
  EXPECT_EQ(PassivePruneView(spec, {{"a", 3}, {"b", 5}}).at("c").in, 8);
}

TEST(PassivePruneTest, OutOfRangeCountsAreRejected) {
  const NetworkSpec spec = ChainSpec({3, 4, 2});
  ErrorOf([&] { PassivePruneView(spec, {{"conv1", 5}}); });
  ErrorOf([&] { PassivePruneView(spec, {{"conv1", -1}}); });
  ErrorOf([&] { PassivePruneView(spec, {{"nope", 1}}); });
}

TEST(FlopsTest, SingleConv) {
  const NetworkSpec spec = ChainSpec({3, 4}, 3, 32);
  EXPECT_EQ(CountFlops(spec, KeptCounts{}), 110592);
}

TEST(FlopsTest, ZeroKeptKillsDownstream) {
  const NetworkSpec spec = ChainSpec({3, 4, 2, 5}, 3, 8);
  const KeptCounts kept = {{"conv1", 0}};
  const auto view = PassivePruneView(spec, kept);
  EXPECT_EQ(view.at("conv2").in, 0);
  // conv1 and conv2 contribute nothing; conv3 is untouched.
  EXPECT_EQ(CountFlops(spec, kept), int64_t{2} * 5 * 9 * 64);
}

TEST(FlopsTest, ResNet56IsAbout128M) {
  const int64_t flops = CountFlops(testing::ResNet56Spec(), KeptCounts{});
  EXPECT_NEAR(static_cast<double>(flops), 128e6, 0.05 * 128e6);
}

// Per-layer loop written independently of EffectiveWidths.
int64_t LoopFlops(const NetworkSpec& spec, const std::vector<int>& kept) {
  int64_t total = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const LayerSpec& layer = spec.layer(l);
    int in = 0;
    for (int p : layer.producer_index) {
      const int w = p == kInputIndex ? spec.input().channels : kept[p];
      in = layer.combine == Combine::kConcat ? in + w : w;
    }
    total += int64_t{in} * kept[l] * layer.KernelArea() * layer.OutputArea();
  }
  return total;
}

TEST(FlopsTest, MatchesLoopOracleAndIsMonotone) {
  const NetworkSpec spec = testing::ResNet18Spec();
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> unit_kept;
    for (const PruneUnit& u : spec.units()) {
      unit_kept.push_back(std::uniform_int_distribution<int>(0, u.width)(rng));
    }
    const KeptCounts kept = spec.KeptFromUnitCounts(unit_kept);
    const std::vector<int> per_layer = ResolveKept(spec, kept);
    const int64_t flops = CountFlops(spec, kept);
    EXPECT_EQ(flops, LoopFlops(spec, per_layer));
    EXPECT_EQ(flops, CountFlops(spec, per_layer));
    const int u = std::uniform_int_distribution<int>(0, spec.num_units() - 1)(rng);
    if (unit_kept[u] < spec.units()[u].width) {
      ++unit_kept[u];
      EXPECT_GE(CountFlops(spec, spec.KeptFromUnitCounts(unit_kept)), flops);
    }
  }
}

TEST(PassivePruneTest, IdempotentAndOrderIndependent) {
  const NetworkSpec spec = testing::ResNet18Spec();
  KeptCounts forward, backward;
  for (int u = 0; u < spec.num_units(); ++u) {
    for (int m : spec.units()[u].members) forward[spec.layer(m).id] = 1 + u % 8;
  }
  for (auto it = forward.rbegin(); it != forward.rend(); ++it) backward.emplace(*it);
  EXPECT_EQ(PassivePruneView(spec, forward), PassivePruneView(spec, backward));
  EXPECT_EQ(PassivePruneView(spec, forward), PassivePruneView(spec, forward));
}

TEST(NetworkSpecTest, ResNetCouplingGroups) {
  const NetworkSpec spec = testing::ResNet18Spec();
  // conv1 + four residual stages' output convs, eight inner convs, fc.
  EXPECT_EQ(spec.num_units(), 13);
  EXPECT_EQ(spec.units()[spec.UnitOf(spec.IndexOf("conv1"))].key, "layer1");
  EXPECT_EQ(spec.UnitOf(spec.IndexOf("layer2b0_sc")), spec.UnitOf(spec.IndexOf("layer2b1_b")));
  EXPECT_EQ(spec.layer(spec.IndexOf("fc")).in_channels, 512);
  EXPECT_NE(spec.Find("layer4b1_a"), std::nullopt);
  EXPECT_EQ(spec.Find("missing"), std::nullopt);
}

TEST(AliveInputChannelsTest, FollowsSurvivors) {
  const NetworkSpec spec = NetworkSpec::Create(
      "cat", {3, 8, 8},
      {Conv("a", 2, 3, 8, From("input")), Conv("b", 2, 3, 8, From("input")),
       Conv("c", 2, 1, 8, ConcatOf({"a", "b"}))});
  Survivors survivors = spec.FullSurvivors();
  survivors[spec.UnitOf(0)] = {1};
  survivors[spec.UnitOf(1)] = {0};
  EXPECT_EQ(AliveInputChannels(spec, survivors, 2), (std::vector<bool>{false, true, true, false}));
  EXPECT_EQ(AliveInputChannels(spec, survivors, 0), (std::vector<bool>{true, true, true}));
}

}  // namespace
}  // namespace latprune
