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

// Command-line front end: score, table, plan, verify, flops.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "latprune/error.h"
#include "latprune/latency.h"
#include "latprune/network.h"
#include "latprune/planner.h"
#include "latprune/scoring.h"
#include "latprune/tensor_store.h"
#include "latprune/verify.h"

namespace fs = std::filesystem;
using latprune::Error;
using latprune::ErrorCode;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerify = 4;

struct Globals {
  int64_t scale = latprune::kDefaultScale;
  bool quiet = false;
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) latprune::ThrowInvalid("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json ReadJson(const std::string& path) {
  try {
    return nlohmann::json::parse(ReadText(path));
  } catch (const nlohmann::json::parse_error&) {
    latprune::ThrowInvalid("malformed JSON in " + path);
  }
}

// Writes next to the destination and renames, so a failed run never leaves a
// partial file behind.
void WriteAtomically(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) latprune::ThrowInvalid("cannot write " + path);
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      latprune::ThrowInvalid("cannot write " + path);
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    latprune::ThrowInvalid("cannot write " + path + ": " + ec.message());
  }
}

void WriteJson(const std::string& path, const nlohmann::json& doc) {
  WriteAtomically(path, doc.dump(2) + "\n");
}

void Info(const Globals& g, const std::string& message) {
  if (!g.quiet) std::cout << message << "\n";
}

latprune::NetworkSpec LoadSpec(const std::string& path) {
  return latprune::ParseNetworkSpec(ReadText(path));
}

int RunScore(const Globals& g, const std::string& spec_path,
             const std::string& weights_path, const std::string& out_path) {
  const latprune::NetworkSpec spec = LoadSpec(spec_path);
  const latprune::TensorStore store = latprune::LoadTensorFile(weights_path, spec);
  const auto units = latprune::ScoreUnits(spec, store, spec.FullSurvivors());
  nlohmann::json layers = nlohmann::json::object();
  for (int l = 0; l < spec.num_layers(); ++l) {
    const latprune::ScoreRow& row = units[spec.UnitOf(l)].row;
    layers[spec.layer(l).id] = {{"scores", row.scores},
                                {"asc_perm", row.asc_perm},
                                {"mandatory", row.mandatory}};
  }
  WriteJson(out_path, {{"layers", layers}});
  Info(g, "wrote scores for " + std::to_string(spec.num_layers()) + " layers to " + out_path);
  return kExitOk;
}

int RunTable(const Globals& g, const std::string& spec_path,
             const std::string& cost_model_path, const std::string& measured_path,
             const std::string& out_path) {
  if (!cost_model_path.empty() && !measured_path.empty()) {
    latprune::ThrowInvalid("ambiguous latency source: give --cost-model or --measured, not both");
  }
  if (cost_model_path.empty() && measured_path.empty()) {
    latprune::ThrowInvalid("no latency source: give --cost-model or --measured");
  }
  const latprune::NetworkSpec spec = LoadSpec(spec_path);
  latprune::LatencyTable table;
  if (!cost_model_path.empty()) {
    const latprune::CostModel model = latprune::ParseCostModel(ReadText(cost_model_path));
    table = latprune::BuildLookupTable(spec, model, g.scale);
  } else {
    table = latprune::IngestLookupTable(spec, ReadText(measured_path), g.scale);
  }
  WriteJson(out_path, latprune::TableToJson(table));
  Info(g, "wrote latency table (full latency " + std::to_string(table.full_latency) +
              " units) to " + out_path);
  return kExitOk;
}

struct PlanArgs {
  std::string spec, weights, table, out, dump_dp;
  std::optional<int64_t> target_units;
  std::optional<double> keep_ratio, remove_ratio;
  int stages = 1;
};

int RunPlan(const Globals& g, const PlanArgs& args) {
  const int targets = args.target_units.has_value() + args.keep_ratio.has_value() +
                      args.remove_ratio.has_value();
  if (targets != 1) {
    latprune::ThrowInvalid(
        "give exactly one of --target-latency-units, --keep-ratio, --remove-ratio");
  }
  const latprune::NetworkSpec spec = LoadSpec(args.spec);
  const latprune::TensorStore store = latprune::LoadTensorFile(args.weights, spec);
  const latprune::LatencyTable table =
      latprune::LatencyTableFromJson(spec, ReadJson(args.table), g.scale);

  latprune::PlannerConfig config;
  config.stages = args.stages;
  config.record_frontier = !args.dump_dp.empty();
  if (args.target_units) {
    config.target_latency = *args.target_units;
  } else if (args.keep_ratio) {
    config.target_latency = latprune::TargetFromKeepRatio(table.full_latency, *args.keep_ratio);
  } else {
    config.target_latency =
        latprune::TargetFromRemoveRatio(table.full_latency, *args.remove_ratio);
  }

  const latprune::PruningPlan plan = latprune::RunPlan(spec, store, table, config);
  WriteJson(args.out, latprune::PlanToJson(spec, plan));
  if (!args.dump_dp.empty()) WriteJson(args.dump_dp, latprune::FrontierToJson(plan));
  Info(g, "wrote " + std::to_string(plan.stages.size()) + "-stage plan to " + args.out +
              " (surrogate latency " + std::to_string(plan.stages.back().surrogate_latency) +
              " of " + std::to_string(plan.full_latency) + " units)");
  return kExitOk;
}

int RunVerify(const Globals& g, const std::string& plan_path, const std::string& table_path,
              const std::string& spec_path, const std::string& weights_path,
              bool oracle) {
  const latprune::NetworkSpec spec = LoadSpec(spec_path);
  const latprune::TensorStore store = latprune::LoadTensorFile(weights_path, spec);
  const latprune::LatencyTable table =
      latprune::LatencyTableFromJson(spec, ReadJson(table_path), g.scale);
  const latprune::VerifyReport report =
      latprune::VerifyPlan(spec, store, table, ReadJson(plan_path), oracle);
  for (const latprune::CheckResult& check : report.checks) {
    Info(g, "check " + check.name + ": " + (check.passed ? "ok" : "FAILED " + check.detail));
  }
  if (const latprune::CheckResult* failure = report.FirstFailure()) {
    throw Error(ErrorCode::kVerificationFailed, failure->name + ": " + failure->detail);
  }
  Info(g, "all checks passed");
  return kExitOk;
}

int RunFlops(const std::string& spec_path, const std::string& plan_path) {
  const latprune::NetworkSpec spec = LoadSpec(spec_path);
  nlohmann::json out = {{"flops", latprune::CountFlops(spec, latprune::KeptCounts{})}};
  if (!plan_path.empty()) {
    const nlohmann::json plan = ReadJson(plan_path);
    latprune::KeptCounts kept;
    try {
      for (const auto& [id, mask] : plan.at("final").at("masks").items()) {
        kept[id] = static_cast<int>(mask.size());
      }
    } catch (const nlohmann::json::exception&) {
      latprune::ThrowInvalid("plan " + plan_path + " has no final masks");
    }
    out["flops_after"] = latprune::CountFlops(spec, kept);
  }
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return kExitInvalid;
    case ErrorCode::kInfeasible:
      return kExitInfeasible;
    case ErrorCode::kVerificationFailed:
      return kExitVerify;
  }
  return kExitInvalid;
}

std::string OneLine(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency-constrained structured pruning planner"};
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--scale", globals.scale, "Integer latency units per millisecond")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", globals.quiet, "Suppress progress messages");

  std::string spec, weights, out, cost_model, measured, table, plan_path;
  bool oracle = false;

  auto* score = app.add_subcommand("score", "Dump importance scores per layer");
  score->add_option("--spec", spec)->required();
  score->add_option("--weights", weights)->required();
  score->add_option("--out", out)->required();

  auto* table_cmd = app.add_subcommand("table", "Build or ingest a latency lookup table");
  table_cmd->add_option("--spec", spec)->required();
  table_cmd->add_option("--cost-model", cost_model);
  table_cmd->add_option("--measured", measured);
  table_cmd->add_option("--out", out)->required();

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Compute a staged pruning plan");
  plan->add_option("--spec", plan_args.spec)->required();
  plan->add_option("--weights", plan_args.weights)->required();
  plan->add_option("--table", plan_args.table)->required();
  plan->add_option("--out", plan_args.out)->required();
  plan->add_option("--target-latency-units", plan_args.target_units);
  plan->add_option("--keep-ratio", plan_args.keep_ratio);
  plan->add_option("--remove-ratio", plan_args.remove_ratio);
  plan->add_option("--stages", plan_args.stages)->check(CLI::PositiveNumber);
  plan->add_option("--dump-dp", plan_args.dump_dp, "Write each stage's knapsack frontier");

  auto* verify = app.add_subcommand("verify", "Re-check every invariant of a plan");
  verify->add_option("--plan", plan_path)->required();
  verify->add_option("--table", table)->required();
  verify->add_option("--spec", spec)->required();
  verify->add_option("--weights", weights)->required();
  verify->add_flag("--oracle", oracle, "Confirm optima by exhaustive enumeration");

  auto* flops = app.add_subcommand("flops", "Count multiply-accumulates");
  flops->add_option("--spec", spec)->required();
  flops->add_option("--plan", plan_path, "Also count the plan's final network");

  for (CLI::App* sub : {score, table_cmd, plan, verify, flops}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "latprune: error: invalid-input: " << OneLine(e.what()) << "\n";
    return kExitInvalid;
  }

  try {
    if (*score) return RunScore(globals, spec, weights, out);
    if (*table_cmd) return RunTable(globals, spec, cost_model, measured, out);
    if (*plan) return RunPlan(globals, plan_args);
    if (*verify) return RunVerify(globals, plan_path, table, spec, weights, oracle);
    if (*flops) return RunFlops(spec, plan_path);
  } catch (const Error& e) {
    std::cerr << "latprune: error: " << latprune::ErrorCodeName(e.code()) << ": "
              << OneLine(e.what()) << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "latprune: error: invalid-input: " << OneLine(e.what()) << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
