#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "stagehpo/hp.hpp"
#include "stagehpo/sim.hpp"
#include "stagehpo/surrogate.hpp"

namespace stagehpo {

// Experiment description. Every field has a spelled-out default so a config
// file fully determines a run:
//
//   name              string, required
//   seed              integer, default 0 (also the surrogate study seed)
//   output_dir        string, default "out/<name>" (relative to the cwd)
//   study.id/model/dataset  strings
//   study.horizon     positive integer epochs
//   study.scheduled_hp  name of the hp driven by initial/factor/periodN axes
//   study.constants   {hp: value} applied to every segment
//   study.space       {axis: [values]}; values are strings or JSON numbers
//   study.sampling    {"mode": "grid"} | {"mode": "random"|"continuous",
//                     "n": N, "seed": S}
//   study.trials      explicit [{id, priority, segments: [{hp: {}, epochs}]}]
//                     (instead of space)
//   algorithm         {"type": "full"} | {"type": "sha", "rungs": [..],
//                     "eta": 3} | {"type": "asha", "R", "r", "eta", "s",
//                     "max_in_flight"}
//   cluster           {nodes: 4, gpus_per_node: 5, gpu_memory_mb: 12000}
//   cost              {epoch_time_s: 1, scaling_exponent: 0.9,
//                     checkpoint_load_s: 0.5, container_start_s: 2,
//                     container_destroy_s: 0}
//   surrogate         {err0, err_min, rate, width, jitter, lr_star_hi,
//                     lr_star_lo, batch_ref, default_lr}
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  StudySpec study;
  AlgorithmSpec algorithm;
  ClusterSpec cluster;
  CostModel cost;
  SurrogateParams surrogate;
};

// Throws Error(kInvalidConfig) naming the offending field; all module
// preconditions are checked before returning.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

HpValue hp_value_from_json(const nlohmann::json& v, const std::string& field);

}  // namespace stagehpo
