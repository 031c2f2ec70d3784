#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagehpo/config.hpp"
#include "stagehpo/sim.hpp"
#include "stagehpo/stage_tree.hpp"

namespace stagehpo {

// --- traces --------------------------------------------------------------

inline constexpr std::string_view kTraceHeader = "time_s,event,stage_id,trial_id,worker_id,node,gpus,detail";

std::string trace_to_csv(const std::vector<TraceRecord>& trace);
// Throws Error(kMalformedTrace) with the offending line number.
std::vector<TraceRecord> trace_from_csv(std::string_view csv);

// Quantities recomputed from a trace alone.
struct TraceTotals {
  double end_to_end_s = 0.0;
  double gpu_seconds = 0.0;
  std::int64_t epochs_trained = 0;
};
TraceTotals totals_from_trace(const std::vector<TraceRecord>& trace);

// --- experiment ----------------------------------------------------------

enum class PolicySelection { kTrial, kStage, kBoth };

struct ComparisonReport {
  std::string experiment;
  std::uint64_t seed = 0;
  std::optional<StageTreeStats> tree;
  std::optional<SimReport> trial_based;
  std::optional<SimReport> stage_based;

  // trial_based / stage_based; std::nullopt unless both policies ran.
  std::optional<double> end_to_end_ratio() const;
  std::optional<double> gpu_hours_ratio() const;
  std::optional<double> epochs_ratio() const;
  bool has_failures() const;

  nlohmann::json to_json() const;
};

nlohmann::json summarize(const SimReport& report);

StageTreeStats tree_stats_for(const StudySpec& study);

// Runs the selected policies (concurrently when both) on the same seed.
ComparisonReport run_comparison(const ExperimentConfig& config, PolicySelection policies = PolicySelection::kBoth);

// Loads, runs and writes report.json, trace_<policy>.csv and
// gantt_<policy>.svg into `out_dir` (config output_dir when empty).
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  PolicySelection policies = PolicySelection::kBoth;
};
ComparisonReport run_experiment(const std::filesystem::path& config_path, const RunOptions& options = {});

// --- compare -------------------------------------------------------------

struct CompareRow {
  std::string experiment;
  std::string policies;
  std::optional<double> e2e_trial, e2e_stage, gpuh_trial, gpuh_stage;
  std::optional<double> e2e_ratio, gpuh_ratio, epochs_ratio;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<std::string> errors;  // one per unreadable report

  std::string to_text() const;
  std::string to_csv() const;
};

CompareResult compare(const std::vector<std::filesystem::path>& report_paths);

// --- gantt ---------------------------------------------------------------

// One row per GPU, one bar per executed piece and GPU. Parent/child edges
// are solid when both ran on the same worker, dashed otherwise.
std::string render_gantt(const std::vector<TraceRecord>& trace, const std::string& title = "");
std::string export_gantt(const std::filesystem::path& trace_path);

}  // namespace stagehpo
