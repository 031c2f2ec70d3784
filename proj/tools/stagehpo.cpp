// Command-line front end: run / compare / gantt / tree.
//
// Exit codes: 0 success, 1 usage, 2 validation (bad config, report or
// trace), 3 simulation failure (an exception mid-run or failed trials).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stagehpo/config.hpp"
#include "stagehpo/error.hpp"
#include "stagehpo/report.hpp"

namespace fs = std::filesystem;
using namespace stagehpo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSimulation = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kMalformedTrace:
    case ErrorCode::kNotFound:
      return kExitValidation;
    default:
      return kExitSimulation;
  }
}

void print_summary(const ComparisonReport& report, const fs::path& out_dir) {
  std::printf("experiment %s (seed %llu)\n", report.experiment.c_str(), static_cast<unsigned long long>(report.seed));
  if (report.tree) {
    std::printf("  tree: %zu stages, %lld stage epochs, %lld trial epochs, savings %.4f\n", report.tree->stage_count,
                static_cast<long long>(report.tree->stage_epochs), static_cast<long long>(report.tree->trial_epochs),
                report.tree->savings_ratio());
  }
  for (const auto* r : {report.trial_based ? &*report.trial_based : nullptr,
                        report.stage_based ? &*report.stage_based : nullptr}) {
    if (!r) continue;
    std::printf("  %-12s e2e %10.1f s  gpu-hours %8.4f  epochs %7lld  launches %5zu  ooms %3zu\n",
                std::string(to_string(r->policy)).c_str(), r->end_to_end_s, r->gpu_hours,
                static_cast<long long>(r->epochs_trained), r->launches, r->oom_failures);
  }
  if (auto e2e = report.end_to_end_ratio()) std::printf("  ratio e2e %.3f", *e2e);
  if (auto g = report.gpu_hours_ratio()) std::printf("  gpu-hours %.3f", *g);
  if (auto ep = report.epochs_ratio()) std::printf("  epochs %.3f", *ep);
  if (report.end_to_end_ratio()) std::printf("\n");
  std::printf("  wrote %s\n", (out_dir / "report.json").string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stage-based hyperparameter optimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string policy = "both";
  auto* run = app.add_subcommand("run", "Simulate a config under the selected policies and write artifacts");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out-dir", out_dir, "Output directory (default: config output_dir)");
  run->add_option("--policy", policy, "Which policies to run")
      ->check(CLI::IsMember({"trial", "stage", "both"}));

  std::vector<std::string> report_paths;
  std::string format = "text";
  auto* cmp = app.add_subcommand("compare", "Tabulate one or more report.json files");
  cmp->add_option("reports", report_paths, "Report files")->required();
  cmp->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "csv"}));
  std::string cmp_out;
  cmp->add_option("--out-dir", cmp_out, "Also write compare.txt and compare.csv here");

  std::string trace_path;
  std::string gantt_out;
  auto* gantt = app.add_subcommand("gantt", "Render a trace CSV as an SVG Gantt chart");
  gantt->add_option("trace", trace_path, "Trace file (CSV)")->required();
  gantt->add_option("--out-dir", gantt_out, "Directory for the SVG (default: next to the trace)");

  std::string tree_config;
  std::optional<std::uint64_t> tree_seed;
  auto* tree = app.add_subcommand("tree", "Print stage-tree statistics without simulating");
  tree->add_option("config", tree_config, "Experiment config (JSON)")->required();
  tree->add_option("--seed", tree_seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      RunOptions opts;
      opts.seed = seed;
      if (!out_dir.empty()) opts.out_dir = fs::path(out_dir);
      opts.policies = policy == "trial" ? PolicySelection::kTrial
                      : policy == "stage" ? PolicySelection::kStage
                                          : PolicySelection::kBoth;
      ComparisonReport report = run_experiment(config_path, opts);
      fs::path written = opts.out_dir ? *opts.out_dir : load_config(config_path).output_dir;
      print_summary(report, written);
      if (report.has_failures()) {
        std::cerr << "error: some trials failed; see failed_trials in the report\n";
        return kExitSimulation;
      }
      return kExitOk;
    }
    if (*cmp) {
      std::vector<fs::path> paths(report_paths.begin(), report_paths.end());
      CompareResult result = compare(paths);
      for (const auto& err : result.errors) std::cerr << "error: " << err << "\n";
      std::cout << (format == "csv" ? result.to_csv() : result.to_text());
      if (!cmp_out.empty()) {
        fs::create_directories(cmp_out);
        std::ofstream(fs::path(cmp_out) / "compare.txt") << result.to_text();
        std::ofstream(fs::path(cmp_out) / "compare.csv") << result.to_csv();
      }
      return result.errors.empty() ? kExitOk : kExitValidation;
    }
    if (*gantt) {
      std::string svg = export_gantt(trace_path);
      fs::path dir = gantt_out.empty() ? fs::path(trace_path).parent_path() : fs::path(gantt_out);
      if (!dir.empty()) fs::create_directories(dir);
      fs::path out = dir / fs::path(trace_path).filename().replace_extension(".svg");
      std::ofstream(out, std::ios::binary) << svg;
      std::cout << "wrote " << out.string() << "\n";
      return kExitOk;
    }
    if (*tree) {
      nlohmann::json doc;
      {
        std::ifstream in(tree_config);
        if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open config '" + tree_config + "'");
        try {
          doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
          throw Error(ErrorCode::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
        }
      }
      if (tree_seed && doc.is_object()) doc["seed"] = *tree_seed;
      ExperimentConfig cfg = parse_config(doc);
      StageTreeStats s = tree_stats_for(cfg.study);
      std::printf("trials         %zu\n", cfg.study.trials.size());
      std::printf("stages         %zu\n", s.stage_count);
      std::printf("trial_epochs   %lld\n", static_cast<long long>(s.trial_epochs));
      std::printf("stage_epochs   %lld\n", static_cast<long long>(s.stage_epochs));
      std::printf("savings_ratio  %.6f (%lld/%lld)\n", s.savings_ratio(), static_cast<long long>(s.ratio_num),
                  static_cast<long long>(s.ratio_den));
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSimulation;
  }
  return kExitUsage;
}
