#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stagehpo/config.hpp"
#include "stagehpo/error.hpp"
#include "stagehpo/hp.hpp"
#include "stagehpo/report.hpp"

namespace py = pybind11;
using namespace stagehpo;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.

PolicySelection parse_policy(const std::string& policy) {
  if (policy == "trial") return PolicySelection::kTrial;
  if (policy == "stage") return PolicySelection::kStage;
  if (policy == "both") return PolicySelection::kBoth;
  throw Error(ErrorCode::kInvalidConfig, "policy must be trial, stage or both");
}

std::string comparison_json(const ComparisonReport& report) { return report.to_json().dump(); }

std::string run_config_json(const std::string& config_json, const std::string& policy) {
  ExperimentConfig config = parse_config(nlohmann::json::parse(config_json));
  ComparisonReport report;
  {
    py::gil_scoped_release release;
    report = run_comparison(config, parse_policy(policy));
  }
  return comparison_json(report);
}

std::string run_experiment_json(const std::filesystem::path& path, std::optional<std::uint64_t> seed,
                                std::optional<std::filesystem::path> out_dir, const std::string& policy) {
  RunOptions options;
  options.seed = seed;
  options.out_dir = std::move(out_dir);
  options.policies = parse_policy(policy);
  py::gil_scoped_release release;
  return comparison_json(run_experiment(path, options));
}

std::string tree_stats_json(const std::string& config_json) {
  ExperimentConfig config = parse_config(nlohmann::json::parse(config_json));
  StageTreeStats s = tree_stats_for(config.study);
  return nlohmann::json{{"trials", config.study.trials.size()},
                        {"stage_count", s.stage_count},
                        {"stage_epochs", s.stage_epochs},
                        {"trial_epochs", s.trial_epochs},
                        {"savings_ratio", s.savings_ratio()},
                        {"savings_ratio_exact", std::to_string(s.ratio_num) + "/" + std::to_string(s.ratio_den)}}
      .dump();
}

py::dict compare_reports(const std::vector<std::filesystem::path>& paths) {
  CompareResult r = compare(paths);
  py::dict out;
  out["text"] = r.to_text();
  out["csv"] = r.to_csv();
  out["errors"] = r.errors;
  out["rows"] = r.rows.size();
  return out;
}

std::vector<std::pair<std::string, std::int64_t>> step_schedule(const std::string& hp_name, const std::string& initial,
                                                                const std::string& factor,
                                                                const std::vector<std::int64_t>& periods,
                                                                std::int64_t horizon) {
  ScheduleParams p;
  p.hp_name = hp_name;
  p.initial = HpValue::infer(initial);
  p.factor = Decimal::parse(factor);
  p.change_epochs = periods;
  p.horizon = horizon;
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const auto& s : expand_step_schedule(p)) out.emplace_back(s.assignment.to_string(), s.epochs);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stage-tree hyperparameter optimization simulator";

  py::register_exception<Error>(m, "StagehpoError", PyExc_RuntimeError);
  py::register_exception<nlohmann::json::exception>(m, "JsonError", PyExc_ValueError);

  m.def("run_config_json", &run_config_json, py::arg("config_json"), py::arg("policy") = "both",
        "Simulate a config given as JSON text; returns the report as JSON text.");
  m.def("run_experiment_json", &run_experiment_json, py::arg("config_path"), py::arg("seed") = std::nullopt,
        py::arg("out_dir") = std::nullopt, py::arg("policy") = "both",
        "Run a config file and write its artifacts; returns the report as JSON text.");
  m.def("tree_stats_json", &tree_stats_json, py::arg("config_json"));
  m.def("compare", &compare_reports, py::arg("report_paths"));
  m.def("export_gantt", [](const std::filesystem::path& p) { return export_gantt(p); }, py::arg("trace_path"));
  m.def("expand_step_schedule", &step_schedule, py::arg("hp_name"), py::arg("initial"), py::arg("factor"),
        py::arg("periods"), py::arg("horizon"));
  m.def("decimal_multiply", [](const std::string& a, const std::string& b) {
    return (Decimal::parse(a) * Decimal::parse(b)).to_string();
  });
}
