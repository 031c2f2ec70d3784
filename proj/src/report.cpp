#include "stagehpo/report.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "stagehpo/error.hpp"

namespace stagehpo {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::optional<std::string> detail_field(std::string_view detail, std::string_view key) {
  for (auto kv : split(detail, ';')) {
    auto eq = kv.find('=');
    if (eq != std::string_view::npos && kv.substr(0, eq) == key) return std::string(kv.substr(eq + 1));
  }
  return std::nullopt;
}

std::int64_t detail_int(std::string_view detail, std::string_view key, std::int64_t fallback) {
  auto v = detail_field(detail, key);
  return v ? std::strtoll(v->c_str(), nullptr, 10) : fallback;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kNotFound, "cannot write '" + path.string() + "'");
  out << content;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

// --- traces ------------------------------------------------------------------

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : trace) {
    std::string gpus;
    for (std::size_t i = 0; i < r.gpus.size(); ++i) gpus += (i ? ";" : "") + std::to_string(r.gpus[i]);
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.time_s, r.event, r.stage_id, r.trial_id, r.worker_id, r.node, gpus,
                       r.detail);
  }
  return out;
}

std::vector<TraceRecord> trace_from_csv(std::string_view csv) {
  std::vector<TraceRecord> out;
  auto lines = split(csv, '\n');
  if (lines.empty() || lines[0] != kTraceHeader) {
    throw Error(ErrorCode::kMalformedTrace, "line 1: expected header '" + std::string(kTraceHeader) + "'");
  }
  for (std::size_t n = 1; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(n + 1) + ": ";
    auto fields = split(line, ',');
    if (fields.size() != 8) throw Error(ErrorCode::kMalformedTrace, where + "expected 8 fields, got " + std::to_string(fields.size()));
    auto number = [&](std::string_view f, const char* name) {
      std::string s(f);
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size()) {
        throw Error(ErrorCode::kMalformedTrace, where + "bad " + std::string(name) + " '" + s + "'");
      }
      return v;
    };
    TraceRecord r;
    r.time_s = number(fields[0], "time_s");
    r.event = std::string(fields[1]);
    if (r.event.empty()) throw Error(ErrorCode::kMalformedTrace, where + "empty event");
    r.stage_id = static_cast<std::int64_t>(number(fields[2], "stage_id"));
    r.trial_id = std::string(fields[3]);
    r.worker_id = static_cast<int>(number(fields[4], "worker_id"));
    r.node = static_cast<int>(number(fields[5], "node"));
    if (!fields[6].empty()) {
      for (auto g : split(fields[6], ';')) r.gpus.push_back(static_cast<int>(number(g, "gpu id")));
    }
    r.detail = std::string(fields[7]);
    out.push_back(std::move(r));
  }
  return out;
}

TraceTotals totals_from_trace(const std::vector<TraceRecord>& trace) {
  TraceTotals t;
  std::map<std::int64_t, const TraceRecord*> open;
  for (const auto& r : trace) {
    t.end_to_end_s = std::max(t.end_to_end_s, r.time_s);
    if (r.event == "start") {
      open[r.stage_id] = &r;
      continue;
    }
    bool closes = r.event == "finish" || r.event == "oom" ||
                  (r.event == "truncate" && detail_field(r.detail, "aborted").has_value());
    if (!closes) continue;
    auto it = open.find(r.stage_id);
    if (it == open.end()) continue;
    t.gpu_seconds += (r.time_s - it->second->time_s) * static_cast<double>(it->second->gpus.size());
    open.erase(it);
    if (r.event == "finish") t.epochs_trained += detail_int(r.detail, "to", 0) - detail_int(r.detail, "from", 0);
  }
  return t;
}

// --- experiment ----------------------------------------------------------------

std::optional<double> ComparisonReport::end_to_end_ratio() const {
  if (!trial_based || !stage_based) return std::nullopt;
  return ratio(trial_based->end_to_end_s, stage_based->end_to_end_s);
}

std::optional<double> ComparisonReport::gpu_hours_ratio() const {
  if (!trial_based || !stage_based) return std::nullopt;
  return ratio(trial_based->gpu_hours, stage_based->gpu_hours);
}

std::optional<double> ComparisonReport::epochs_ratio() const {
  if (!trial_based || !stage_based) return std::nullopt;
  return ratio(static_cast<double>(trial_based->epochs_trained), static_cast<double>(stage_based->epochs_trained));
}

bool ComparisonReport::has_failures() const {
  for (const auto* r : {trial_based ? &*trial_based : nullptr, stage_based ? &*stage_based : nullptr}) {
    if (!r) continue;
    for (const auto& [id, o] : r->trials) {
      if (o.status == "failed") return true;
    }
  }
  return false;
}

json summarize(const SimReport& report) {
  json trials = json::object();
  json failed = json::array();
  for (const auto& [id, o] : report.trials) {
    trials[id] = {{"status", o.status}, {"epochs", o.epochs_reached}, {"accuracy", o.accuracy}};
    if (o.status == "failed") failed.push_back(id);
  }
  std::set<std::size_t> gpu_counts;
  std::map<std::string, std::set<std::size_t>> by_batch;
  for (const auto& r : report.trace) {
    if (r.event != "start") continue;
    gpu_counts.insert(r.gpus.size());
    if (auto b = detail_field(r.detail, "batch")) by_batch[*b].insert(r.gpus.size());
  }
  json batch_json = json::object();
  for (const auto& [b, counts] : by_batch) batch_json[b] = std::vector<std::size_t>(counts.begin(), counts.end());
  json funnel = json::array();
  for (const auto& f : report.funnel) {
    funnel.push_back({{"epoch", f.epoch}, {"participants", f.participants}, {"survivors", f.survivors}});
  }
  return {
      {"policy", std::string(to_string(report.policy))},
      {"end_to_end_s", report.end_to_end_s},
      {"gpu_hours", report.gpu_hours},
      {"gpu_seconds", report.gpu_seconds},
      {"epochs_trained", report.epochs_trained},
      {"scheduled_units", report.scheduled_units},
      {"launches", report.launches},
      {"oom_failures", report.oom_failures},
      {"containers_started", report.containers_started},
      {"checkpoint_loads", report.checkpoint_loads},
      {"launch_gpu_counts", std::vector<std::size_t>(gpu_counts.begin(), gpu_counts.end())},
      {"launch_gpu_counts_by_batch", batch_json},
      {"sha_funnel", funnel},
      {"failed_trials", failed},
      {"trials", trials},
      {"trace_file", "trace_" + std::string(to_string(report.policy)) + ".csv"},
  };
}

json ComparisonReport::to_json() const {
  json doc;
  doc["experiment"] = experiment;
  doc["seed"] = seed;
  if (tree) {
    doc["tree"] = {{"stage_count", tree->stage_count},
                   {"stage_epochs", tree->stage_epochs},
                   {"trial_epochs", tree->trial_epochs},
                   {"savings_ratio", tree->savings_ratio()},
                   {"savings_ratio_exact", std::to_string(tree->ratio_num) + "/" + std::to_string(tree->ratio_den)}};
  }
  json policies = json::object();
  if (trial_based) policies["trial_based"] = summarize(*trial_based);
  if (stage_based) policies["stage_based"] = summarize(*stage_based);
  doc["policies"] = policies;
  json ratios = json::object();
  auto put = [&](const char* key, std::optional<double> v) { ratios[key] = v ? json(*v) : json(nullptr); };
  put("end_to_end", end_to_end_ratio());
  put("gpu_hours", gpu_hours_ratio());
  put("epochs", epochs_ratio());
  doc["ratios"] = ratios;
  return doc;
}

StageTreeStats tree_stats_for(const StudySpec& study) {
  StageTree tree;
  for (const auto& t : study.trials) tree.insert_trial(t);
  return tree.stats();
}

ComparisonReport run_comparison(const ExperimentConfig& config, PolicySelection policies) {
  ComparisonReport report;
  report.experiment = config.name;
  report.seed = config.seed;
  report.tree = tree_stats_for(config.study);
  auto launch = [&](Policy p) {
    return std::async(std::launch::async, [&config, p] {
      return simulate(config.study, config.algorithm, p, config.cluster, config.cost, config.surrogate, config.seed);
    });
  };
  std::optional<std::future<SimReport>> trial, stage;
  if (policies != PolicySelection::kStage) trial = launch(Policy::kTrialBased);
  if (policies != PolicySelection::kTrial) stage = launch(Policy::kStageBased);
  if (trial) report.trial_based = trial->get();
  if (stage) report.stage_based = stage->get();
  return report;
}

ComparisonReport run_experiment(const std::filesystem::path& config_path, const RunOptions& options) {
  json doc;
  try {
    doc = json::parse(read_file(config_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "config '" + config_path.string() + "' is not valid JSON: " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.message());
  }
  if (options.seed && doc.is_object()) doc["seed"] = *options.seed;
  ExperimentConfig config = parse_config(doc);
  std::filesystem::path out_dir = options.out_dir ? *options.out_dir : config.output_dir;

  ComparisonReport report = run_comparison(config, options.policies);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "report.json", report.to_json().dump(2) + "\n");
  for (const auto* r : {report.trial_based ? &*report.trial_based : nullptr,
                        report.stage_based ? &*report.stage_based : nullptr}) {
    if (!r) continue;
    const std::string policy(to_string(r->policy));
    write_file(out_dir / ("trace_" + policy + ".csv"), trace_to_csv(r->trace));
    write_file(out_dir / ("gantt_" + policy + ".svg"), render_gantt(r->trace, config.name + " (" + policy + ")"));
  }
  return report;
}

// --- compare ---------------------------------------------------------------------

CompareResult compare(const std::vector<std::filesystem::path>& report_paths) {
  CompareResult result;
  for (const auto& path : report_paths) {
    try {
      json doc = json::parse(read_file(path));
      CompareRow row;
      row.experiment = doc.at("experiment").get<std::string>();
      const json& policies = doc.at("policies");
      std::vector<std::string> names;
      auto number = [](const json& j, const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j.at(key).get<double>();
      };
      if (policies.contains("trial_based")) {
        names.emplace_back("trial");
        row.e2e_trial = number(policies["trial_based"], "end_to_end_s");
        row.gpuh_trial = number(policies["trial_based"], "gpu_hours");
      }
      if (policies.contains("stage_based")) {
        names.emplace_back("stage");
        row.e2e_stage = number(policies["stage_based"], "end_to_end_s");
        row.gpuh_stage = number(policies["stage_based"], "gpu_hours");
      }
      if (names.empty()) throw std::runtime_error("report has no policy results");
      row.policies = names.size() == 2 ? "both" : names.front();
      const json& ratios = doc.at("ratios");
      row.e2e_ratio = number(ratios, "end_to_end");
      row.gpuh_ratio = number(ratios, "gpu_hours");
      row.epochs_ratio = number(ratios, "epochs");
      result.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      result.errors.push_back(path.string() + ": " + e.what());
    }
  }
  return result;
}

namespace {

std::string cell(const std::optional<double>& v, int precision) {
  return v ? fmt::format("{:.{}f}", *v, precision) : std::string("-");
}

}  // namespace

std::string CompareResult::to_text() const {
  std::string out = fmt::format("{:<24} {:<8} {:>12} {:>12} {:>10} {:>10} {:>8} {:>8} {:>8}\n", "experiment", "policy",
                                "e2e_trial_s", "e2e_stage_s", "gpuh_trial", "gpuh_stage", "e2e_x", "gpuh_x", "epoch_x");
  for (const auto& r : rows) {
    out += fmt::format("{:<24} {:<8} {:>12} {:>12} {:>10} {:>10} {:>8} {:>8} {:>8}\n", r.experiment, r.policies,
                       cell(r.e2e_trial, 1), cell(r.e2e_stage, 1), cell(r.gpuh_trial, 4), cell(r.gpuh_stage, 4),
                       cell(r.e2e_ratio, 3), cell(r.gpuh_ratio, 3), cell(r.epochs_ratio, 3));
  }
  return out;
}

std::string CompareResult::to_csv() const {
  std::string out = "experiment,policy,e2e_trial_s,e2e_stage_s,gpu_hours_trial,gpu_hours_stage,e2e_ratio,gpu_hours_ratio,epochs_ratio\n";
  auto c = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.experiment, r.policies, c(r.e2e_trial), c(r.e2e_stage),
                       c(r.gpuh_trial), c(r.gpuh_stage), c(r.e2e_ratio), c(r.gpuh_ratio), c(r.epochs_ratio));
  }
  return out;
}

// --- gantt -------------------------------------------------------------------------

namespace {

struct Bar {
  std::int64_t stage = -1;
  std::string trial;
  int worker = -1;
  std::vector<int> gpus;
  std::int64_t parent = -1;
  std::int64_t to = 0;
  double start = 0.0;
  double end = 0.0;
  bool finished = false;
  bool oom = false;
};

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#b07aa1", "#76b7b2",
                                    "#edc948", "#9c755f", "#ff9da7", "#bab0ac", "#86bcb6"};

}  // namespace

std::string render_gantt(const std::vector<TraceRecord>& trace, const std::string& title) {
  std::vector<Bar> bars;
  std::map<std::int64_t, std::size_t> open;
  double makespan = 0.0;
  for (const auto& r : trace) {
    makespan = std::max(makespan, r.time_s);
    if (r.event == "start") {
      Bar b;
      b.stage = r.stage_id;
      b.trial = r.trial_id;
      b.worker = r.worker_id;
      b.gpus = r.gpus;
      b.parent = detail_int(r.detail, "parent", -1);
      b.start = b.end = r.time_s;
      open[r.stage_id] = bars.size();
      bars.push_back(std::move(b));
      continue;
    }
    bool aborted = r.event == "truncate" && detail_field(r.detail, "aborted");
    if (r.event != "finish" && r.event != "oom" && !aborted) continue;
    auto it = open.find(r.stage_id);
    if (it == open.end()) continue;
    Bar& b = bars[it->second];
    b.end = r.time_s;
    b.finished = r.event == "finish";
    b.oom = r.event == "oom";
    b.to = detail_int(r.detail, "to", 0);
    open.erase(it);
  }

  std::set<int> gpu_set;
  for (const auto& b : bars) gpu_set.insert(b.gpus.begin(), b.gpus.end());
  std::vector<int> rows(gpu_set.begin(), gpu_set.end());
  std::map<int, std::size_t> row_of;
  for (std::size_t i = 0; i < rows.size(); ++i) row_of[rows[i]] = i;

  constexpr double kLeft = 70.0, kTop = 40.0, kRow = 28.0, kPlot = 900.0, kBarH = 20.0;
  const double scale = makespan > 0 ? kPlot / makespan : 1.0;
  const double height = kTop + kRow * static_cast<double>(rows.size()) + 30.0;
  auto x = [&](double t) { return kLeft + t * scale; };
  auto y_mid = [&](int gpu) { return kTop + kRow * static_cast<double>(row_of.at(gpu)) + kRow / 2.0; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"monospace\" font-size=\"11\">\n",
      kLeft + kPlot + 30.0, height);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"20\">{}</text>\n", kLeft, xml_escape(title));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    svg += fmt::format("<text class=\"row\" x=\"4\" y=\"{:.2f}\">GPU {}</text>\n",
                       kTop + kRow * static_cast<double>(i) + kRow / 2.0 + 4.0, rows[i]);
  }
  for (const auto& b : bars) {
    const char* fill = b.oom ? "#dddddd" : kPalette[static_cast<std::size_t>(std::max<std::int64_t>(b.stage, 0)) % 10];
    const char* stroke = b.oom ? "#d62728" : "#333333";
    for (int g : b.gpus) {
      double y = y_mid(g) - kBarH / 2.0;
      svg += fmt::format(
          "<rect class=\"bar\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" stroke=\"{}\"><title>stage {}{}{}</title></rect>\n",
          x(b.start), y, std::max(0.5, (b.end - b.start) * scale), kBarH, fill, stroke, b.stage,
          b.trial.empty() ? "" : " trial ", xml_escape(b.trial));
    }
  }

  // Edge from each stage's last finished piece to the first finished piece
  // of every child.
  std::map<std::int64_t, const Bar*> last_finished;
  std::set<std::int64_t> seen_child;
  for (const auto& b : bars) {
    if (b.finished && (!last_finished.count(b.stage) || last_finished[b.stage]->to < b.to)) last_finished[b.stage] = &b;
  }
  for (const auto& b : bars) {
    if (!b.finished || b.parent < 0 || !seen_child.insert(b.stage).second) continue;
    auto it = last_finished.find(b.parent);
    if (it == last_finished.end() || b.gpus.empty() || it->second->gpus.empty()) continue;
    const Bar& p = *it->second;
    bool same_worker = p.worker == b.worker;
    svg += fmt::format(
        "<line class=\"{}\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
        same_worker ? "edge-solid" : "edge-dashed", x(p.end), y_mid(p.gpus.front()), x(b.start), y_mid(b.gpus.front()),
        same_worker ? "#000000" : "#d62728", same_worker ? "" : " stroke-dasharray=\"4 3\"");
  }
  svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\">0 s</text>\n", kLeft, height - 8.0);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\" text-anchor=\"end\">{:.1f} s</text>\n", kLeft + kPlot,
                     height - 8.0, makespan);
  svg += "</svg>\n";
  return svg;
}

std::string export_gantt(const std::filesystem::path& trace_path) {
  std::string csv;
  try {
    csv = read_file(trace_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedTrace, e.message());
  }
  return render_gantt(trace_from_csv(csv), trace_path.filename().string());
}

}  // namespace stagehpo
