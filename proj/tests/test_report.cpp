#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "stagehpo/config.hpp"
#include "stagehpo/error.hpp"
#include "stagehpo/report.hpp"
#include "support.hpp"

using namespace stagehpo;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("stagehpo_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

json example_doc() { return json::parse(slurp(stagehpo::testing::config_dir() / "four_trials.json")); }

ClusterSpec one_node(int gpus) {
  ClusterSpec c;
  c.nodes = 1;
  c.gpus_per_node = gpus;
  return c;
}

// Runs parse_config on a mutated copy of the example config and returns
// the error message.
template <typename Mutate>
std::string config_error(Mutate&& mutate) {
  json doc = example_doc();
  mutate(doc);
  try {
    parse_config(doc);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
    return e.what();
  }
  FAIL("config was accepted");
  return {};
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("trace csv round-trips") {
  auto rep = simulate(stagehpo::testing::example_study(), {}, Policy::kStageBased, one_node(2), CostModel{}, {}, 0);
  std::string csv = trace_to_csv(rep.trace);
  CHECK(csv.rfind(std::string(kTraceHeader) + "\n", 0) == 0);
  auto back = trace_from_csv(csv);
  REQUIRE(back.size() == rep.trace.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].time_s == rep.trace[i].time_s);
    CHECK(back[i].event == rep.trace[i].event);
    CHECK(back[i].stage_id == rep.trace[i].stage_id);
    CHECK(back[i].trial_id == rep.trace[i].trial_id);
    CHECK(back[i].worker_id == rep.trace[i].worker_id);
    CHECK(back[i].node == rep.trace[i].node);
    CHECK(back[i].gpus == rep.trace[i].gpus);
    CHECK(back[i].detail == rep.trace[i].detail);
  }
  CHECK(trace_to_csv(back) == csv);
}

TEST_CASE("malformed traces name the line") {
  std::string csv = std::string(kTraceHeader) + "\n0,start,0,,0,0,0,from=0\nnot,a,row\n";
  try {
    trace_from_csv(csv);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedTrace);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(trace_from_csv("time,event\n"), Error);
  CHECK_THROWS_AS(trace_from_csv(std::string(kTraceHeader) + "\nx,start,0,,0,0,0,\n"), Error);
}

TEST_CASE("totals recomputed from a trace match the report") {
  for (const char* name : {"four_trials", "resnet_sha", "wideresnet_asha"}) {
    CAPTURE(name);
    auto cfg = load_config(stagehpo::testing::config_dir() / (std::string(name) + ".json"));
    auto cmp = run_comparison(cfg);
    for (const SimReport* rep : {&*cmp.trial_based, &*cmp.stage_based}) {
      auto totals = totals_from_trace(trace_from_csv(trace_to_csv(rep->trace)));
      CHECK(totals.end_to_end_s == doctest::Approx(rep->end_to_end_s).epsilon(1e-12));
      CHECK(totals.gpu_seconds == doctest::Approx(rep->gpu_seconds).epsilon(1e-9));
      CHECK(totals.epochs_trained == rep->epochs_trained);
    }
    REQUIRE(cmp.gpu_hours_ratio());
    CHECK(*cmp.gpu_hours_ratio() == cmp.trial_based->gpu_hours / cmp.stage_based->gpu_hours);
  }
}

TEST_CASE("gantt for the example tree") {
  auto rep = simulate(stagehpo::testing::example_study(), {}, Policy::kStageBased, one_node(2), CostModel{}, {}, 0);
  std::string svg = render_gantt(rep.trace, "four_trials");
  CHECK(count(svg, "<text class=\"row\"") == 2);
  CHECK(svg.find(">GPU 0<") != std::string::npos);
  CHECK(svg.find(">GPU 1<") != std::string::npos);
  CHECK(count(svg, "<rect class=\"bar\"") == 7);
  CHECK(count(svg, "class=\"edge-solid\"") + count(svg, "class=\"edge-dashed\"") == 6);
  CHECK(count(svg, "class=\"edge-solid\"") >= 1);
  CHECK(count(svg, "class=\"edge-dashed\"") >= 1);
  CHECK(render_gantt(rep.trace, "four_trials") == svg);
}

TEST_CASE("gantt for a single stage") {
  StudySpec s = stagehpo::testing::example_study();
  s.trials = {make_trial("only", std::vector<Segment>{stagehpo::testing::seg("0.1", 5)}, 0)};
  auto rep = simulate(s, {}, Policy::kStageBased, one_node(1), CostModel{}, {}, 0);
  std::string svg = render_gantt(rep.trace);
  CHECK(count(svg, "<rect class=\"bar\"") == 1);
  CHECK(count(svg, "<line") == 0);
}

TEST_CASE("gantt marks OOM attempts and multi-GPU pieces") {
  HpAssignment big = stagehpo::testing::lr("0.1");
  big.set("batch_size", HpValue::integer(16000));
  StudySpec s = stagehpo::testing::example_study();
  s.trials = {make_trial("big", std::vector<Segment>{{big, 3}}, 0)};
  auto rep = simulate(s, {}, Policy::kStageBased, one_node(3), CostModel{}, {}, 0);
  std::string svg = render_gantt(rep.trace);
  // 1 + 2 GPUs of failed attempts, then 3 for the real run.
  CHECK(count(svg, "<rect class=\"bar\"") == 6);
  CHECK(count(svg, "stroke=\"#d62728\"") == 3);
}

TEST_CASE("run_experiment writes reports, traces and charts") {
  fs::path out = scratch("run");
  RunOptions opts;
  opts.out_dir = out;
  auto cmp = run_experiment(stagehpo::testing::config_dir() / "four_trials.json", opts);
  for (const char* f : {"report.json", "trace_trial_based.csv", "trace_stage_based.csv", "gantt_trial_based.svg",
                        "gantt_stage_based.svg"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  json doc = json::parse(slurp(out / "report.json"));
  CHECK(doc["experiment"] == "four_trials");
  CHECK(doc["tree"]["stage_count"] == 7);
  CHECK(doc["tree"]["stage_epochs"] == 29);
  CHECK(doc["tree"]["trial_epochs"] == 44);
  CHECK(doc["tree"]["savings_ratio_exact"] == "44/29");
  CHECK(doc["policies"]["stage_based"]["epochs_trained"] == 29);
  CHECK(doc["policies"]["trial_based"]["epochs_trained"] == 44);
  CHECK(doc["ratios"]["epochs"].get<double>() == doctest::Approx(44.0 / 29.0));

  // Same seed, byte-identical artifacts.
  fs::path again = scratch("run_again");
  opts.out_dir = again;
  run_experiment(stagehpo::testing::config_dir() / "four_trials.json", opts);
  for (const char* f : {"report.json", "trace_stage_based.csv", "gantt_stage_based.svg"}) {
    CHECK(slurp(out / f) == slurp(again / f));
  }

  // The exported chart matches the one written by the run except for its title.
  std::string exported = export_gantt(out / "trace_stage_based.csv");
  CHECK(exported.find("trace_stage_based.csv") != std::string::npos);
  CHECK(count(exported, "<rect class=\"bar\"") == count(slurp(out / "gantt_stage_based.svg"), "<rect class=\"bar\""));
}

TEST_CASE("a seed override changes the stochastic parts only") {
  fs::path out = scratch("seed");
  RunOptions opts;
  opts.out_dir = out;
  opts.seed = 11;
  auto cmp = run_experiment(stagehpo::testing::config_dir() / "four_trials.json", opts);
  CHECK(cmp.seed == 11);
  CHECK(cmp.stage_based->epochs_trained == 29);
}

TEST_CASE("single policy runs leave ratios empty") {
  fs::path out = scratch("single");
  RunOptions opts;
  opts.out_dir = out;
  opts.policies = PolicySelection::kStage;
  auto cmp = run_experiment(stagehpo::testing::config_dir() / "four_trials.json", opts);
  CHECK_FALSE(cmp.trial_based.has_value());
  CHECK_FALSE(cmp.gpu_hours_ratio().has_value());
  CHECK(fs::exists(out / "trace_stage_based.csv"));
  CHECK_FALSE(fs::exists(out / "trace_trial_based.csv"));
}

TEST_CASE("compare tabulates several reports") {
  fs::path grid = scratch("cmp_grid"), sha = scratch("cmp_sha");
  RunOptions opts;
  opts.out_dir = grid;
  run_experiment(stagehpo::testing::config_dir() / "resnet_grid.json", opts);
  opts.out_dir = sha;
  run_experiment(stagehpo::testing::config_dir() / "resnet_sha.json", opts);
  auto result = compare({grid / "report.json", sha / "report.json", grid / "missing.json"});
  REQUIRE(result.rows.size() == 2);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].find("missing.json") != std::string::npos);
  CHECK(result.rows[0].experiment == "resnet_grid");
  CHECK(result.rows[1].experiment == "resnet_sha");
  CHECK(result.rows[0].policies == "both");
  CHECK(*result.rows[1].gpuh_stage < *result.rows[0].gpuh_stage);
  CHECK(*result.rows[1].gpuh_trial < *result.rows[0].gpuh_trial);

  std::string text = result.to_text();
  CHECK(count(text, "\n") == 3);
  std::string csv = result.to_csv();
  CHECK(csv.rfind("experiment,policy,", 0) == 0);
  CHECK(count(csv, "\n") == 3);
  CHECK(csv.find("resnet_sha,both,") != std::string::npos);
}

TEST_CASE("a single trial config has unit ratios") {
  json doc = example_doc();
  doc["study"]["trials"] = json::array({doc["study"]["trials"][0]});
  doc["cluster"]["gpus_per_node"] = 1;
  auto cmp = run_comparison(parse_config(doc));
  CHECK(*cmp.end_to_end_ratio() == 1.0);
  CHECK(*cmp.gpu_hours_ratio() == 1.0);
  CHECK(*cmp.epochs_ratio() == 1.0);
  CHECK(cmp.tree->savings_ratio() == 1.0);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error([](json& d) { d["cluster"]["nodes"] = "four"; }).find("cluster.nodes") != std::string::npos);
  CHECK(config_error([](json& d) { d["cluster"]["nodes"] = 0; }).find("cluster") != std::string::npos);
  CHECK(config_error([](json& d) { d.erase("name"); }).find("name") != std::string::npos);
  CHECK(config_error([](json& d) { d["study"]["horizon"] = -1; }).find("study.horizon") != std::string::npos);
  CHECK(config_error([](json& d) { d["algorithm"] = {{"type", "hyperband"}}; }).find("algorithm.type") !=
        std::string::npos);
  CHECK(config_error([](json& d) { d["cost"]["epoch_time_s"] = 0; }).find("cost") != std::string::npos);
  CHECK(config_error([](json& d) { d["study"]["trials"][1]["id"] = "T1"; }).find("study") != std::string::npos);
  CHECK(config_error([](json& d) { d["study"]["trials"][0]["segments"][0]["hp"]["lr"] = true; })
            .find("study.trials[0].segments[0].hp.lr") != std::string::npos);
  CHECK(config_error([](json& d) { d["study"]["trials"][0]["segments"][0]["hp"]["lr"] = "fast"; }).find("lr") !=
        std::string::npos);
  CHECK(config_error([](json& d) { d["surrogate"]["err_min"] = 2; }).find("surrogate") != std::string::npos);
}

TEST_CASE("bundled configs load") {
  for (const char* name : {"four_trials", "resnet_grid", "resnet_sha", "wideresnet_asha"}) {
    CAPTURE(name);
    auto cfg = load_config(stagehpo::testing::config_dir() / (std::string(name) + ".json"));
    CHECK(cfg.name == name);
    CHECK_FALSE(cfg.study.trials.empty());
  }
  CHECK(load_config(stagehpo::testing::config_dir() / "resnet_grid.json").study.trials.size() == 108);
  CHECK_THROWS_AS(load_config(stagehpo::testing::config_dir() / "nope.json"), Error);
}

}  // TEST_SUITE
