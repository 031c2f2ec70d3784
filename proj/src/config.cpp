#include "stagehpo/config.hpp"

#include <fstream>

#include "stagehpo/error.hpp"
#include "stagehpo/hpo.hpp"

namespace stagehpo {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, "field '" + field + "': " + why);
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  const json* v = member(obj, key);
  if (!v) bad(path + key, "is required");
  return *v;
}

std::int64_t as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) bad(field, "must be an integer");
  return v.get<std::int64_t>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "must be a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) bad(field, "must be a string");
  return v.get<std::string>();
}

void read_number(const json& obj, const char* key, const std::string& path, double& out) {
  if (const json* v = member(obj, key)) out = as_number(*v, path + key);
}

std::string checked_id(const json& v, const std::string& field) {
  std::string id = as_string(v, field);
  if (id.empty() || id.find_first_of(",\"\n") != std::string::npos) bad(field, "must be non-empty without commas or quotes");
  return id;
}

HpAssignment assignment_from_json(const json& obj, const std::string& field) {
  if (!obj.is_object()) bad(field, "must be an object");
  HpAssignment a;
  for (const auto& [name, value] : obj.items()) a.set(name, hp_value_from_json(value, field + "." + name));
  return a;
}

std::vector<TrialSpec> explicit_trials(const json& list, const std::string& field) {
  if (!list.is_array() || list.empty()) bad(field, "must be a non-empty array");
  std::vector<TrialSpec> trials;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = field + "[" + std::to_string(i) + "]";
    const json& t = list[i];
    std::string id = checked_id(require(t, "id", path + "."), path + ".id");
    int priority = 0;
    if (const json* p = member(t, "priority")) priority = static_cast<int>(as_int(*p, path + ".priority"));
    const json& segs = require(t, "segments", path + ".");
    if (!segs.is_array()) bad(path + ".segments", "must be an array");
    std::vector<Segment> segments;
    for (std::size_t j = 0; j < segs.size(); ++j) {
      const std::string sp = path + ".segments[" + std::to_string(j) + "]";
      segments.push_back(Segment{assignment_from_json(require(segs[j], "hp", sp + "."), sp + ".hp"),
                                 as_int(require(segs[j], "epochs", sp + "."), sp + ".epochs")});
    }
    try {
      trials.push_back(make_trial(id, segments, priority));
    } catch (const Error& e) {
      bad(path, e.message());
    }
  }
  return trials;
}

StudySpec parse_study(const json& s, std::uint64_t seed) {
  if (!s.is_object()) bad("study", "must be an object");
  StudySpec study;
  study.study_id = member(s, "id") ? checked_id(s["id"], "study.id") : "study";
  study.model_key = member(s, "model") ? as_string(s["model"], "study.model") : "model";
  study.dataset_key = member(s, "dataset") ? as_string(s["dataset"], "study.dataset") : "dataset";
  study.horizon_epochs = as_int(require(s, "horizon", "study."), "study.horizon");
  if (study.horizon_epochs < 1) bad("study.horizon", "must be >= 1");

  if (const json* trials = member(s, "trials")) {
    if (member(s, "space")) bad("study", "use either 'trials' or 'space', not both");
    study.trials = explicit_trials(*trials, "study.trials");
    for (const auto& t : study.trials) {
      if (t.total_epochs() > study.horizon_epochs) bad("study.trials", "trial '" + t.trial_id + "' exceeds the horizon");
    }
  } else {
    ScheduleTemplate tmpl;
    tmpl.horizon = study.horizon_epochs;
    if (const json* h = member(s, "scheduled_hp")) tmpl.scheduled_hp = as_string(*h, "study.scheduled_hp");
    if (const json* c = member(s, "constants")) tmpl.constants = assignment_from_json(*c, "study.constants");
    const json& space_json = require(s, "space", "study.");
    if (!space_json.is_object()) bad("study.space", "must be an object");
    SearchSpace space;
    for (const auto& [axis, values] : space_json.items()) {
      const std::string path = "study.space." + axis;
      if (!values.is_array() || values.empty()) bad(path, "must be a non-empty array");
      auto& out = space[axis];
      for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back(hp_value_from_json(values[i], path + "[" + std::to_string(i) + "]"));
      }
    }
    std::string mode = "grid";
    std::size_t n = 0;
    std::uint64_t sample_seed = seed;
    if (const json* sampling = member(s, "sampling")) {
      if (const json* m = member(*sampling, "mode")) mode = as_string(*m, "study.sampling.mode");
      if (const json* v = member(*sampling, "n")) {
        auto count = as_int(*v, "study.sampling.n");
        if (count < 1) bad("study.sampling.n", "must be >= 1");
        n = static_cast<std::size_t>(count);
      }
      if (const json* v = member(*sampling, "seed")) sample_seed = static_cast<std::uint64_t>(as_int(*v, "study.sampling.seed"));
    }
    try {
      if (mode == "grid") {
        tmpl.id_prefix = "g";
        study.trials = expand_grid(space, tmpl);
      } else if (mode == "random" || mode == "continuous") {
        if (n == 0) bad("study.sampling.n", "is required for random sampling");
        tmpl.id_prefix = "r";
        study.trials = random_discrete_plan(space, tmpl, n, sample_seed,
                                            mode == "random" ? SamplingMode::kDiscrete : SamplingMode::kContinuous);
      } else {
        bad("study.sampling.mode", "must be grid, random or continuous");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidConfig) throw;
      bad("study.space", e.message());
    }
  }
  return study;
}

AlgorithmSpec parse_algorithm(const json& a, std::int64_t horizon) {
  AlgorithmSpec spec;
  if (!a.is_object()) bad("algorithm", "must be an object");
  std::string type = as_string(require(a, "type", "algorithm."), "algorithm.type");
  if (type == "full" || type == "grid" || type == "random") {
    spec.kind = AlgorithmSpec::Kind::kFull;
  } else if (type == "sha") {
    spec.kind = AlgorithmSpec::Kind::kSha;
    const json& rungs = require(a, "rungs", "algorithm.");
    if (!rungs.is_array()) bad("algorithm.rungs", "must be an array");
    for (const auto& r : rungs) spec.sha.rung_epochs.push_back(as_int(r, "algorithm.rungs"));
    if (const json* e = member(a, "eta")) spec.sha.eta = static_cast<int>(as_int(*e, "algorithm.eta"));
    try {
      validate_rungs(spec.sha, horizon);
    } catch (const Error& e) {
      bad("algorithm.rungs", e.message());
    }
  } else if (type == "asha") {
    spec.kind = AlgorithmSpec::Kind::kAsha;
    spec.asha.max_resource = as_int(require(a, "R", "algorithm."), "algorithm.R");
    spec.asha.min_resource = as_int(require(a, "r", "algorithm."), "algorithm.r");
    if (const json* e = member(a, "eta")) spec.asha.eta = static_cast<int>(as_int(*e, "algorithm.eta"));
    if (const json* s = member(a, "s")) spec.asha.min_early_stop_rate = static_cast<int>(as_int(*s, "algorithm.s"));
    if (const json* m = member(a, "max_in_flight")) {
      auto v = as_int(*m, "algorithm.max_in_flight");
      if (v < 0) bad("algorithm.max_in_flight", "must be >= 0");
      spec.max_in_flight = static_cast<std::size_t>(v);
    }
    try {
      spec.asha.validate();
    } catch (const Error& e) {
      bad("algorithm", e.message());
    }
  } else {
    bad("algorithm.type", "must be full, sha or asha");
  }
  return spec;
}

template <typename Validate>
void checked(const std::string& field, Validate&& validate) {
  try {
    validate();
  } catch (const Error& e) {
    bad(field, e.message());
  }
}

}  // namespace

HpValue hp_value_from_json(const json& v, const std::string& field) {
  try {
    if (v.is_string()) return HpValue::infer(v.get<std::string>());
    if (v.is_number_integer()) return HpValue::integer(v.get<std::int64_t>());
    if (v.is_number_float()) return HpValue::parse(v.dump(), HpKind::kDecimal);
  } catch (const Error& e) {
    bad(field, e.message());
  }
  bad(field, "must be a string or a number");
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) bad("<root>", "must be an object");
  ExperimentConfig cfg;
  cfg.name = checked_id(require(doc, "name", ""), "name");
  if (const json* s = member(doc, "seed")) {
    auto seed = as_int(*s, "seed");
    if (seed < 0) bad("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  cfg.output_dir = member(doc, "output_dir") ? std::filesystem::path(as_string(doc["output_dir"], "output_dir"))
                                             : std::filesystem::path("out") / cfg.name;
  cfg.study = parse_study(require(doc, "study", ""), cfg.seed);
  checked("study", [&] { validate_study(cfg.study); });

  cfg.algorithm = parse_algorithm(member(doc, "algorithm") ? doc["algorithm"] : json{{"type", "full"}},
                                  cfg.study.horizon_epochs);

  if (const json* c = member(doc, "cluster")) {
    if (const json* v = member(*c, "nodes")) cfg.cluster.nodes = static_cast<int>(as_int(*v, "cluster.nodes"));
    if (const json* v = member(*c, "gpus_per_node")) {
      cfg.cluster.gpus_per_node = static_cast<int>(as_int(*v, "cluster.gpus_per_node"));
    }
    read_number(*c, "gpu_memory_mb", "cluster.", cfg.cluster.gpu_memory_mb);
  }
  checked("cluster", [&] { cfg.cluster.validate(); });

  if (const json* c = member(doc, "cost")) {
    read_number(*c, "epoch_time_s", "cost.", cfg.cost.epoch_time_s);
    read_number(*c, "scaling_exponent", "cost.", cfg.cost.scaling_exponent);
    read_number(*c, "checkpoint_load_s", "cost.", cfg.cost.checkpoint_load_s);
    read_number(*c, "container_start_s", "cost.", cfg.cost.container_start_s);
    read_number(*c, "container_destroy_s", "cost.", cfg.cost.container_destroy_s);
  }
  checked("cost", [&] { cfg.cost.validate(); });

  if (const json* s = member(doc, "surrogate")) {
    auto& p = cfg.surrogate;
    read_number(*s, "err0", "surrogate.", p.err0);
    read_number(*s, "err_min", "surrogate.", p.err_min);
    read_number(*s, "rate", "surrogate.", p.rate);
    read_number(*s, "width", "surrogate.", p.width);
    read_number(*s, "jitter", "surrogate.", p.jitter);
    read_number(*s, "lr_star_hi", "surrogate.", p.lr_star_hi);
    read_number(*s, "lr_star_lo", "surrogate.", p.lr_star_lo);
    read_number(*s, "batch_ref", "surrogate.", p.batch_ref);
    read_number(*s, "default_lr", "surrogate.", p.default_lr);
  }
  checked("surrogate", [&] { cfg.surrogate.validate(); });

  // Every segment must be trainable by the surrogate.
  for (const auto& t : cfg.study.trials) {
    for (const auto& seg : t.segments) {
      if (!seg.assignment.find(kLearningRateHp) && !seg.assignment.find(kBatchSizeHp)) {
        bad("study", "trial '" + t.trial_id + "' has a segment with neither lr nor batch_size");
      }
      for (auto key : {kLearningRateHp, kBatchSizeHp}) {
        const HpValue* v = seg.assignment.find(key);
        if (v && (!v->is_numeric() || v->as_double() <= 0)) {
          bad("study", "trial '" + t.trial_id + "': " + std::string(key) + " must be a positive number");
        }
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace stagehpo
