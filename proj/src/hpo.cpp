#include "stagehpo/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stagehpo/error.hpp"

namespace stagehpo {

void validate_rungs(const RungSpec& rungs, std::int64_t horizon) {
  if (rungs.eta < 2) throw Error(ErrorCode::kInvalidSpace, "eta must be >= 2");
  std::int64_t prev = 0;
  for (auto r : rungs.rung_epochs) {
    if (r <= prev || r >= horizon) {
      throw Error(ErrorCode::kInvalidSpace, "rung epochs must be strictly increasing, positive and below the horizon");
    }
    prev = r;
  }
}

PruneDecision sha_rung_decision(const std::map<std::string, double>& scores, int eta, std::int64_t at_epoch) {
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  // std::map iteration is already ascending by id, so a stable sort on
  // accuracy alone breaks ties toward the smaller id.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t keep = (ranked.size() + static_cast<std::size_t>(eta) - 1) / static_cast<std::size_t>(eta);
  PruneDecision decision;
  decision.at_epoch = at_epoch;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    (i < keep ? decision.surviving : decision.stopped).insert(ranked[i].first);
  }
  return decision;
}

void AshaParams::validate() const {
  if (eta < 2) throw Error(ErrorCode::kInvalidSpace, "ASHA eta must be >= 2");
  if (min_resource < 1 || max_resource < 1) throw Error(ErrorCode::kInvalidSpace, "ASHA resources must be >= 1");
  if (min_early_stop_rate < 0) throw Error(ErrorCode::kInvalidSpace, "ASHA s must be >= 0");
  double smallest = static_cast<double>(min_resource) * std::pow(eta, min_early_stop_rate);
  if (static_cast<double>(max_resource) < smallest) {
    throw Error(ErrorCode::kInvalidSpace, "ASHA requires R >= r * eta^s");
  }
}

std::vector<std::int64_t> AshaParams::rung_budgets() const {
  validate();
  std::vector<std::int64_t> budgets;
  std::int64_t b = min_resource;
  for (int i = 0; i < min_early_stop_rate; ++i) b *= eta;
  while (b < max_resource) {
    budgets.push_back(b);
    b *= eta;
  }
  budgets.push_back(max_resource);
  return budgets;
}

AshaAction asha_poll(const AshaState& state, const AshaParams& params) {
  const auto eta = static_cast<std::size_t>(params.eta);
  for (std::size_t k = state.rungs.size(); k-- > 1;) {
    const auto& below = state.rungs[k - 1];
    if (below.completed.size() / eta <= below.promoted.size()) continue;
    const std::string* best = nullptr;
    double best_acc = 0.0;
    for (const auto& [id, acc] : below.completed) {
      if (below.promoted.count(id) || state.finished.count(id)) continue;
      if (!best || acc > best_acc) {
        best = &id;
        best_acc = acc;
      }
    }
    if (best) return AshaAction{AshaAction::Kind::kPromote, *best, k};
  }
  if (state.next_unstarted < state.trial_ids.size()) {
    return AshaAction{AshaAction::Kind::kStart, state.trial_ids[state.next_unstarted], 0};
  }
  return AshaAction{};
}

int stage_priority(const Stage& stage, const std::map<std::string, int, std::less<>>& trial_priorities) {
  if (stage.covering_trials.empty()) {
    throw Error(ErrorCode::kMissingPriority, "stage " + std::to_string(stage.id.value) + " has no covering trials");
  }
  int best = 0;
  bool first = true;
  for (const auto& t : stage.covering_trials) {
    auto it = trial_priorities.find(t);
    if (it == trial_priorities.end()) throw Error(ErrorCode::kMissingPriority, "no priority for trial '" + t + "'");
    best = first ? it->second : std::min(best, it->second);
    first = false;
  }
  return best;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

HpValue draw_continuous(const std::vector<HpValue>& values, std::mt19937_64& rng) {
  bool numeric = std::all_of(values.begin(), values.end(), [](const HpValue& v) { return v.is_numeric(); });
  if (!numeric) return values[bounded(rng, values.size())];
  auto [lo, hi] = std::minmax_element(values.begin(), values.end(),
                                      [](const HpValue& a, const HpValue& b) { return a.as_decimal() < b.as_decimal(); });
  bool integral = std::all_of(values.begin(), values.end(), [](const HpValue& v) { return v.kind() == HpKind::kInteger; });
  // Four decimals keeps products of several draws inside the exact
  // decimal range.
  constexpr double kUnit = 1e4;
  double unit = integral ? 1.0 : kUnit;
  auto low = static_cast<std::int64_t>(std::llround(lo->as_double() * unit));
  auto high = static_cast<std::int64_t>(std::llround(hi->as_double() * unit));
  auto k = low + static_cast<std::int64_t>(bounded(rng, static_cast<std::uint64_t>(high - low + 1)));
  if (integral) return HpValue::integer(k);
  return HpValue::decimal(Decimal::from_int(k) * Decimal::parse("0.0001"));
}

}  // namespace

std::vector<TrialSpec> random_discrete_plan(const SearchSpace& space, const ScheduleTemplate& tmpl, std::size_t n,
                                            std::uint64_t seed, SamplingMode mode) {
  if (n < 1) throw Error(ErrorCode::kInvalidSpace, "random plan needs n >= 1");
  for (const auto& [axis, values] : space) {
    if (values.empty()) throw Error(ErrorCode::kInvalidSpace, "axis '" + axis + "' is empty");
  }
  std::mt19937_64 rng(seed);
  std::vector<TrialSpec> trials;
  std::set<HpAssignment> first_segments;
  constexpr int kMaxRedraws = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      std::map<std::string, HpValue, std::less<>> point;
      for (const auto& [axis, values] : space) {
        point.emplace(axis, mode == SamplingMode::kDiscrete ? values[bounded(rng, values.size())]
                                                            : draw_continuous(values, rng));
      }
      auto segments = segments_for_point(point, tmpl);
      if (mode == SamplingMode::kContinuous && !first_segments.insert(segments.front().assignment).second) {
        if (attempt >= kMaxRedraws) {
          throw Error(ErrorCode::kInvalidSpace, "continuous sampling cannot produce distinct first segments");
        }
        continue;
      }
      trials.push_back(TrialSpec{make_trial_id(tmpl.id_prefix, i, n), std::move(segments), 0});
      break;
    }
  }
  return trials;
}

}  // namespace stagehpo
