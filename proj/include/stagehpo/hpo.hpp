#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stagehpo/hp.hpp"
#include "stagehpo/stage_tree.hpp"

namespace stagehpo {

struct RungSpec {
  std::vector<std::int64_t> rung_epochs;
  int eta = 3;
};

// Throws Error(kInvalidSpace) if rungs are not strictly increasing and below
// the horizon, or eta < 2.
void validate_rungs(const RungSpec& rungs, std::int64_t horizon);

struct PruneDecision {
  std::int64_t at_epoch = 0;
  std::set<std::string> surviving;
  std::set<std::string> stopped;
};

// Keeps the top ceil(n/eta) by accuracy; ties go to the smaller trial id.
PruneDecision sha_rung_decision(const std::map<std::string, double>& scores, int eta,
                                std::int64_t at_epoch = 0);

struct AshaParams {
  std::int64_t max_resource = 0;  // R
  std::int64_t min_resource = 0;  // r
  int eta = 3;
  int min_early_stop_rate = 0;    // s

  void validate() const;
  // r * eta^(s+k) for every k that stays below R, then R itself.
  std::vector<std::int64_t> rung_budgets() const;
};

// Rung occupancy seen by the promotion rule. `trial_ids` fixes the order in
// which new trials are started.
struct AshaState {
  struct Rung {
    std::map<std::string, double> completed;  // trial id -> accuracy at the rung budget
    std::set<std::string> promoted;
  };
  std::vector<std::string> trial_ids;
  std::size_t next_unstarted = 0;
  std::vector<Rung> rungs;  // one per budget
  std::set<std::string> finished;  // trials that cannot train any further
};

struct AshaAction {
  enum class Kind { kIdle, kStart, kPromote };
  Kind kind = Kind::kIdle;
  std::string trial_id;
  std::size_t rung = 0;  // rung the trial is sent to

  friend bool operator==(const AshaAction&, const AshaAction&) = default;
};

// Scans rungs from the top: promotes the best not-yet-promoted completed
// trial of the highest rung k with floor(|completed_k| / eta) > |promoted_k|;
// otherwise starts the next unstarted trial on rung 0; otherwise idles.
AshaAction asha_poll(const AshaState& state, const AshaParams& params);

// min over the priorities of the trials covering `stage` (lower = sooner).
// Throws Error(kMissingPriority) if a covering trial has no entry.
int stage_priority(const Stage& stage, const std::map<std::string, int, std::less<>>& trial_priorities);

enum class SamplingMode { kDiscrete, kContinuous };

// Uniform sampling from the space. Discrete mode draws axis values with
// replacement; continuous mode draws fresh values between each numeric axis'
// extremes (decimals at 6 fractional digits) and guarantees distinct first
// segments. Deterministic per seed.
std::vector<TrialSpec> random_discrete_plan(const SearchSpace& space, const ScheduleTemplate& tmpl,
                                            std::size_t n, std::uint64_t seed,
                                            SamplingMode mode = SamplingMode::kDiscrete);

}  // namespace stagehpo
