#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stagehpo/hp.hpp"

namespace stagehpo::testing {

inline std::filesystem::path config_dir() { return std::filesystem::path(STAGEHPO_SOURCE_DIR) / "configs"; }

inline HpAssignment lr(const char* value) {
  HpAssignment a;
  a.set("lr", HpValue::infer(value));
  return a;
}

inline Segment seg(const char* lr_value, std::int64_t epochs) { return Segment{lr(lr_value), epochs}; }

// The four example trials whose prefix merge yields seven stages.
inline std::vector<TrialSpec> example_trials() {
  return {
      make_trial("T1", std::vector<Segment>{seg("0.1", 6), seg("0.3", 4)}, 2),
      make_trial("T2", std::vector<Segment>{seg("0.1", 4), seg("0.2", 3), seg("0.05", 3)}, 0),
      make_trial("T3", std::vector<Segment>{seg("0.1", 4), seg("0.2", 3), seg("0.02", 5)}, 1),
      make_trial("T4", std::vector<Segment>{seg("0.1", 4), seg("0.01", 8)}, 3),
  };
}

inline StudySpec example_study() {
  StudySpec s;
  s.study_id = "four_trials";
  s.model_key = "toy";
  s.dataset_key = "toy";
  s.trials = example_trials();
  s.horizon_epochs = 12;
  return s;
}

}  // namespace stagehpo::testing
