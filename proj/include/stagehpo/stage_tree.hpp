#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagehpo/hp.hpp"

namespace stagehpo {

struct StageId {
  std::uint32_t value = 0;
  friend auto operator<=>(const StageId&, const StageId&) = default;
};

struct Stage {
  StageId id;
  HpAssignment assignment;
  std::int64_t start_epoch = 0;
  std::int64_t length = 0;
  std::optional<StageId> parent;
  std::vector<StageId> children;
  std::set<std::string> covering_trials;

  std::int64_t end_epoch() const { return start_epoch + length; }
};

struct StageTreeStats {
  std::size_t stage_count = 0;
  std::int64_t stage_epochs = 0;
  std::int64_t trial_epochs = 0;
  // trial_epochs / stage_epochs, reduced.
  std::int64_t ratio_num = 0;
  std::int64_t ratio_den = 1;

  double savings_ratio() const { return static_cast<double>(ratio_num) / static_cast<double>(ratio_den); }
};

// Prefix-merged forest of stages. Roots are the children of an implicit
// virtual root with an empty assignment. Every root-to-leaf path spells out
// one inserted trial; common prefixes are stored once.
//
// Single writer: mutations need exclusive access, reads may be concurrent.
class StageTree {
 public:
  struct Insertion {
    StageId leaf;
    std::size_t new_stages = 0;
    std::size_t splits = 0;
  };

  // Throws Error(kDuplicateTrial) if the id was already inserted and
  // Error(kInvalidTrial) if the segments are not normalized.
  Insertion insert_trial(const TrialSpec& trial);

  // Splits `stage` so the first `offset` epochs keep the original id. The
  // suffix inherits children, covering trials and any trial leaves.
  // Throws Error(kInvalidSplit) unless 1 <= offset < length.
  std::pair<StageId, StageId> split_stage(StageId stage, std::int64_t offset);

  // Throws Error(kNotFound) for unknown ids.
  std::vector<Segment> reconstruct_path(StageId leaf) const;
  // Throws Error(kEmptyTree) before the first insertion.
  StageTreeStats stats() const;

  const Stage& stage(StageId id) const;
  bool contains(StageId id) const { return id.value < stages_.size(); }
  std::size_t size() const { return stages_.size(); }
  const std::vector<Stage>& stages() const { return stages_; }
  const std::vector<StageId>& roots() const { return roots_; }
  const std::map<std::string, StageId, std::less<>>& leaf_of() const { return leaf_of_; }
  std::optional<StageId> leaf_for(std::string_view trial_id) const;

  // Root-first chain of stages ending at `leaf`.
  std::vector<StageId> path_to(StageId leaf) const;

  // Id-free canonical form: nodes sorted by (start_epoch, assignment,
  // parent position). Two trees are isomorphic iff their JSON is equal.
  nlohmann::json to_json() const;

 private:
  Stage& mut(StageId id) { return stages_[id.value]; }
  StageId add_stage(const HpAssignment& a, std::int64_t start, std::int64_t length, std::optional<StageId> parent);
  std::vector<StageId>& children_of(std::optional<StageId> node);
  std::optional<StageId> child_with(std::optional<StageId> node, const HpAssignment& a) const;

  std::vector<Stage> stages_;
  std::vector<StageId> roots_;
  std::map<std::string, StageId, std::less<>> leaf_of_;
  std::int64_t trial_epochs_ = 0;
};

}  // namespace stagehpo
