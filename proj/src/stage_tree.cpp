#include "stagehpo/stage_tree.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "stagehpo/error.hpp"

namespace stagehpo {

const Stage& StageTree::stage(StageId id) const {
  if (!contains(id)) throw Error(ErrorCode::kNotFound, "unknown stage " + std::to_string(id.value));
  return stages_[id.value];
}

std::optional<StageId> StageTree::leaf_for(std::string_view trial_id) const {
  auto it = leaf_of_.find(trial_id);
  if (it == leaf_of_.end()) return std::nullopt;
  return it->second;
}

StageId StageTree::add_stage(const HpAssignment& a, std::int64_t start, std::int64_t length,
                             std::optional<StageId> parent) {
  StageId id{static_cast<std::uint32_t>(stages_.size())};
  Stage s;
  s.id = id;
  s.assignment = a;
  s.start_epoch = start;
  s.length = length;
  s.parent = parent;
  stages_.push_back(std::move(s));
  children_of(parent).push_back(id);
  return id;
}

std::vector<StageId>& StageTree::children_of(std::optional<StageId> node) {
  return node ? mut(*node).children : roots_;
}

std::optional<StageId> StageTree::child_with(std::optional<StageId> node, const HpAssignment& a) const {
  const auto& kids = node ? stages_[node->value].children : roots_;
  for (StageId c : kids) {
    if (stages_[c.value].assignment == a) return c;
  }
  return std::nullopt;
}

std::pair<StageId, StageId> StageTree::split_stage(StageId id, std::int64_t offset) {
  const Stage& original = stage(id);
  if (offset < 1 || offset >= original.length) {
    throw Error(ErrorCode::kInvalidSplit, "offset " + std::to_string(offset) + " outside [1, " +
                                              std::to_string(original.length) + ")");
  }
  StageId suffix{static_cast<std::uint32_t>(stages_.size())};
  Stage tail;
  tail.id = suffix;
  tail.assignment = original.assignment;
  tail.start_epoch = original.start_epoch + offset;
  tail.length = original.length - offset;
  tail.parent = id;
  tail.children = original.children;
  tail.covering_trials = original.covering_trials;
  stages_.push_back(std::move(tail));

  Stage& head = mut(id);
  head.length = offset;
  head.children = {suffix};
  for (StageId c : stages_[suffix.value].children) mut(c).parent = suffix;
  for (auto& [trial, leaf] : leaf_of_) {
    if (leaf == id) leaf = suffix;
  }
  return {id, suffix};
}

StageTree::Insertion StageTree::insert_trial(const TrialSpec& trial) {
  if (leaf_of_.count(trial.trial_id)) {
    throw Error(ErrorCode::kDuplicateTrial, "trial '" + trial.trial_id + "' already inserted");
  }
  if (normalize_segments(trial.segments).size() != trial.segments.size()) {
    throw Error(ErrorCode::kInvalidTrial, "trial '" + trial.trial_id + "' is not normalized");
  }

  Insertion result;
  std::optional<StageId> node;
  std::int64_t epoch = 0;
  std::vector<StageId> path;
  std::size_t i = 0;
  std::int64_t remaining = trial.segments.empty() ? 0 : trial.segments[0].epochs;

  while (i < trial.segments.size()) {
    const Segment& seg = trial.segments[i];
    auto match = child_with(node, seg.assignment);
    if (!match) break;
    std::int64_t len = stages_[match->value].length;
    if (len > remaining) {
      split_stage(*match, remaining);
      ++result.splits;
      len = remaining;
    }
    node = match;
    path.push_back(*match);
    epoch += len;
    remaining -= len;
    if (remaining == 0 && ++i < trial.segments.size()) remaining = trial.segments[i].epochs;
  }
  // Unmatched tail becomes a fresh chain.
  while (i < trial.segments.size()) {
    node = add_stage(trial.segments[i].assignment, epoch, remaining, node);
    path.push_back(*node);
    ++result.new_stages;
    epoch += remaining;
    if (++i < trial.segments.size()) remaining = trial.segments[i].epochs;
  }

  for (StageId s : path) mut(s).covering_trials.insert(trial.trial_id);
  result.leaf = *node;
  leaf_of_.emplace(trial.trial_id, *node);
  trial_epochs_ += trial.total_epochs();
  return result;
}

std::vector<StageId> StageTree::path_to(StageId leaf) const {
  std::vector<StageId> path;
  std::optional<StageId> cur = stage(leaf).id;
  while (cur) {
    path.push_back(*cur);
    cur = stages_[cur->value].parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Segment> StageTree::reconstruct_path(StageId leaf) const {
  std::vector<Segment> segments;
  for (StageId s : path_to(leaf)) {
    const Stage& st = stages_[s.value];
    segments.push_back(Segment{st.assignment, st.length});
  }
  return segments;
}

StageTreeStats StageTree::stats() const {
  if (leaf_of_.empty()) throw Error(ErrorCode::kEmptyTree, "no trials inserted");
  StageTreeStats st;
  st.stage_count = stages_.size();
  for (const auto& s : stages_) st.stage_epochs += s.length;
  st.trial_epochs = trial_epochs_;
  std::int64_t g = std::gcd(st.trial_epochs, st.stage_epochs);
  st.ratio_num = st.trial_epochs / g;
  st.ratio_den = st.stage_epochs / g;
  return st;
}

nlohmann::json StageTree::to_json() const {
  std::vector<std::uint32_t> order(stages_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::string> keys(stages_.size());
  for (const auto& s : stages_) keys[s.id.value] = s.assignment.to_string();

  // Parents start strictly earlier, so ranking whole start-epoch groups in
  // ascending order always has parent positions available.
  std::vector<std::int64_t> position(stages_.size(), -1);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return stages_[a].start_epoch < stages_[b].start_epoch; });
  std::size_t next = 0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi < order.size() && stages_[order[hi]].start_epoch == stages_[order[lo]].start_epoch) ++hi;
    auto parent_pos = [&](std::uint32_t s) {
      return stages_[s].parent ? position[stages_[s].parent->value] : std::int64_t{-1};
    };
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi),
              [&](auto a, auto b) {
                return std::forward_as_tuple(keys[a], stages_[a].length, parent_pos(a)) <
                       std::forward_as_tuple(keys[b], stages_[b].length, parent_pos(b));
              });
    for (std::size_t k = lo; k < hi; ++k) position[order[k]] = static_cast<std::int64_t>(next++);
    lo = hi;
  }

  nlohmann::json nodes = nlohmann::json::array();
  for (auto idx : order) {
    const Stage& s = stages_[idx];
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& [name, value] : s.assignment.entries()) assignment[name] = value.text();
    nodes.push_back({
        {"index", position[idx]},
        {"parent", s.parent ? nlohmann::json(position[s.parent->value]) : nlohmann::json(nullptr)},
        {"assignment", assignment},
        {"start_epoch", s.start_epoch},
        {"length", s.length},
        {"trials", std::vector<std::string>(s.covering_trials.begin(), s.covering_trials.end())},
    });
  }
  return nlohmann::json{{"stages", nodes}};
}

}  // namespace stagehpo
