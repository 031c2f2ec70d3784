#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagehpo/decimal.hpp"

namespace stagehpo {

enum class HpKind { kInteger, kDecimal, kSymbol };

std::string_view to_string(HpKind kind);

// A single hyperparameter value in canonical textual form. Two values are
// equal iff their kinds and canonical texts are equal.
class HpValue {
 public:
  HpValue() = default;

  // Throws Error(kInvalidValue) when `raw` does not parse as `kind`.
  static HpValue parse(std::string_view raw, HpKind kind);
  // Picks integer / decimal / symbol from the shape of `raw`.
  static HpValue infer(std::string_view raw);
  static HpValue integer(std::int64_t v);
  static HpValue decimal(const Decimal& d);
  static HpValue symbol(std::string_view s);

  HpKind kind() const { return kind_; }
  const std::string& text() const { return text_; }
  bool is_numeric() const { return kind_ != HpKind::kSymbol; }
  Decimal as_decimal() const;
  double as_double() const;

  friend bool operator==(const HpValue&, const HpValue&) = default;
  friend auto operator<=>(const HpValue&, const HpValue&) = default;

 private:
  HpValue(HpKind kind, std::string text) : kind_(kind), text_(std::move(text)) {}

  HpKind kind_ = HpKind::kSymbol;
  std::string text_;
};

HpValue canonicalize_value(std::string_view raw, HpKind kind);

// Numeric product with exact decimal arithmetic. Integers stay integers when
// the product is integral.
HpValue scale_value(const HpValue& value, const Decimal& factor);

// Name-sorted mapping from hyperparameter name to value.
class HpAssignment {
 public:
  using Map = std::map<std::string, HpValue, std::less<>>;

  HpAssignment() = default;
  explicit HpAssignment(Map entries) : entries_(std::move(entries)) {}

  void set(std::string name, HpValue value) { entries_.insert_or_assign(std::move(name), std::move(value)); }
  const HpValue* find(std::string_view name) const;
  const Map& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  // "a=1,b=0.5" in name order; also the hashing key.
  std::string to_string() const;

  friend bool operator==(const HpAssignment&, const HpAssignment&) = default;
  friend auto operator<=>(const HpAssignment&, const HpAssignment&) = default;

 private:
  Map entries_;
};

struct Segment {
  HpAssignment assignment;
  std::int64_t epochs = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct TrialSpec {
  std::string trial_id;
  std::vector<Segment> segments;
  int priority = 0;

  std::int64_t total_epochs() const;
};

struct StudySpec {
  std::string study_id;
  std::string model_key;
  std::string dataset_key;
  std::vector<TrialSpec> trials;
  std::int64_t horizon_epochs = 0;
};

// Throws Error(kInvalidTrial) when trial ids repeat or a trial is malformed.
void validate_study(const StudySpec& study);

// Merges adjacent equal-assignment segments. Throws Error(kInvalidTrial) on
// an empty list, a zero/negative epoch count, or an empty assignment.
std::vector<Segment> normalize_segments(std::span<const Segment> segments);
TrialSpec make_trial(std::string trial_id, std::span<const Segment> segments, int priority = 0);

// Expands a segment list into one assignment per epoch.
std::vector<HpAssignment> flatten_segments(std::span<const Segment> segments);

struct ScheduleParams {
  std::string hp_name;
  HpValue initial;
  Decimal factor;
  std::vector<std::int64_t> change_epochs;  // period lengths, not absolute epochs
  std::int64_t horizon = 0;
  HpAssignment constants;
};

std::vector<Segment> expand_step_schedule(const ScheduleParams& params);

// Axis names with a schedule role when `scheduled_hp` is set: "initial",
// "factor" and "period<N>" (ordered by N). Every other axis is a plain
// hyperparameter held constant for the whole trial.
struct ScheduleTemplate {
  std::optional<std::string> scheduled_hp;
  std::int64_t horizon = 0;
  HpAssignment constants;
  std::string id_prefix = "t";
};

using SearchSpace = std::map<std::string, std::vector<HpValue>, std::less<>>;

// Resolves one point of the space (one value per axis) into a trial.
std::vector<Segment> segments_for_point(const std::map<std::string, HpValue, std::less<>>& point,
                                        const ScheduleTemplate& tmpl);

// Cartesian product in lexicographic order over sorted axis names, first
// axis varying slowest. Throws Error(kInvalidSpace) on an empty axis.
std::vector<TrialSpec> expand_grid(const SearchSpace& space, const ScheduleTemplate& tmpl);

// Zero-padded id so lexicographic order follows numeric order.
std::string make_trial_id(std::string_view prefix, std::size_t index, std::size_t count);

}  // namespace stagehpo
