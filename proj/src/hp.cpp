#include "stagehpo/hp.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "stagehpo/error.hpp"

namespace stagehpo {

std::string_view to_string(HpKind kind) {
  switch (kind) {
    case HpKind::kInteger: return "integer";
    case HpKind::kDecimal: return "decimal";
    case HpKind::kSymbol: return "symbol";
  }
  return "?";
}

namespace {

bool looks_like_integer(std::string_view s) {
  std::size_t i = (!s.empty() && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
  if (i >= s.size()) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool valid_symbol(std::string_view s) {
  if (s.empty()) return false;
  return std::none_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '=' || c == ';' ||
           c == '"';
  });
}

}  // namespace

HpValue HpValue::parse(std::string_view raw, HpKind kind) {
  switch (kind) {
    case HpKind::kInteger: {
      Decimal d = Decimal::parse(raw);
      if (!d.is_integer()) {
        throw Error(ErrorCode::kInvalidValue, "not an integer: '" + std::string(raw) + "'");
      }
      return HpValue(kind, d.to_string());
    }
    case HpKind::kDecimal:
      return HpValue(kind, Decimal::parse(raw).to_string());
    case HpKind::kSymbol:
      if (!valid_symbol(raw)) {
        throw Error(ErrorCode::kInvalidValue, "not a symbol: '" + std::string(raw) + "'");
      }
      return HpValue(kind, std::string(raw));
  }
  throw Error(ErrorCode::kInvalidValue, "unknown kind");
}

HpValue HpValue::infer(std::string_view raw) {
  if (looks_like_integer(raw)) return parse(raw, HpKind::kInteger);
  try {
    return parse(raw, HpKind::kDecimal);
  } catch (const Error&) {
    return parse(raw, HpKind::kSymbol);
  }
}

HpValue HpValue::integer(std::int64_t v) { return HpValue(HpKind::kInteger, std::to_string(v)); }
HpValue HpValue::decimal(const Decimal& d) { return HpValue(HpKind::kDecimal, d.to_string()); }
HpValue HpValue::symbol(std::string_view s) { return parse(s, HpKind::kSymbol); }

Decimal HpValue::as_decimal() const {
  if (!is_numeric()) {
    throw Error(ErrorCode::kInvalidValue, "symbol '" + text_ + "' has no numeric value");
  }
  return Decimal::parse(text_);
}

double HpValue::as_double() const { return as_decimal().to_double(); }

HpValue canonicalize_value(std::string_view raw, HpKind kind) { return HpValue::parse(raw, kind); }

HpValue scale_value(const HpValue& value, const Decimal& factor) {
  Decimal product = value.as_decimal() * factor;
  if (value.kind() == HpKind::kInteger && product.is_integer()) {
    return HpValue::parse(product.to_string(), HpKind::kInteger);
  }
  return HpValue::decimal(product);
}

const HpValue* HpAssignment::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string HpAssignment::to_string() const {
  std::string out;
  for (const auto& [name, value] : entries_) {
    if (!out.empty()) out += ',';
    out += name;
    out += '=';
    out += value.text();
  }
  return out;
}

std::int64_t TrialSpec::total_epochs() const {
  std::int64_t total = 0;
  for (const auto& s : segments) total += s.epochs;
  return total;
}

std::vector<Segment> normalize_segments(std::span<const Segment> segments) {
  if (segments.empty()) throw Error(ErrorCode::kInvalidTrial, "trial has no segments");
  std::vector<Segment> out;
  for (const auto& seg : segments) {
    if (seg.epochs < 1) throw Error(ErrorCode::kInvalidTrial, "segment epochs must be >= 1");
    if (seg.assignment.empty()) throw Error(ErrorCode::kInvalidTrial, "segment assignment is empty");
    if (!out.empty() && out.back().assignment == seg.assignment) {
      out.back().epochs += seg.epochs;
    } else {
      out.push_back(seg);
    }
  }
  return out;
}

TrialSpec make_trial(std::string trial_id, std::span<const Segment> segments, int priority) {
  if (trial_id.empty()) throw Error(ErrorCode::kInvalidTrial, "empty trial id");
  return TrialSpec{std::move(trial_id), normalize_segments(segments), priority};
}

void validate_study(const StudySpec& study) {
  std::set<std::string, std::less<>> seen;
  for (const auto& t : study.trials) {
    if (!seen.insert(t.trial_id).second) {
      throw Error(ErrorCode::kDuplicateTrial, "trial id '" + t.trial_id + "' repeats in study '" +
                                                  study.study_id + "'");
    }
    auto normalized = normalize_segments(t.segments);
    if (normalized.size() != t.segments.size()) {
      throw Error(ErrorCode::kInvalidTrial, "trial '" + t.trial_id + "' is not normalized");
    }
  }
}

std::vector<HpAssignment> flatten_segments(std::span<const Segment> segments) {
  std::vector<HpAssignment> out;
  for (const auto& seg : segments) {
    out.insert(out.end(), static_cast<std::size_t>(seg.epochs), seg.assignment);
  }
  return out;
}

std::vector<Segment> expand_step_schedule(const ScheduleParams& params) {
  if (params.change_epochs.empty()) throw Error(ErrorCode::kInvalidSpace, "schedule needs at least one period");
  if (params.horizon < 1) throw Error(ErrorCode::kInvalidSpace, "schedule horizon must be >= 1");
  if (params.factor <= Decimal::from_int(0) || params.factor == Decimal::from_int(1)) {
    throw Error(ErrorCode::kInvalidSpace, "schedule factor must be positive and != 1");
  }
  for (auto p : params.change_epochs) {
    if (p < 1) throw Error(ErrorCode::kInvalidSpace, "schedule periods must be >= 1");
  }

  auto segment_for = [&](const HpValue& v, std::int64_t epochs) {
    HpAssignment a = params.constants;
    a.set(params.hp_name, v);
    return Segment{std::move(a), epochs};
  };

  std::vector<Segment> out;
  HpValue value = params.initial;
  std::int64_t used = 0;
  for (auto period : params.change_epochs) {
    std::int64_t len = std::min(period, params.horizon - used);
    if (len <= 0) break;
    out.push_back(segment_for(value, len));
    used += len;
    value = scale_value(value, params.factor);
  }
  if (params.horizon - used > 0) out.push_back(segment_for(value, params.horizon - used));
  return normalize_segments(out);
}

namespace {

std::optional<std::int64_t> period_index(std::string_view axis) {
  constexpr std::string_view kPrefix = "period";
  if (axis.substr(0, kPrefix.size()) != kPrefix || axis.size() == kPrefix.size()) return std::nullopt;
  auto rest = axis.substr(kPrefix.size());
  if (!std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return std::nullopt;
  }
  return std::stoll(std::string(rest));
}

}  // namespace

std::vector<Segment> segments_for_point(const std::map<std::string, HpValue, std::less<>>& point,
                                        const ScheduleTemplate& tmpl) {
  if (tmpl.horizon < 1) throw Error(ErrorCode::kInvalidSpace, "horizon must be >= 1");
  HpAssignment constants = tmpl.constants;
  if (!tmpl.scheduled_hp) {
    for (const auto& [axis, value] : point) constants.set(axis, value);
    return normalize_segments(std::vector<Segment>{Segment{constants, tmpl.horizon}});
  }

  ScheduleParams params;
  params.hp_name = *tmpl.scheduled_hp;
  params.horizon = tmpl.horizon;
  std::optional<HpValue> initial;
  std::optional<Decimal> factor;
  std::vector<std::pair<std::int64_t, std::int64_t>> periods;
  for (const auto& [axis, value] : point) {
    if (axis == "initial") {
      initial = value;
    } else if (axis == "factor") {
      factor = value.as_decimal();
    } else if (auto idx = period_index(axis)) {
      Decimal d = value.as_decimal();
      if (!d.is_integer() || d.mantissa() < 1) {
        throw Error(ErrorCode::kInvalidSpace, "axis '" + axis + "' needs positive integer periods");
      }
      periods.emplace_back(*idx, d.mantissa());
    } else {
      constants.set(axis, value);
    }
  }
  if (!initial) {
    if (const HpValue* v = tmpl.constants.find(params.hp_name)) initial = *v;
  }
  if (!initial || !initial->is_numeric()) {
    throw Error(ErrorCode::kInvalidSpace, "scheduled hp '" + params.hp_name + "' needs a numeric 'initial' axis");
  }
  if (!factor) throw Error(ErrorCode::kInvalidSpace, "scheduled hp needs a 'factor' axis");
  std::sort(periods.begin(), periods.end());
  for (const auto& p : periods) params.change_epochs.push_back(p.second);
  params.initial = *initial;
  params.factor = *factor;
  params.constants = std::move(constants);
  return expand_step_schedule(params);
}

std::string make_trial_id(std::string_view prefix, std::size_t index, std::size_t count) {
  std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

std::vector<TrialSpec> expand_grid(const SearchSpace& space, const ScheduleTemplate& tmpl) {
  std::vector<const std::pair<const std::string, std::vector<HpValue>>*> axes;
  std::size_t total = 1;
  for (const auto& axis : space) {
    if (axis.second.empty()) throw Error(ErrorCode::kInvalidSpace, "axis '" + axis.first + "' is empty");
    axes.push_back(&axis);
    total *= axis.second.size();
  }

  std::vector<TrialSpec> trials;
  trials.reserve(total);
  std::vector<std::size_t> odometer(axes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::map<std::string, HpValue, std::less<>> point;
    for (std::size_t a = 0; a < axes.size(); ++a) point.emplace(axes[a]->first, axes[a]->second[odometer[a]]);
    trials.push_back(TrialSpec{make_trial_id(tmpl.id_prefix, n, total), segments_for_point(point, tmpl), 0});
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++odometer[a] < axes[a]->second.size()) break;
      odometer[a] = 0;
    }
  }
  return trials;
}

}  // namespace stagehpo
