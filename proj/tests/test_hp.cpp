#include <algorithm>
#include <random>
#include <set>
#include <string>

#include <doctest.h>

#include "stagehpo/error.hpp"
#include "stagehpo/hp.hpp"
#include "support.hpp"
#include "tree_oracle.hpp"

using namespace stagehpo;
using stagehpo::testing::lr;
using stagehpo::testing::oracle_product;
using stagehpo::testing::seg;

namespace {

ScheduleParams schedule(const char* hp, const char* initial, const char* factor, std::vector<std::int64_t> periods,
                        std::int64_t horizon) {
  ScheduleParams p;
  p.hp_name = hp;
  p.initial = HpValue::infer(initial);
  p.factor = Decimal::parse(factor);
  p.change_epochs = std::move(periods);
  p.horizon = horizon;
  return p;
}

std::vector<std::pair<std::string, std::int64_t>> runs(const std::vector<Segment>& segs, const char* hp) {
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const auto& s : segs) out.emplace_back(s.assignment.find(hp)->text(), s.epochs);
  return out;
}

using Runs = std::vector<std::pair<std::string, std::int64_t>>;

}  // namespace

TEST_SUITE("hp") {

TEST_CASE("canonical decimal forms") {
  CHECK(canonicalize_value("0.10", HpKind::kDecimal).text() == "0.1");
  CHECK(canonicalize_value("0.1", HpKind::kDecimal) == canonicalize_value("0.10", HpKind::kDecimal));
  CHECK(canonicalize_value("128", HpKind::kInteger).text() == "128");
  CHECK(canonicalize_value("1e-4", HpKind::kDecimal).text() == "0.0001");
  CHECK(canonicalize_value("-0.0", HpKind::kDecimal).text() == "0");
  CHECK(canonicalize_value("2.50E1", HpKind::kDecimal).text() == "25");
  CHECK(canonicalize_value("sgd", HpKind::kSymbol).text() == "sgd");

  for (const char* raw : {"0.10", "3", "1e-4", "007.250", "-12.5"}) {
    HpValue once = canonicalize_value(raw, HpKind::kDecimal);
    CHECK(canonicalize_value(once.text(), HpKind::kDecimal) == once);
  }
}

TEST_CASE("unparseable values are rejected") {
  for (auto [raw, kind] : {std::pair{"abc", HpKind::kDecimal}, {"1.5", HpKind::kInteger}, {"", HpKind::kDecimal},
                           {"1.2.3", HpKind::kDecimal}, {"1e", HpKind::kDecimal}, {"", HpKind::kSymbol}}) {
    CAPTURE(raw);
    try {
      canonicalize_value(raw, kind);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidValue);
    }
  }
}

TEST_CASE("infer picks the kind from the text") {
  CHECK(HpValue::infer("128").kind() == HpKind::kInteger);
  CHECK(HpValue::infer("0.5").kind() == HpKind::kDecimal);
  CHECK(HpValue::infer("sgd").kind() == HpKind::kSymbol);
}

TEST_CASE("repeated decay by 0.2 stays exact") {
  const std::string expected = oracle_product(oracle_product("0.5", "0.2"), "0.2");
  REQUIRE(expected == "0.02");
  HpValue v = HpValue::infer("0.5");
  v = scale_value(v, Decimal::parse("0.2"));
  v = scale_value(v, Decimal::parse("0.2"));
  CHECK(v.text() == expected);
  CHECK(v == HpValue::infer("0.020"));
}

TEST_CASE("decimal multiplication agrees with a digit-string oracle") {
  std::mt19937_64 rng(7);
  auto random_decimal = [&] {
    std::uniform_int_distribution<int> int_digits(0, 4), frac_digits(0, 5), digit(0, 9);
    std::string s;
    int n = int_digits(rng);
    for (int i = 0; i < n; ++i) s += static_cast<char>('0' + digit(rng));
    if (s.empty()) s = "0";
    int f = frac_digits(rng);
    if (f > 0) {
      s += '.';
      for (int i = 0; i < f; ++i) s += static_cast<char>('0' + digit(rng));
    }
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    std::string a = random_decimal(), b = random_decimal();
    CAPTURE(a);
    CAPTURE(b);
    CHECK((Decimal::parse(a) * Decimal::parse(b)).to_string() == oracle_product(a, b));
  }
}

TEST_CASE("integers stay integers when the product is integral") {
  CHECK(scale_value(HpValue::integer(128), Decimal::from_int(5)) == HpValue::integer(640));
  CHECK(scale_value(HpValue::integer(128), Decimal::parse("0.5")).kind() == HpKind::kInteger);
  CHECK(scale_value(HpValue::integer(5), Decimal::parse("0.5")).text() == "2.5");
}

TEST_CASE("assignments compare independent of insertion order") {
  HpAssignment a, b;
  a.set("lr", HpValue::infer("0.1"));
  a.set("batch_size", HpValue::infer("128"));
  b.set("batch_size", HpValue::infer("128"));
  b.set("lr", HpValue::infer("0.10"));
  CHECK(a == b);
  CHECK(a.to_string() == "batch_size=128,lr=0.1");
}

TEST_CASE("normalize_segments merges adjacent equal runs") {
  auto merged = normalize_segments(std::vector<Segment>{seg("0.1", 4), seg("0.1", 2), seg("0.3", 4)});
  CHECK(merged == std::vector<Segment>{seg("0.1", 6), seg("0.3", 4)});
  CHECK(normalize_segments(std::vector<Segment>{seg("0.1", 6)}) == std::vector<Segment>{seg("0.1", 6)});

  // Non-adjacent equal runs stay apart.
  auto kept = normalize_segments(std::vector<Segment>{seg("0.1", 1), seg("0.2", 1), seg("0.1", 1)});
  CHECK(kept.size() == 3);
}

TEST_CASE("normalize_segments rejects malformed input") {
  auto expect_invalid = [](std::vector<Segment> segs) {
    try {
      normalize_segments(segs);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidTrial);
    }
  };
  expect_invalid({});
  expect_invalid({seg("0.1", 0)});
  expect_invalid({seg("0.1", -3)});
  expect_invalid({Segment{HpAssignment{}, 4}});
}

TEST_CASE("normalization preserves the per-epoch sequence") {
  std::mt19937_64 rng(11);
  const char* values[] = {"0.1", "0.2", "0.3"};
  for (int round = 0; round < 200; ++round) {
    std::vector<Segment> raw;
    std::uniform_int_distribution<int> count(1, 8), pick(0, 2), len(1, 5);
    int n = count(rng);
    for (int i = 0; i < n; ++i) raw.push_back(seg(values[pick(rng)], len(rng)));
    auto norm = normalize_segments(raw);
    CHECK(flatten_segments(norm) == flatten_segments(raw));
    for (std::size_t i = 1; i < norm.size(); ++i) CHECK(norm[i].assignment != norm[i - 1].assignment);
  }
}

TEST_CASE("step decay schedules") {
  CHECK(runs(expand_step_schedule(schedule("lr", "0.5", "0.2", {40, 60, 80}, 200)), "lr") ==
        Runs{{"0.5", 40}, {"0.1", 60}, {"0.02", 80}, {"0.004", 20}});
  CHECK(runs(expand_step_schedule(schedule("lr", "0.5", "0.2", {80, 80, 80}, 200)), "lr") ==
        Runs{{"0.5", 80}, {"0.1", 80}, {"0.02", 40}});
  CHECK(runs(expand_step_schedule(schedule("batch_size", "128", "5", {30, 60, 60}, 216)), "batch_size") ==
        Runs{{"128", 30}, {"640", 60}, {"3200", 60}, {"16000", 66}});
  // Periods that end exactly at the horizon leave no empty tail.
  CHECK(runs(expand_step_schedule(schedule("lr", "0.5", "0.1", {50, 50}, 100)), "lr") ==
        Runs{{"0.5", 50}, {"0.05", 50}});
}

TEST_CASE("step schedule equals normalizing its per-epoch list") {
  auto params = schedule("lr", "0.5", "0.2", {40, 60, 80}, 200);
  // Independent per-epoch construction: the value changes after each
  // cumulative period boundary.
  std::vector<Segment> per_epoch;
  const char* values[] = {"0.5", "0.1", "0.02", "0.004"};
  const std::int64_t bounds[] = {40, 100, 180};
  for (std::int64_t e = 0; e < 200; ++e) {
    int idx = static_cast<int>(std::count_if(std::begin(bounds), std::end(bounds), [&](auto b) { return e >= b; }));
    per_epoch.push_back(seg(values[idx], 1));
  }
  REQUIRE(per_epoch.size() == 200);
  CHECK(normalize_segments(per_epoch) == expand_step_schedule(params));
}

TEST_CASE("schedules always fill the horizon") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    std::uniform_int_distribution<std::int64_t> period(1, 90), horizon(1, 250);
    auto p = schedule("lr", "0.5", "0.2", {period(rng), period(rng), period(rng)}, horizon(rng));
    std::int64_t total = 0;
    for (const auto& s : expand_step_schedule(p)) {
      CHECK(s.epochs >= 1);
      total += s.epochs;
    }
    CHECK(total == p.horizon);
  }
}

TEST_CASE("schedule constants are attached to every segment") {
  auto p = schedule("lr", "0.5", "0.2", {40}, 100);
  p.constants.set("batch_size", HpValue::integer(128));
  for (const auto& s : expand_step_schedule(p)) CHECK(s.assignment.find("batch_size")->text() == "128");
}

TEST_CASE("grid over the learning-rate space has 108 trials") {
  SearchSpace space;
  space["initial"] = {HpValue::infer("0.5"), HpValue::infer("0.2")};
  space["factor"] = {HpValue::infer("0.2"), HpValue::infer("0.1")};
  for (const char* axis : {"period1", "period2", "period3"}) {
    space[axis] = {HpValue::integer(40), HpValue::integer(60), HpValue::integer(80)};
  }
  ScheduleTemplate tmpl;
  tmpl.scheduled_hp = "lr";
  tmpl.horizon = 200;
  auto trials = expand_grid(space, tmpl);
  REQUIRE(trials.size() == 2 * 2 * 3 * 3 * 3);

  std::set<std::vector<HpAssignment>> distinct;
  for (const auto& t : trials) {
    distinct.insert(flatten_segments(t.segments));
    CHECK(t.total_epochs() == 200);
  }
  // A third decay landing at or past the horizon never takes effect, so
  // some period3 choices collapse.
  const auto oracle = stagehpo::testing::oracle_grid_sequences();
  CHECK(distinct.size() == std::set<stagehpo::testing::EpochSequence>(oracle.begin(), oracle.end()).size());
  CHECK(distinct.size() == 92);
  std::set<std::string> ids;
  for (const auto& t : trials) ids.insert(t.trial_id);
  CHECK(ids.size() == trials.size());
  CHECK(std::is_sorted(trials.begin(), trials.end(),
                       [](const TrialSpec& a, const TrialSpec& b) { return a.trial_id < b.trial_id; }));

  // Sorted axis names: factor varies slowest, then initial, then periods.
  CHECK(runs(trials.front().segments, "lr").front() == std::pair<std::string, std::int64_t>{"0.5", 40});
  CHECK(trials.front().segments[1].assignment.find("lr")->text() == "0.1");
  CHECK(trials.back().segments[1].assignment.find("lr")->text() == "0.02");
}

TEST_CASE("grid over the batch-size space has 8 trials") {
  SearchSpace space;
  space["initial"] = {HpValue::integer(128)};
  space["factor"] = {HpValue::integer(5)};
  for (const char* axis : {"period1", "period2", "period3"}) space[axis] = {HpValue::integer(30), HpValue::integer(60)};
  ScheduleTemplate tmpl;
  tmpl.scheduled_hp = "batch_size";
  tmpl.horizon = 216;
  tmpl.constants.set("lr", HpValue::infer("0.1"));
  auto trials = expand_grid(space, tmpl);
  CHECK(trials.size() == 8);
  for (const auto& t : trials) {
    CHECK(t.total_epochs() == 216);
    CHECK(t.segments.back().assignment.find("batch_size")->text() == "16000");
  }
}

TEST_CASE("single plain axis gives one constant trial") {
  SearchSpace space;
  space["lr"] = {HpValue::infer("0.1")};
  ScheduleTemplate tmpl;
  tmpl.horizon = 30;
  auto trials = expand_grid(space, tmpl);
  REQUIRE(trials.size() == 1);
  CHECK(trials[0].segments == std::vector<Segment>{seg("0.1", 30)});
}

TEST_CASE("empty axis is an invalid space") {
  SearchSpace space;
  space["lr"] = {};
  ScheduleTemplate tmpl;
  tmpl.horizon = 10;
  CHECK_THROWS_AS(expand_grid(space, tmpl), Error);
  try {
    expand_grid(space, tmpl);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidSpace);
  }
}

TEST_CASE("studies reject duplicate trial ids") {
  StudySpec s = stagehpo::testing::example_study();
  CHECK_NOTHROW(validate_study(s));
  s.trials.push_back(s.trials.front());
  try {
    validate_study(s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateTrial);
  }
}

TEST_CASE("trial ids sort numerically") {
  CHECK(make_trial_id("g", 7, 108) == "g007");
  CHECK(make_trial_id("g", 107, 108) == "g107");
  CHECK(make_trial_id("r", 0, 5) == "r0");
}

}  // TEST_SUITE
