#pragma once

// Reference computations for stage-tree tests. Nothing here goes through
// StageTree or the schedule expansion code.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stagehpo/hp.hpp"

namespace stagehpo::testing {

// Schoolbook product of two non-negative decimal strings, canonical output.
inline std::string oracle_product(const std::string& a, const std::string& b) {
  auto split = [](const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos) return std::pair{s, std::size_t{0}};
    return std::pair{s.substr(0, dot) + s.substr(dot + 1), s.size() - dot - 1};
  };
  auto [da, fa] = split(a);
  auto [db, fb] = split(b);
  std::vector<int> acc(da.size() + db.size(), 0);
  for (std::size_t i = da.size(); i-- > 0;) {
    for (std::size_t j = db.size(); j-- > 0;) acc[i + j + 1] += (da[i] - '0') * (db[j] - '0');
  }
  for (std::size_t k = acc.size(); k-- > 1;) {
    acc[k - 1] += acc[k] / 10;
    acc[k] %= 10;
  }
  std::string digits;
  for (int d : acc) digits += static_cast<char>('0' + d);
  const std::size_t frac = fa + fb;
  std::string int_part = digits.substr(0, digits.size() - frac);
  std::string frac_part = digits.substr(digits.size() - frac);
  int_part.erase(0, std::min(int_part.find_first_not_of('0'), int_part.size()));
  if (int_part.empty()) int_part = "0";
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();
  return frac_part.empty() ? int_part : int_part + "." + frac_part;
}

using EpochSequence = std::vector<std::string>;

// Every epoch's value for the 2 x 2 x 3^3 step-decay grid at horizon 200:
// the value is multiplied by the decay rate at each cumulative period end.
inline std::vector<EpochSequence> oracle_grid_sequences() {
  std::vector<EpochSequence> out;
  for (const char* initial : {"0.5", "0.2"}) {
    for (const char* rate : {"0.2", "0.1"}) {
      for (int p1 : {40, 60, 80}) {
        for (int p2 : {40, 60, 80}) {
          for (int p3 : {40, 60, 80}) {
            EpochSequence seq;
            std::string value = initial;
            const int boundaries[] = {p1, p1 + p2, p1 + p2 + p3};
            for (int e = 0; e < 200; ++e) {
              for (int b : boundaries) {
                if (e == b) value = oracle_product(value, rate);
              }
              seq.push_back(value);
            }
            out.push_back(std::move(seq));
          }
        }
      }
    }
  }
  return out;
}

struct PrefixCount {
  std::int64_t trial_epochs = 0;
  std::int64_t distinct_prefixes = 0;  // distinct (prefix, epoch) pairs
};

// Per-epoch trie: one node per distinct non-empty prefix.
inline PrefixCount count_distinct_prefixes(const std::vector<EpochSequence>& sequences) {
  std::map<std::pair<std::int64_t, std::string>, std::int64_t> node_of;
  PrefixCount out;
  for (const auto& seq : sequences) {
    std::int64_t node = -1;
    for (const auto& v : seq) {
      auto [it, inserted] = node_of.try_emplace({node, v}, static_cast<std::int64_t>(node_of.size()));
      node = it->second;
    }
    out.trial_epochs += static_cast<std::int64_t>(seq.size());
  }
  out.distinct_prefixes = static_cast<std::int64_t>(node_of.size());
  return out;
}

inline PrefixCount count_distinct_prefixes(const std::vector<TrialSpec>& trials) {
  std::vector<EpochSequence> seqs;
  for (const auto& t : trials) {
    EpochSequence s;
    for (const auto& seg : t.segments) {
      for (std::int64_t e = 0; e < seg.epochs; ++e) s.push_back(seg.assignment.to_string());
    }
    seqs.push_back(std::move(s));
  }
  return count_distinct_prefixes(seqs);
}

// Small random trials over a narrow value set so prefixes overlap often.
inline std::vector<TrialSpec> random_trials(std::mt19937_64& rng, std::size_t n) {
  static const char* kValues[] = {"0.1", "0.2", "0.3"};
  std::uniform_int_distribution<int> seg_count(1, 4), pick(0, 2), len(1, 4);
  std::vector<TrialSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Segment> segs;
    int k = seg_count(rng);
    for (int s = 0; s < k; ++s) {
      HpAssignment a;
      a.set("lr", HpValue::infer(kValues[pick(rng)]));
      segs.push_back(Segment{a, len(rng)});
    }
    out.push_back(make_trial("t" + std::to_string(i), segs));
  }
  return out;
}

}  // namespace stagehpo::testing
