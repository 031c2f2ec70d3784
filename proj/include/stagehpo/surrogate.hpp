#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "stagehpo/hp.hpp"

namespace stagehpo {

inline constexpr std::string_view kLearningRateHp = "lr";
inline constexpr std::string_view kBatchSizeHp = "batch_size";

struct SurrogateParams {
  double err0 = 0.9;
  double err_min = 0.05;
  double rate = 0.03;
  double width = std::log(10.0);
  double jitter = 0.1;
  double lr_star_hi = 0.4;
  double lr_star_lo = 0.004;
  double batch_ref = 128.0;
  double default_lr = 0.1;  // used when an assignment only carries a batch size

  void validate() const;
};

// Surrogate training state. The error is a pure function of
// (study_seed, per-epoch hyperparameter history).
struct Checkpoint {
  std::uint64_t history_digest = 0;
  std::int64_t epochs_done = 0;
  double error = 0.0;
  std::uint64_t study_seed = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint64_t kEmptyHistoryDigest = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

Checkpoint fresh_checkpoint(std::uint64_t study_seed, const SurrogateParams& params);

// Applies `epochs` per-epoch updates under `assignment`. Throws
// Error(kInvalidAssignment) when neither lr nor batch_size is present, or
// either is non-positive.
Checkpoint train(const Checkpoint& ckpt, const HpAssignment& assignment, std::int64_t epochs,
                 const SurrogateParams& params);

// Trains through a segment list in order.
Checkpoint train_segments(Checkpoint ckpt, std::span<const Segment> segments, const SurrogateParams& params);

double validation_accuracy(const Checkpoint& ckpt);

// Ground-truth memory footprint in MB: 500 + 2 * batch_size. Assignments
// without a batch size use `batch_ref`.
double memory_required(const HpAssignment& assignment, const SurrogateParams& params = {});
std::int64_t batch_size_of(const HpAssignment& assignment, const SurrogateParams& params = {});

}  // namespace stagehpo
