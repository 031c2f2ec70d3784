#include "stagehpo/surrogate.hpp"

#include <algorithm>

#include "stagehpo/error.hpp"

namespace stagehpo {

void SurrogateParams::validate() const {
  if (!(err_min > 0 && err_min < err0 && err0 <= 1)) {
    throw Error(ErrorCode::kInvalidConfig, "surrogate requires 0 < err_min < err0 <= 1");
  }
  if (!(rate > 0 && width > 0 && jitter > 0 && jitter < 1)) {
    throw Error(ErrorCode::kInvalidConfig, "surrogate rate, width and jitter must be positive (jitter < 1)");
  }
  if (!(lr_star_hi > 0 && lr_star_lo > 0 && batch_ref > 0 && default_lr > 0)) {
    throw Error(ErrorCode::kInvalidConfig, "surrogate learning-rate targets and batch_ref must be positive");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kEmptyHistoryDigest;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Checkpoint fresh_checkpoint(std::uint64_t study_seed, const SurrogateParams& params) {
  return Checkpoint{kEmptyHistoryDigest, 0, params.err0, study_seed};
}

std::int64_t batch_size_of(const HpAssignment& assignment, const SurrogateParams& params) {
  if (const HpValue* b = assignment.find(kBatchSizeHp)) return static_cast<std::int64_t>(b->as_double());
  return static_cast<std::int64_t>(params.batch_ref);
}

double memory_required(const HpAssignment& assignment, const SurrogateParams& params) {
  return 500.0 + 2.0 * static_cast<double>(batch_size_of(assignment, params));
}

Checkpoint train(const Checkpoint& ckpt, const HpAssignment& assignment, std::int64_t epochs,
                 const SurrogateParams& params) {
  const HpValue* lr_value = assignment.find(kLearningRateHp);
  const HpValue* batch_value = assignment.find(kBatchSizeHp);
  if (!lr_value && !batch_value) {
    throw Error(ErrorCode::kInvalidAssignment, "assignment '" + assignment.to_string() + "' has neither lr nor batch_size");
  }
  double lr = lr_value ? lr_value->as_double() : params.default_lr;
  double batch = batch_value ? batch_value->as_double() : params.batch_ref;
  if (lr <= 0 || batch <= 0) {
    throw Error(ErrorCode::kInvalidAssignment, "lr and batch_size must be positive in '" + assignment.to_string() + "'");
  }

  const double log_lr_eff = std::log(lr * params.batch_ref / batch);
  const double log_ratio = std::log(params.lr_star_lo / params.lr_star_hi);
  const double two_var = 2.0 * params.width * params.width;
  const std::uint64_t assignment_hash = fnv1a64(assignment.to_string());

  Checkpoint out = ckpt;
  for (std::int64_t e = 0; e < epochs; ++e) {
    out.history_digest = splitmix64(out.history_digest ^ assignment_hash);
    const double progress =
        std::clamp((params.err0 - out.error) / (params.err0 - params.err_min), 0.0, 1.0);
    const double log_target = std::log(params.lr_star_hi) + progress * log_ratio;
    const double d = log_lr_eff - log_target;
    const double match = std::exp(-d * d / two_var);
    const std::uint64_t key =
        splitmix64(out.study_seed ^ splitmix64(out.history_digest ^ static_cast<std::uint64_t>(out.epochs_done)));
    const double u = static_cast<double>(key >> 11) * 0x1.0p-53;
    const double j = 1.0 + params.jitter * (2.0 * u - 1.0);
    out.error = std::max(params.err_min, out.error * (1.0 - params.rate * match * j));
    ++out.epochs_done;
  }
  return out;
}

Checkpoint train_segments(Checkpoint ckpt, std::span<const Segment> segments, const SurrogateParams& params) {
  for (const auto& seg : segments) ckpt = train(ckpt, seg.assignment, seg.epochs, params);
  return ckpt;
}

double validation_accuracy(const Checkpoint& ckpt) { return 1.0 - ckpt.error; }

}  // namespace stagehpo
