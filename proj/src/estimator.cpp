#include "stagehpo/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stagehpo/error.hpp"

namespace stagehpo {

int estimate_gpus(std::int64_t batch_size, const std::optional<LinearModel>& model, double gpu_capacity_mb) {
  if (!(gpu_capacity_mb > 0)) throw Error(ErrorCode::kInvalidValue, "gpu capacity must be positive");
  if (!model) return 1;
  double predicted = std::max(model->predict(static_cast<double>(batch_size)), gpu_capacity_mb * 1e-6);
  return std::max(1, static_cast<int>(std::ceil(predicted / gpu_capacity_mb)));
}

int escalate(int previous, int max_gpus) {
  if (previous < 1) throw Error(ErrorCode::kInvalidValue, "gpu count must be >= 1");
  if (previous + 1 > max_gpus) {
    throw Error(ErrorCode::kUnsatisfiableStage,
                "stage needs more than " + std::to_string(max_gpus) + " GPUs");
  }
  return previous + 1;
}

void ResourceEstimator::observe(const ProfileRecord& record) {
  if (!(record.observed_mem_mb > 0)) throw Error(ErrorCode::kInvalidValue, "observed memory must be positive");
  const auto x = static_cast<double>(record.batch_size);
  ++n_;
  sum_x_ += x;
  sum_y_ += record.observed_mem_mb;
  sum_xx_ += x * x;
  sum_xy_ += x * record.observed_mem_mb;
  if (!first_batch_) {
    first_batch_ = record.batch_size;
  } else if (*first_batch_ != record.batch_size) {
    distinct_ = true;
  }
}

std::optional<LinearModel> ResourceEstimator::fit() const {
  if (n_ < 2 || !distinct_) return std::nullopt;
  const auto n = static_cast<double>(n_);
  const double sxx = sum_xx_ - sum_x_ * sum_x_ / n;
  const double sxy = sum_xy_ - sum_x_ * sum_y_ / n;
  LinearModel m;
  m.slope = sxy / sxx;
  m.intercept = (sum_y_ - m.slope * sum_x_) / n;
  m.n_observations = n_;
  return m;
}

}  // namespace stagehpo
