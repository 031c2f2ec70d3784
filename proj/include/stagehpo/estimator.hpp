#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace stagehpo {

struct ProfileRecord {
  std::int64_t batch_size = 0;
  double observed_mem_mb = 0.0;
};

struct LinearModel {
  double intercept = 0.0;
  double slope = 0.0;
  std::size_t n_observations = 0;

  double predict(double batch_size) const { return intercept + slope * batch_size; }
};

// Cold start (no model) -> 1 GPU. Otherwise ceil(max(pred, cap*1e-6)/cap),
// at least 1.
int estimate_gpus(std::int64_t batch_size, const std::optional<LinearModel>& model, double gpu_capacity_mb);

// Throws Error(kUnsatisfiableStage) when previous + 1 exceeds `max_gpus`.
int escalate(int previous, int max_gpus);

// Online OLS of observed memory against batch size. One estimator per
// executor; mutated only by the simulation loop.
class ResourceEstimator {
 public:
  // Throws Error(kInvalidValue) unless observed_mem_mb > 0.
  void observe(const ProfileRecord& record);

  // std::nullopt while fewer than two distinct batch sizes have been seen.
  std::optional<LinearModel> fit() const;
  int estimate(std::int64_t batch_size, double gpu_capacity_mb) const {
    return estimate_gpus(batch_size, fit(), gpu_capacity_mb);
  }
  std::size_t size() const { return n_; }

 private:
  // Running sums keep fit() O(1); exact for the integral inputs used here.
  std::size_t n_ = 0;
  double sum_x_ = 0, sum_y_ = 0, sum_xx_ = 0, sum_xy_ = 0;
  std::optional<std::int64_t> first_batch_;
  bool distinct_ = false;
};

}  // namespace stagehpo
