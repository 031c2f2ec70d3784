#include <algorithm>
#include <cmath>

#include "stagehpo/error.hpp"
#include "stagehpo/sim.hpp"

namespace stagehpo {

void ClusterSpec::validate() const {
  if (nodes < 1 || gpus_per_node < 1 || !(gpu_memory_mb > 0)) {
    throw Error(ErrorCode::kInvalidConfig, "cluster nodes, gpus_per_node and gpu_memory_mb must be positive");
  }
}

void CostModel::validate() const {
  if (!(epoch_time_s > 0)) throw Error(ErrorCode::kInvalidConfig, "cost.epoch_time_s must be positive");
  if (!(scaling_exponent > 0 && scaling_exponent <= 1)) {
    throw Error(ErrorCode::kInvalidConfig, "cost.scaling_exponent must be in (0, 1]");
  }
  if (checkpoint_load_s < 0 || container_start_s < 0 || container_destroy_s < 0) {
    throw Error(ErrorCode::kInvalidConfig, "cost overheads must be non-negative");
  }
}

double CostModel::epoch_seconds(int gpus) const {
  return epoch_time_s / std::pow(static_cast<double>(gpus), scaling_exponent);
}

CostModel CostModel::zero_overhead() {
  CostModel c;
  c.scaling_exponent = 1.0;
  c.checkpoint_load_s = 0.0;
  c.container_start_s = 0.0;
  c.container_destroy_s = 0.0;
  return c;
}

WorkerPool::WorkerPool(const ClusterSpec& cluster)
    : cluster_(cluster), gpu_owner_(static_cast<std::size_t>(cluster.total_gpus()), -1) {}

int WorkerPool::create_worker(int node, int gpus) {
  Worker w;
  w.worker_id = static_cast<int>(workers_.size());
  w.node = node;
  for (int g = node * cluster_.gpus_per_node; g < (node + 1) * cluster_.gpus_per_node && static_cast<int>(w.gpus.size()) < gpus; ++g) {
    if (gpu_owner_[static_cast<std::size_t>(g)] == -1) {
      w.gpus.push_back(g);
      gpu_owner_[static_cast<std::size_t>(g)] = w.worker_id;
    }
  }
  workers_.push_back(std::move(w));
  return workers_.back().worker_id;
}

void WorkerPool::destroy_worker(int id) {
  Worker& w = workers_.at(static_cast<std::size_t>(id));
  for (int g : w.gpus) gpu_owner_[static_cast<std::size_t>(g)] = -1;
  w.alive = false;
}

std::optional<WorkerPool::Placement> WorkerPool::assign(int gpus, const std::optional<CheckpointRef>& needed) {
  if (gpus < 1 || gpus > cluster_.gpus_per_node) {
    throw Error(ErrorCode::kUnsatisfiableStage, "a worker cannot hold " + std::to_string(gpus) + " GPUs (node has " +
                                                    std::to_string(cluster_.gpus_per_node) + ")");
  }
  auto exact_idle = [&](const Worker& w) {
    return w.alive && !w.busy && static_cast<int>(w.gpus.size()) == gpus;
  };

  std::optional<int> chosen;
  if (needed) {
    for (const auto& w : workers_) {
      if (exact_idle(w) && w.loaded_checkpoint == needed) {
        chosen = w.worker_id;
        break;
      }
    }
  }
  if (!chosen) {
    for (const auto& w : workers_) {
      if (exact_idle(w)) {
        chosen = w.worker_id;
        break;
      }
    }
  }
  if (chosen) {
    Worker& w = workers_[static_cast<std::size_t>(*chosen)];
    w.busy = true;
    return Placement{*chosen, false, 0, needed.has_value() && w.loaded_checkpoint != needed};
  }

  // Assemble on one node: plain free GPUs first, then the node needing the
  // fewest idle workers torn down.
  std::optional<int> best_node;
  std::vector<int> best_victims;
  for (int node = 0; node < cluster_.nodes; ++node) {
    int free = 0;
    for (int g = node * cluster_.gpus_per_node; g < (node + 1) * cluster_.gpus_per_node; ++g) {
      free += gpu_owner_[static_cast<std::size_t>(g)] == -1 ? 1 : 0;
    }
    std::vector<int> idle;
    for (const auto& w : workers_) {
      if (w.alive && !w.busy && w.node == node) idle.push_back(w.worker_id);
    }
    std::stable_sort(idle.begin(), idle.end(), [&](int a, int b) {
      return workers_[static_cast<std::size_t>(a)].gpus.size() < workers_[static_cast<std::size_t>(b)].gpus.size();
    });
    std::vector<int> victims;
    for (std::size_t i = 0; free < gpus && i < idle.size(); ++i) {
      victims.push_back(idle[i]);
      free += static_cast<int>(workers_[static_cast<std::size_t>(idle[i])].gpus.size());
    }
    if (free < gpus) continue;
    if (!best_node || victims.size() < best_victims.size()) {
      best_node = node;
      best_victims = std::move(victims);
      if (best_victims.empty()) break;
    }
  }
  if (!best_node) return std::nullopt;
  for (int v : best_victims) destroy_worker(v);
  int id = create_worker(*best_node, gpus);
  workers_[static_cast<std::size_t>(id)].busy = true;
  return Placement{id, true, static_cast<int>(best_victims.size()), needed.has_value()};
}

void WorkerPool::release(int worker, std::optional<CheckpointRef> resident) {
  Worker& w = workers_.at(static_cast<std::size_t>(worker));
  w.busy = false;
  w.loaded_checkpoint = resident;
}

}  // namespace stagehpo
