#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "stagehpo/estimator.hpp"
#include "stagehpo/hp.hpp"
#include "stagehpo/hpo.hpp"
#include "stagehpo/stage_tree.hpp"
#include "stagehpo/surrogate.hpp"

namespace stagehpo {

struct ClusterSpec {
  int nodes = 4;
  int gpus_per_node = 5;
  double gpu_memory_mb = 12000.0;

  int total_gpus() const { return nodes * gpus_per_node; }
  void validate() const;
};

struct CostModel {
  double epoch_time_s = 1.0;
  double scaling_exponent = 0.9;  // one epoch on g GPUs takes epoch_time / g^k
  double checkpoint_load_s = 0.5;
  double container_start_s = 2.0;
  double container_destroy_s = 0.0;

  void validate() const;
  double epoch_seconds(int gpus) const;
  // No overheads and linear scaling: GPU-seconds equal epochs * epoch_time.
  static CostModel zero_overhead();
};

enum class Policy { kTrialBased, kStageBased };
std::string_view to_string(Policy policy);

struct AlgorithmSpec {
  enum class Kind { kFull, kSha, kAsha };
  Kind kind = Kind::kFull;
  RungSpec sha;
  AshaParams asha;
  std::size_t max_in_flight = 0;  // ASHA concurrency; 0 = cluster GPU count
};

// Checkpoint identity a worker holds: the state of `task` after `epoch`.
struct CheckpointRef {
  std::int64_t task = -1;
  std::int64_t epoch = 0;
  friend bool operator==(const CheckpointRef&, const CheckpointRef&) = default;
};

struct Worker {
  int worker_id = 0;
  int node = 0;
  std::vector<int> gpus;  // global GPU ids, all on `node`
  std::optional<CheckpointRef> loaded_checkpoint;
  bool busy = false;
  bool alive = true;
};

// Containers and their GPUs. Workers are only ever merged or split while
// idle; busy workers are never preempted.
class WorkerPool {
 public:
  struct Placement {
    int worker = -1;
    bool new_container = false;
    int destroyed_workers = 0;
    bool needs_checkpoint_load = false;
  };

  explicit WorkerPool(const ClusterSpec& cluster);

  // Preference: (1) idle worker of exactly `gpus` GPUs already holding
  // `needed`; (2) any idle worker of exactly `gpus`; (3) assemble a new
  // worker on one node from free GPUs, destroying idle workers there if
  // needed; otherwise std::nullopt (wait). Marks the chosen worker busy.
  // Throws Error(kUnsatisfiableStage) if gpus > gpus_per_node.
  std::optional<Placement> assign(int gpus, const std::optional<CheckpointRef>& needed);
  void release(int worker, std::optional<CheckpointRef> resident);

  const Worker& worker(int id) const { return workers_.at(static_cast<std::size_t>(id)); }
  const std::vector<Worker>& workers() const { return workers_; }
  int node_of_gpu(int gpu) const { return gpu / cluster_.gpus_per_node; }
  // -1 when the GPU belongs to no live worker.
  int owner_of_gpu(int gpu) const { return gpu_owner_.at(static_cast<std::size_t>(gpu)); }

 private:
  int create_worker(int node, int gpus);
  void destroy_worker(int id);

  ClusterSpec cluster_;
  std::vector<Worker> workers_;
  std::vector<int> gpu_owner_;
};

struct TraceRecord {
  double time_s = 0.0;
  std::string event;
  std::int64_t stage_id = -1;
  std::string trial_id;
  int worker_id = -1;
  int node = -1;
  std::vector<int> gpus;
  std::string detail;
};

struct TrialOutcome {
  std::string status;  // finished | paused | stopped | failed | idle
  std::int64_t epochs_reached = 0;
  double accuracy = 0.0;
};

struct RungFunnel {
  std::int64_t epoch = 0;
  std::size_t participants = 0;
  std::size_t survivors = 0;
};

struct SimReport {
  Policy policy = Policy::kStageBased;
  double end_to_end_s = 0.0;
  double gpu_seconds = 0.0;
  double gpu_hours = 0.0;
  std::int64_t epochs_trained = 0;
  std::size_t launches = 0;
  std::size_t oom_failures = 0;
  std::size_t containers_started = 0;
  std::size_t checkpoint_loads = 0;
  std::size_t scheduled_units = 0;  // stages (stage-based) or trials (trial-based)
  std::vector<double> per_gpu_busy_s;
  std::map<std::string, TrialOutcome> trials;
  std::vector<RungFunnel> funnel;
  std::vector<TraceRecord> trace;
};

enum class TaskStatus { kPending, kReady, kRunning, kDone, kCancelled, kFailed };
std::string_view to_string(TaskStatus status);

// Discrete-event simulation of one executor: a study, one scheduling policy,
// one cluster. Single-threaded and deterministic; independent executors may
// run on different threads.
class Executor {
 public:
  Executor(StudySpec study, AlgorithmSpec algorithm, Policy policy, ClusterSpec cluster, CostModel cost,
           SurrogateParams surrogate, std::uint64_t seed);
  ~Executor();
  Executor(Executor&&) noexcept;
  Executor& operator=(Executor&&) noexcept;

  // Runs to completion.
  SimReport run();

  // Finer-grained driving, used by tests. start() sets initial targets and
  // dispatches; step() processes the next timestamp; returns false once the
  // simulation has nothing left to do.
  void start();
  bool step();
  SimReport report() const;

  struct Dispatch {
    std::int64_t task = -1;
    int gpus = 0;
  };
  // Highest-priority ready task (ties: smaller start epoch, then id) with
  // its GPU request; std::nullopt when nothing is ready.
  std::optional<Dispatch> next_dispatch() const;

  void apply_prune(const PruneDecision& decision);

  double now() const;
  TaskStatus status(std::int64_t task) const;
  std::int64_t task_done_epochs(std::int64_t task) const;
  std::optional<Checkpoint> task_checkpoint(std::int64_t task) const;
  std::size_t task_count() const;
  const StageTree* tree() const;  // stage-based only
  const WorkerPool& pool() const;
  const ResourceEstimator& estimator() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimReport simulate(const StudySpec& study, const AlgorithmSpec& algorithm, Policy policy, const ClusterSpec& cluster,
                   const CostModel& cost, const SurrogateParams& surrogate, std::uint64_t seed);

// Studies sharing (model_key, dataset_key) go to the same executor.
std::map<std::string, std::size_t> route(const std::vector<StudySpec>& studies);

struct ExecutorPlan {
  std::size_t executor_id = 0;
  std::vector<std::string> study_ids;
  StudySpec merged;      // trial ids become "<study>/<trial>"
  ClusterSpec cluster;   // this executor's node partition
};

// Splits the cluster's nodes evenly across executors. Throws
// Error(kInvalidConfig) when there are more executors than nodes.
std::vector<ExecutorPlan> plan_executors(const std::vector<StudySpec>& studies, const ClusterSpec& cluster);

}  // namespace stagehpo
