#include "stagehpo/sim.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include "stagehpo/error.hpp"

namespace stagehpo {

std::string_view to_string(Policy policy) {
  return policy == Policy::kTrialBased ? "trial_based" : "stage_based";
}

std::string_view to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kReady: return "ready";
    case TaskStatus::kRunning: return "running";
    case TaskStatus::kDone: return "done";
    case TaskStatus::kCancelled: return "cancelled";
    case TaskStatus::kFailed: return "failed";
  }
  return "?";
}

namespace {

// Segments covering relative epochs [from, to) of a segment list.
std::vector<Segment> slice(const std::vector<Segment>& segments, std::int64_t from, std::int64_t to) {
  std::vector<Segment> out;
  std::int64_t pos = 0;
  for (const auto& s : segments) {
    std::int64_t lo = std::max(pos, from);
    std::int64_t hi = std::min(pos + s.epochs, to);
    if (hi > lo) out.push_back(Segment{s.assignment, hi - lo});
    pos += s.epochs;
    if (pos >= to) break;
  }
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

constexpr int kUnscheduledPriority = INT_MAX / 2;

}  // namespace

struct Executor::Impl {
  enum class TrialState { kIdle, kActive, kStopped, kFailed, kFinished };

  struct Piece {
    int worker = -1;
    int gpus = 0;
    std::int64_t from = 0;
    std::int64_t to = 0;
    double launch_time = 0.0;
    double compute_start = 0.0;
    double per_epoch = 0.0;
    bool oom = false;
    std::uint64_t generation = 0;
  };

  struct Task {
    std::int64_t parent = -1;
    std::int64_t start = 0;
    std::int64_t length = 0;
    std::vector<Segment> segments;
    std::vector<int> covering;
    std::int64_t batch_size = 0;
    double mem_mb = 0.0;
    int fixed_gpus = 0;  // trial-based only
    int gpu_floor = 0;   // raised by OOM escalation
    std::int64_t done = 0;
    std::optional<Checkpoint> ckpt;  // state after `done` epochs
    bool running = false;
    bool cancelled = false;
    bool failed = false;
    Piece piece;

    std::int64_t end() const { return start + length; }
  };

  struct TrialRun {
    std::string id;
    std::int64_t length = 0;
    std::vector<std::int64_t> path;  // root-first tasks
    TrialState state = TrialState::kIdle;
    std::int64_t target = 0;
    std::int64_t reached = 0;
    std::optional<Checkpoint> last;
    std::size_t rung = 0;  // ASHA rung of the current target
  };

  struct Event {
    double time = 0.0;
    std::int64_t task = -1;
    std::uint64_t seq = 0;
    std::uint64_t generation = 0;
    bool operator>(const Event& o) const {
      return std::tie(time, task, seq) > std::tie(o.time, o.task, o.seq);
    }
  };

  Impl(StudySpec s, AlgorithmSpec a, Policy p, ClusterSpec c, CostModel cm, SurrogateParams sp, std::uint64_t sd)
      : study(std::move(s)), algo(std::move(a)), policy(p), cluster(c), cost(cm), surrogate(sp), seed(sd), pool(c) {
    validate_study(study);
    cluster.validate();
    cost.validate();
    surrogate.validate();
    if (study.trials.empty()) throw Error(ErrorCode::kInvalidTrial, "study '" + study.study_id + "' has no trials");
    if (algo.kind == AlgorithmSpec::Kind::kSha) validate_rungs(algo.sha, study.horizon_epochs);
    if (algo.kind == AlgorithmSpec::Kind::kAsha) budgets = algo.asha.rung_budgets();
    slots = algo.max_in_flight ? algo.max_in_flight : static_cast<std::size_t>(cluster.total_gpus());

    for (std::size_t i = 0; i < study.trials.size(); ++i) {
      const auto& t = study.trials[i];
      TrialRun run;
      run.id = t.trial_id;
      run.length = t.total_epochs();
      trial_index.emplace(t.trial_id, static_cast<int>(i));
      priorities.emplace(t.trial_id, kUnscheduledPriority);
      trials.push_back(std::move(run));
    }

    if (policy == Policy::kStageBased) {
      tree.emplace();
      for (const auto& t : study.trials) tree->insert_trial(t);
      for (const auto& st : tree->stages()) {
        Task task;
        task.parent = st.parent ? static_cast<std::int64_t>(st.parent->value) : -1;
        task.start = st.start_epoch;
        task.length = st.length;
        task.segments = {Segment{st.assignment, st.length}};
        for (const auto& id : st.covering_trials) task.covering.push_back(trial_index.at(id));
        task.batch_size = batch_size_of(st.assignment, surrogate);
        task.mem_mb = memory_required(st.assignment, surrogate);
        tasks.push_back(std::move(task));
      }
      for (auto& run : trials) {
        for (StageId s : tree->path_to(*tree->leaf_for(run.id))) run.path.push_back(s.value);
      }
    } else {
      for (std::size_t i = 0; i < study.trials.size(); ++i) {
        const auto& t = study.trials[i];
        Task task;
        task.length = t.total_epochs();
        task.segments = t.segments;
        task.covering = {static_cast<int>(i)};
        for (const auto& seg : t.segments) {
          task.mem_mb = std::max(task.mem_mb, memory_required(seg.assignment, surrogate));
          task.batch_size = std::max(task.batch_size, batch_size_of(seg.assignment, surrogate));
        }
        task.fixed_gpus = std::max(1, static_cast<int>(std::ceil(task.mem_mb / cluster.gpu_memory_mb)));
        tasks.push_back(std::move(task));
        trials[i].path = {static_cast<std::int64_t>(i)};
      }
    }
    busy.assign(static_cast<std::size_t>(cluster.total_gpus()), 0.0);
  }

  StudySpec study;
  AlgorithmSpec algo;
  Policy policy;
  ClusterSpec cluster;
  CostModel cost;
  SurrogateParams surrogate;
  std::uint64_t seed;

  std::optional<StageTree> tree;
  WorkerPool pool;
  ResourceEstimator estimator;
  std::vector<Task> tasks;
  std::vector<TrialRun> trials;
  std::map<std::string, int, std::less<>> trial_index;
  std::map<std::string, int, std::less<>> priorities;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  double now = 0.0;
  std::uint64_t seq = 0;
  std::uint64_t generation = 0;
  bool started = false;

  std::vector<double> busy;
  std::int64_t epochs_trained = 0;
  std::size_t launches = 0, ooms = 0, containers = 0, loads = 0;
  std::vector<TraceRecord> trace;
  std::vector<RungFunnel> funnel;

  std::size_t sha_rung = 0;
  std::vector<std::int64_t> budgets;
  AshaState asha;
  std::size_t slots = 0;
  int next_priority = 0;

  // --- trial bookkeeping -------------------------------------------------

  bool demanding(int i) const { return trials[static_cast<std::size_t>(i)].state == TrialState::kActive; }

  void set_target(int i, std::int64_t target) {
    auto& t = trials[static_cast<std::size_t>(i)];
    t.state = TrialState::kActive;
    t.target = std::min(target, t.length);
  }

  void set_priority(int i, int priority) { priorities[trials[static_cast<std::size_t>(i)].id] = priority; }

  std::size_t in_flight() const {
    std::size_t n = 0;
    for (const auto& t : trials) n += (t.state == TrialState::kActive && t.target > t.reached) ? 1 : 0;
    return n;
  }

  // --- task queries --------------------------------------------------------

  bool parent_complete(const Task& t) const {
    return t.parent < 0 || tasks[static_cast<std::size_t>(t.parent)].done == tasks[static_cast<std::size_t>(t.parent)].length;
  }

  // Furthest absolute epoch any active covering trial wants from this task.
  std::int64_t demand_end(const Task& t) const {
    std::int64_t e = 0;
    for (int i : t.covering) {
      if (demanding(i)) e = std::max(e, std::min(trials[static_cast<std::size_t>(i)].target, t.end()));
    }
    return e;
  }

  // Nearest report point past the current progress.
  std::int64_t piece_end(const Task& t) const {
    std::int64_t e = t.end();
    for (int i : t.covering) {
      const auto target = trials[static_cast<std::size_t>(i)].target;
      if (demanding(i) && target > t.start + t.done) e = std::min(e, std::min(target, t.end()));
    }
    return e;
  }

  bool is_ready(const Task& t) const {
    if (t.running || t.cancelled || t.failed || t.done >= t.length) return false;
    return parent_complete(t) && demand_end(t) > t.start + t.done;
  }

  TaskStatus status_of(const Task& t) const {
    if (t.failed) return TaskStatus::kFailed;
    if (t.running) return TaskStatus::kRunning;
    if (t.cancelled) return TaskStatus::kCancelled;
    if (t.done == t.length) return TaskStatus::kDone;
    return is_ready(t) ? TaskStatus::kReady : TaskStatus::kPending;
  }

  int priority_of(std::size_t k) const {
    if (policy == Policy::kStageBased) return stage_priority(tree->stage(StageId{static_cast<std::uint32_t>(k)}), priorities);
    return priorities.at(trials[static_cast<std::size_t>(tasks[k].covering.front())].id);
  }

  int required_gpus(const Task& t) const {
    if (policy == Policy::kTrialBased) return t.fixed_gpus;
    return std::max(estimator.estimate(t.batch_size, cluster.gpu_memory_mb), t.gpu_floor);
  }

  std::optional<CheckpointRef> needed_state(std::size_t k) const {
    const Task& t = tasks[k];
    if (t.done > 0) return CheckpointRef{static_cast<std::int64_t>(k), t.start + t.done};
    if (t.parent >= 0) return CheckpointRef{t.parent, tasks[static_cast<std::size_t>(t.parent)].end()};
    return std::nullopt;
  }

  Checkpoint start_checkpoint(std::size_t k) const {
    const Task& t = tasks[k];
    if (t.parent < 0) return fresh_checkpoint(seed, surrogate);
    return *tasks[static_cast<std::size_t>(t.parent)].ckpt;
  }

  Checkpoint checkpoint_at(std::size_t k, std::int64_t offset) const {
    const Task& t = tasks[k];
    if (offset == t.done && t.ckpt) return *t.ckpt;
    return train_segments(start_checkpoint(k), slice(t.segments, 0, offset), surrogate);
  }

  std::vector<std::size_t> ready_sorted() const {
    std::vector<std::tuple<int, std::int64_t, std::size_t>> keyed;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (is_ready(tasks[k])) keyed.emplace_back(priority_of(k), tasks[k].start, k);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> out;
    for (const auto& e : keyed) out.push_back(std::get<2>(e));
    return out;
  }

  // --- trace -----------------------------------------------------------------

  void record(std::string event, std::int64_t task, std::string trial, int worker, std::string detail) {
    TraceRecord r;
    r.time_s = now;
    r.event = std::move(event);
    r.stage_id = task;
    r.trial_id = std::move(trial);
    r.worker_id = worker;
    if (worker >= 0) {
      r.node = pool.worker(worker).node;
      r.gpus = pool.worker(worker).gpus;
    }
    r.detail = std::move(detail);
    trace.push_back(std::move(r));
  }

  std::string task_trial_label(std::size_t k) const {
    return policy == Policy::kTrialBased ? trials[static_cast<std::size_t>(tasks[k].covering.front())].id : std::string();
  }

  // --- execution -------------------------------------------------------------

  void launch(std::size_t k, const WorkerPool::Placement& placement, int gpus) {
    Task& t = tasks[k];
    Piece p;
    p.worker = placement.worker;
    p.gpus = gpus;
    p.from = t.done;
    p.to = piece_end(t) - t.start;
    p.launch_time = now;
    double overhead = 0.0;
    if (placement.new_container) {
      overhead += cost.container_start_s + cost.container_destroy_s * placement.destroyed_workers;
      ++containers;
      record("container_start", -1, "", placement.worker,
             "destroyed=" + std::to_string(placement.destroyed_workers));
    }
    if (placement.needs_checkpoint_load) {
      overhead += cost.checkpoint_load_s;
      ++loads;
    }
    p.compute_start = now + overhead;
    p.per_epoch = cost.epoch_seconds(gpus);
    p.oom = static_cast<double>(gpus) * cluster.gpu_memory_mb < t.mem_mb;
    p.generation = ++generation;
    double end = p.oom ? p.compute_start : p.compute_start + static_cast<double>(p.to - p.from) * p.per_epoch;
    t.piece = p;
    t.running = true;
    ++launches;
    queue.push(Event{end, static_cast<std::int64_t>(k), seq++, p.generation});
    record("start", static_cast<std::int64_t>(k), task_trial_label(k), placement.worker,
           "from=" + std::to_string(t.start + p.from) + ";to=" + std::to_string(t.start + p.to) +
               ";parent=" + std::to_string(t.parent) + ";load=" + (placement.needs_checkpoint_load ? "1" : "0") +
               ";batch=" + std::to_string(t.batch_size));
  }

  void charge(const Piece& p) {
    for (int g : pool.worker(p.worker).gpus) busy[static_cast<std::size_t>(g)] += now - p.launch_time;
  }

  void observe(const Task& t) {
    if (policy == Policy::kStageBased) estimator.observe(ProfileRecord{t.batch_size, t.mem_mb});
  }

  bool stale(const Event& ev) const {
    const Task& t = tasks[static_cast<std::size_t>(ev.task)];
    return !t.running || t.piece.generation != ev.generation;
  }

  void handle(const Event& ev) {
    auto k = static_cast<std::size_t>(ev.task);
    Task& t = tasks[k];
    if (stale(ev)) return;
    const Piece p = t.piece;
    charge(p);
    t.running = false;
    if (p.oom) {
      ++ooms;
      observe(t);
      record("oom", ev.task, task_trial_label(k), p.worker,
             "gpus=" + std::to_string(p.gpus) + ";mem_mb=" + fmt_double(t.mem_mb));
      pool.release(p.worker, std::nullopt);
      try {
        t.gpu_floor = escalate(p.gpus, cluster.gpus_per_node);
      } catch (const Error& e) {
        fail_task(k, e.message());
      }
      return;
    }
    Checkpoint from = p.from == 0 ? start_checkpoint(k) : *t.ckpt;
    t.ckpt = train_segments(from, slice(t.segments, p.from, p.to), surrogate);
    t.done = p.to;
    epochs_trained += p.to - p.from;
    observe(t);
    pool.release(p.worker, CheckpointRef{ev.task, t.start + p.to});
    record("finish", ev.task, task_trial_label(k), p.worker,
           "from=" + std::to_string(t.start + p.from) + ";to=" + std::to_string(t.start + p.to) +
               ";parent=" + std::to_string(t.parent));
  }

  // Ends a running piece at the first epoch boundary at or after
  // `at_epoch` that has not already been passed.
  void truncate(std::size_t k, std::int64_t at_epoch) {
    Task& t = tasks[k];
    Piece& p = t.piece;
    if (p.oom) return;
    std::int64_t elapsed = 0;
    if (now > p.compute_start) {
      elapsed = static_cast<std::int64_t>(std::ceil((now - p.compute_start) / p.per_epoch - 1e-9));
    }
    std::int64_t new_to = std::min(std::max(at_epoch - t.start, p.from + elapsed), p.to);
    if (new_to >= p.to) return;
    p.generation = ++generation;
    if (new_to <= p.from) {
      charge(p);
      t.running = false;
      pool.release(p.worker, std::nullopt);
      record("truncate", static_cast<std::int64_t>(k), task_trial_label(k), p.worker,
             "to=" + std::to_string(t.start + p.from) + ";aborted=1");
      return;
    }
    p.to = new_to;
    queue.push(Event{p.compute_start + static_cast<double>(p.to - p.from) * p.per_epoch, static_cast<std::int64_t>(k), seq++,
                     p.generation});
    record("truncate", static_cast<std::int64_t>(k), task_trial_label(k), p.worker, "to=" + std::to_string(t.start + p.to));
  }

  bool orphaned(const Task& t) const {
    return std::all_of(t.covering.begin(), t.covering.end(), [&](int i) {
      auto s = trials[static_cast<std::size_t>(i)].state;
      return s == TrialState::kStopped || s == TrialState::kFailed;
    });
  }

  void cancel_orphans(std::int64_t at_epoch) {
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      Task& t = tasks[k];
      if (t.done >= t.length || t.failed || t.cancelled || !orphaned(t)) continue;
      if (t.running) {
        truncate(k, at_epoch);
      } else {
        record("cancel", static_cast<std::int64_t>(k), task_trial_label(k), -1, "done=" + std::to_string(t.start + t.done));
      }
      t.cancelled = true;
    }
  }

  void fail_task(std::size_t k, const std::string& why) {
    Task& t = tasks[k];
    t.failed = true;
    record("stage_failed", static_cast<std::int64_t>(k), task_trial_label(k), -1, why);
    for (int i : t.covering) {
      auto& run = trials[static_cast<std::size_t>(i)];
      if (run.state == TrialState::kFinished || run.state == TrialState::kStopped) continue;
      run.state = TrialState::kFailed;
      asha.finished.insert(run.id);
      record("trial_failed", static_cast<std::int64_t>(k), run.id, -1, "");
    }
    cancel_orphans(t.start + t.done);
  }

  void apply_prune(const PruneDecision& d) {
    for (const auto& id : d.stopped) {
      auto it = trial_index.find(id);
      if (it == trial_index.end()) continue;
      auto& run = trials[static_cast<std::size_t>(it->second)];
      if (run.state != TrialState::kActive && run.state != TrialState::kIdle) continue;
      run.state = TrialState::kStopped;
      record("prune", -1, id, -1, "at_epoch=" + std::to_string(d.at_epoch));
    }
    cancel_orphans(d.at_epoch);
  }

  // --- algorithm glue --------------------------------------------------------

  void report_trial(std::size_t i, std::size_t k) {
    auto& run = trials[i];
    run.last = checkpoint_at(k, run.target - tasks[k].start);
    run.reached = run.target;
    double acc = validation_accuracy(*run.last);
    record("report", static_cast<std::int64_t>(k), run.id, -1,
           "epoch=" + std::to_string(run.reached) + ";accuracy=" + fmt_double(acc));
    if (algo.kind == AlgorithmSpec::Kind::kAsha) {
      asha.rungs[run.rung].completed[run.id] = acc;
      if (run.rung + 1 == budgets.size() || run.reached == run.length) asha.finished.insert(run.id);
    }
    if (run.reached == run.length) run.state = TrialState::kFinished;
  }

  bool report_available() {
    bool changed = false;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      auto& run = trials[i];
      if (run.state != TrialState::kActive || run.target <= run.reached) continue;
      for (auto k : run.path) {
        const Task& t = tasks[static_cast<std::size_t>(k)];
        if (t.start < run.target && run.target <= t.end()) {
          if (t.done >= run.target - t.start) {
            report_trial(i, static_cast<std::size_t>(k));
            changed = true;
          }
          break;
        }
      }
    }
    return changed;
  }

  bool asha_fill() {
    bool changed = false;
    while (in_flight() < slots) {
      AshaAction a = asha_poll(asha, algo.asha);
      if (a.kind == AshaAction::Kind::kIdle) break;
      int i = trial_index.at(a.trial_id);
      auto& run = trials[static_cast<std::size_t>(i)];
      if (a.kind == AshaAction::Kind::kStart) {
        ++asha.next_unstarted;
      } else {
        asha.rungs[a.rung - 1].promoted.insert(a.trial_id);
      }
      run.rung = a.rung;
      set_target(i, budgets[a.rung]);
      set_priority(i, next_priority++);
      record(a.kind == AshaAction::Kind::kStart ? "asha_start" : "asha_promote", -1, a.trial_id, -1,
             "rung=" + std::to_string(a.rung) + ";target=" + std::to_string(run.target));
      changed = true;
    }
    return changed;
  }

  void settle() {
    bool changed = true;
    while (changed) {
      changed = report_available();
      if (algo.kind == AlgorithmSpec::Kind::kAsha) changed = asha_fill() || changed;
    }
  }

  void dispatch() {
    for (std::size_t k : ready_sorted()) {
      Task& t = tasks[k];
      if (!is_ready(t)) continue;
      int gpus = required_gpus(t);
      if (gpus > cluster.gpus_per_node) {
        fail_task(k, "needs " + std::to_string(gpus) + " GPUs on one node");
        continue;
      }
      auto placement = pool.assign(gpus, needed_state(k));
      if (!placement) continue;
      launch(k, *placement, gpus);
    }
  }

  // SHA barrier: runs only when nothing is running or ready.
  bool on_quiescent() {
    if (algo.kind != AlgorithmSpec::Kind::kSha) return false;
    while (sha_rung < algo.sha.rung_epochs.size()) {
      const std::int64_t rung = algo.sha.rung_epochs[sha_rung++];
      std::map<std::string, double> scores;
      for (const auto& run : trials) {
        if (run.state == TrialState::kActive && run.reached == run.target && run.last) {
          scores[run.id] = validation_accuracy(*run.last);
        }
      }
      if (scores.empty()) continue;
      PruneDecision d = sha_rung_decision(scores, algo.sha.eta, rung);
      funnel.push_back(RungFunnel{rung, scores.size(), d.surviving.size()});
      apply_prune(d);
      const std::int64_t next = sha_rung < algo.sha.rung_epochs.size() ? algo.sha.rung_epochs[sha_rung] : INT64_MAX;
      for (const auto& id : d.surviving) set_target(trial_index.at(id), next);
      return true;
    }
    return false;
  }

  void start() {
    if (started) return;
    started = true;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const int idx = static_cast<int>(i);
      switch (algo.kind) {
        case AlgorithmSpec::Kind::kFull:
          set_target(idx, trials[i].length);
          set_priority(idx, study.trials[i].priority);
          break;
        case AlgorithmSpec::Kind::kSha:
          set_target(idx, algo.sha.rung_epochs.empty() ? trials[i].length : algo.sha.rung_epochs.front());
          set_priority(idx, study.trials[i].priority);
          break;
        case AlgorithmSpec::Kind::kAsha:
          asha.trial_ids.push_back(trials[i].id);
          break;
      }
    }
    if (algo.kind == AlgorithmSpec::Kind::kAsha) asha.rungs.resize(budgets.size());
    settle();
    dispatch();
  }

  bool step() {
    start();
    if (queue.empty()) {
      if (!on_quiescent()) {
        if (!ready_sorted().empty()) throw Error(ErrorCode::kUnsatisfiableStage, "ready stages cannot be placed on an idle cluster");
        return false;
      }
      settle();
      dispatch();
      return true;
    }
    // Superseded events (truncated or aborted pieces) must not move the clock.
    while (!queue.empty() && stale(queue.top())) queue.pop();
    if (queue.empty()) return true;
    const double t = queue.top().time;
    now = t;
    while (!queue.empty() && queue.top().time == t) {
      Event ev = queue.top();
      queue.pop();
      handle(ev);
    }
    settle();
    dispatch();
    return true;
  }

  SimReport report() const {
    SimReport r;
    r.policy = policy;
    r.end_to_end_s = now;
    r.per_gpu_busy_s = busy;
    for (double b : busy) r.gpu_seconds += b;
    r.gpu_hours = r.gpu_seconds / 3600.0;
    r.epochs_trained = epochs_trained;
    r.launches = launches;
    r.oom_failures = ooms;
    r.containers_started = containers;
    r.checkpoint_loads = loads;
    r.scheduled_units = tasks.size();
    r.funnel = funnel;
    r.trace = trace;
    for (const auto& run : trials) {
      TrialOutcome o;
      switch (run.state) {
        case TrialState::kIdle: o.status = "idle"; break;
        case TrialState::kActive: o.status = "paused"; break;
        case TrialState::kStopped: o.status = "stopped"; break;
        case TrialState::kFailed: o.status = "failed"; break;
        case TrialState::kFinished: o.status = "finished"; break;
      }
      o.epochs_reached = run.reached;
      o.accuracy = run.last ? validation_accuracy(*run.last) : 1.0 - surrogate.err0;
      r.trials.emplace(run.id, o);
    }
    return r;
  }
};

Executor::Executor(StudySpec study, AlgorithmSpec algorithm, Policy policy, ClusterSpec cluster, CostModel cost,
                   SurrogateParams surrogate, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(std::move(study), std::move(algorithm), policy, cluster, cost, surrogate, seed)) {}
Executor::~Executor() = default;
Executor::Executor(Executor&&) noexcept = default;
Executor& Executor::operator=(Executor&&) noexcept = default;

SimReport Executor::run() {
  while (impl_->step()) {
  }
  return impl_->report();
}

void Executor::start() { impl_->start(); }
bool Executor::step() { return impl_->step(); }
SimReport Executor::report() const { return impl_->report(); }

std::optional<Executor::Dispatch> Executor::next_dispatch() const {
  auto ready = impl_->ready_sorted();
  if (ready.empty()) return std::nullopt;
  auto k = ready.front();
  return Dispatch{static_cast<std::int64_t>(k), impl_->required_gpus(impl_->tasks[k])};
}

void Executor::apply_prune(const PruneDecision& decision) { impl_->apply_prune(decision); }
double Executor::now() const { return impl_->now; }
TaskStatus Executor::status(std::int64_t task) const {
  return impl_->status_of(impl_->tasks.at(static_cast<std::size_t>(task)));
}
std::int64_t Executor::task_done_epochs(std::int64_t task) const { return impl_->tasks.at(static_cast<std::size_t>(task)).done; }
std::optional<Checkpoint> Executor::task_checkpoint(std::int64_t task) const {
  return impl_->tasks.at(static_cast<std::size_t>(task)).ckpt;
}
std::size_t Executor::task_count() const { return impl_->tasks.size(); }
const StageTree* Executor::tree() const { return impl_->tree ? &*impl_->tree : nullptr; }
const WorkerPool& Executor::pool() const { return impl_->pool; }
const ResourceEstimator& Executor::estimator() const { return impl_->estimator; }

SimReport simulate(const StudySpec& study, const AlgorithmSpec& algorithm, Policy policy, const ClusterSpec& cluster,
                   const CostModel& cost, const SurrogateParams& surrogate, std::uint64_t seed) {
  return Executor(study, algorithm, policy, cluster, cost, surrogate, seed).run();
}

std::map<std::string, std::size_t> route(const std::vector<StudySpec>& studies) {
  std::map<std::pair<std::string, std::string>, std::size_t> executors;
  std::map<std::string, std::size_t> out;
  for (const auto& s : studies) {
    auto key = std::make_pair(s.model_key, s.dataset_key);
    auto it = executors.find(key);
    if (it == executors.end()) it = executors.emplace(key, executors.size()).first;
    out[s.study_id] = it->second;
  }
  return out;
}

std::vector<ExecutorPlan> plan_executors(const std::vector<StudySpec>& studies, const ClusterSpec& cluster) {
  auto routing = route(studies);
  std::size_t count = 0;
  for (const auto& [study, exec] : routing) count = std::max(count, exec + 1);
  if (count > static_cast<std::size_t>(cluster.nodes)) {
    throw Error(ErrorCode::kInvalidConfig, std::to_string(count) + " executors need at least as many nodes");
  }
  std::vector<ExecutorPlan> plans(count);
  for (std::size_t e = 0; e < count; ++e) {
    plans[e].executor_id = e;
    plans[e].cluster = cluster;
    auto n = static_cast<std::size_t>(cluster.nodes);
    plans[e].cluster.nodes = static_cast<int>((e + 1) * n / count - e * n / count);
  }
  for (const auto& s : studies) {
    auto& plan = plans[routing.at(s.study_id)];
    if (plan.study_ids.empty()) {
      plan.merged.study_id = "executor" + std::to_string(plan.executor_id);
      plan.merged.model_key = s.model_key;
      plan.merged.dataset_key = s.dataset_key;
    }
    plan.study_ids.push_back(s.study_id);
    plan.merged.horizon_epochs = std::max(plan.merged.horizon_epochs, s.horizon_epochs);
    for (auto t : s.trials) {
      t.trial_id = s.study_id + "/" + t.trial_id;
      plan.merged.trials.push_back(std::move(t));
    }
  }
  return plans;
}

}  // namespace stagehpo
