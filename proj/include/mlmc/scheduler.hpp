#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mlmc/partition.hpp"

namespace mlmc {

// One sampling task; the level selects the processor requirement q_level of
// the partition family. Durations are known up front in simulate mode but are
// treated as revealed-on-completion: they never influence assignment order.
struct TaskInstance {
  long long id = 0;
  int level = 0;
  double duration = 0.0;  // seconds, > 0
};

enum class IntervalKind { Active, Idle, Manage };

struct TimelineInterval {
  int worker = 0;
  double start = 0.0;
  double end = 0.0;
  IntervalKind kind = IntervalKind::Idle;
  long long task = -1;  // valid for Active intervals
  int level = -1;       // valid for Active intervals
};

struct Timeline {
  int workers = 0;
  std::vector<int> group_sizes;
  double makespan = 0.0;
  std::vector<TimelineInterval> intervals;  // sorted by (worker, start), gap-free

  // Assignment/descent log kept for property checks.
  struct Assignment {
    double time = 0.0;
    long long task = -1;
    int level = 0;
    int root = 0;
  };
  struct Descent {
    double time = 0.0;
    int root = 0;
    int from_level = 0;
  };
  std::vector<Assignment> assignments;
  std::vector<Descent> descents;

  double last_assignment_time() const;
  double active_core_seconds() const;
  double idle_core_seconds() const;
};

struct WorkBounds {
  double total_work = 0.0;   // W_T, core-seconds
  double lower_bound = 0.0;  // W_LB = max(W_T/p, max duration)
  std::optional<double> optimal;  // W_opt, only when produced by the oracle
};

struct OracleCaps {
  int max_tasks = 10;
  int max_workers = 8;
};

struct ApproximationCheck {
  double greedy = 0.0;
  double optimal = 0.0;
  double ratio = 0.0;
};

// Event-driven emulation of the incremental greedy assignment: level queues
// are drained finest-first, a ready group receives the next task at its
// current level or descends one partition level when that level is exhausted.
// Ties (equal ready times) break by lowest root. Deterministic.
Timeline greedy_schedule(std::vector<TaskInstance> tasks, const PartitionFamily& family);

WorkBounds work_bounds(std::span<const TaskInstance> tasks, const PartitionSpec& spec);

// Exact minimum makespan by branch-and-bound over task orderings with
// earliest-available placement. Only for desk-scale instances.
double optimal_makespan_bruteforce(std::span<const TaskInstance> tasks,
                                   const PartitionSpec& spec, OracleCaps caps = {});

// Greedy vs. oracle; throws ApproximationViolation if the ratio reaches 2.
ApproximationCheck verify_two_approximation(const std::vector<TaskInstance>& tasks,
                                            const PartitionFamily& family,
                                            OracleCaps caps = {});

// True iff every idle interval starts at or after the final task assignment.
bool verify_no_idle_before_exhaustion(const Timeline& timeline,
                                      std::span<const TaskInstance> tasks);

// Insert idle intervals so every worker row covers [0, makespan] gap-free.
void fill_idle_gaps(Timeline& timeline);

}  // namespace mlmc
