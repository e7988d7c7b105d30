#include "mlmc/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <string>

namespace mlmc {

double Timeline::last_assignment_time() const {
  double last = 0.0;
  for (const Assignment& a : assignments) last = std::max(last, a.time);
  return last;
}

double Timeline::active_core_seconds() const {
  double total = 0.0;
  for (const TimelineInterval& iv : intervals)
    if (iv.kind == IntervalKind::Active) total += iv.end - iv.start;
  return total;
}

double Timeline::idle_core_seconds() const {
  double total = 0.0;
  for (const TimelineInterval& iv : intervals)
    if (iv.kind == IntervalKind::Idle) total += iv.end - iv.start;
  return total;
}

namespace {

struct ReadyEvent {
  double time;
  int root;
  int level;
  int group_index;
  // min-heap on (time, root)
  bool operator>(const ReadyEvent& other) const {
    if (time != other.time) return time > other.time;
    return root > other.root;
  }
};

}  // namespace

void fill_idle_gaps(Timeline& timeline) {
  std::vector<std::vector<TimelineInterval>> per_worker(timeline.workers + 1);
  std::vector<TimelineInterval> rest;  // manage rows of coordinators, left as-is
  for (const TimelineInterval& iv : timeline.intervals) {
    if (iv.worker >= 1 && iv.worker <= timeline.workers)
      per_worker[iv.worker].push_back(iv);
    else
      rest.push_back(iv);
  }
  std::vector<TimelineInterval> out;
  for (int w = 1; w <= timeline.workers; ++w) {
    auto& ivs = per_worker[w];
    std::sort(ivs.begin(), ivs.end(),
              [](const TimelineInterval& a, const TimelineInterval& b) {
                return a.start < b.start;
              });
    double cursor = 0.0;
    for (const TimelineInterval& iv : ivs) {
      if (iv.start > cursor)
        out.push_back({w, cursor, iv.start, IntervalKind::Idle, -1, -1});
      out.push_back(iv);
      cursor = iv.end;
    }
    if (cursor < timeline.makespan)
      out.push_back({w, cursor, timeline.makespan, IntervalKind::Idle, -1, -1});
  }
  out.insert(out.end(), rest.begin(), rest.end());
  timeline.intervals = std::move(out);
}

Timeline greedy_schedule(std::vector<TaskInstance> tasks, const PartitionFamily& family) {
  const PartitionSpec& spec = family.spec();
  int top = family.max_level();
  std::vector<std::deque<const TaskInstance*>> queues(top + 1);
  for (const TaskInstance& task : tasks) {
    if (task.level < 0 || task.level > top)
      throw UnschedulableTask("task " + std::to_string(task.id) + " at level " +
                              std::to_string(task.level) + " has no matching group size");
    if (!(task.duration > 0.0))
      throw InvalidArgs("task durations must be positive");
    queues[task.level].push_back(&task);
  }

  Timeline timeline;
  timeline.workers = spec.workers;
  timeline.group_sizes = spec.group_sizes;

  std::priority_queue<ReadyEvent, std::vector<ReadyEvent>, std::greater<ReadyEvent>> ready;
  const std::vector<Group>& top_groups = family.groups(top);
  for (std::size_t gi = 0; gi < top_groups.size(); ++gi)
    ready.push({0.0, top_groups[gi].root(), top, static_cast<int>(gi)});

  double makespan = 0.0;
  while (!ready.empty()) {
    ReadyEvent ev = ready.top();
    ready.pop();
    const Group& group = family.groups(ev.level)[ev.group_index];
    if (!group.is_remainder && !queues[ev.level].empty()) {
      const TaskInstance* task = queues[ev.level].front();
      queues[ev.level].pop_front();
      double end = ev.time + task->duration;
      for (int rank = group.first; rank <= group.last(); ++rank)
        timeline.intervals.push_back(
            {rank, ev.time, end, IntervalKind::Active, task->id, task->level});
      timeline.assignments.push_back({ev.time, task->id, task->level, group.root()});
      makespan = std::max(makespan, end);
      ready.push({end, group.root(), ev.level, ev.group_index});
    } else {
      // level exhausted here (or remainder group): descend one partition level
      timeline.descents.push_back({ev.time, group.root(), ev.level});
      if (ev.level == 0) continue;  // leaves the run; becomes idle
      const std::vector<Group>& below = family.groups(ev.level - 1);
      for (std::size_t gi = 0; gi < below.size(); ++gi)
        if (below[gi].first >= group.first && below[gi].last() <= group.last())
          ready.push({ev.time, below[gi].root(), ev.level - 1, static_cast<int>(gi)});
    }
  }

  for (int level = 0; level <= top; ++level)
    if (!queues[level].empty())
      throw UnschedulableTask("level " + std::to_string(level) +
                              " tasks were never assigned");

  timeline.makespan = makespan;
  fill_idle_gaps(timeline);
  return timeline;
}

WorkBounds work_bounds(std::span<const TaskInstance> tasks, const PartitionSpec& spec) {
  spec.validate();
  WorkBounds bounds;
  double longest = 0.0;
  for (const TaskInstance& task : tasks) {
    if (task.level < 0 || task.level > spec.max_level())
      throw UnschedulableTask("task level outside the group-size ladder");
    bounds.total_work += spec.group_sizes[task.level] * task.duration;
    longest = std::max(longest, task.duration);
  }
  bounds.lower_bound = std::max(bounds.total_work / spec.workers, longest);
  return bounds;
}

namespace {

struct OracleTask {
  int procs;
  double duration;
};

struct OracleSearch {
  int workers;
  double best;
  std::vector<OracleTask> tasks;
  std::vector<char> used;

  void dfs(std::vector<double>& free_times, double placed_makespan, double remaining_work) {
    bool any = false;
    double prev_procs = -1, prev_dur = -1;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (used[i]) continue;
      any = true;
      // identical pending tasks are interchangeable
      if (tasks[i].procs == prev_procs && tasks[i].duration == prev_dur) continue;
      prev_procs = tasks[i].procs;
      prev_dur = tasks[i].duration;

      double start = free_times[tasks[i].procs - 1];
      double finish = start + tasks[i].duration;
      double new_makespan = std::max(placed_makespan, finish);
      double busy = 0.0;
      for (std::size_t w = 0; w < free_times.size(); ++w)
        busy += (w < static_cast<std::size_t>(tasks[i].procs)) ? finish : free_times[w];
      double work_bound = (busy + remaining_work - tasks[i].procs * tasks[i].duration) / workers;
      if (std::max(new_makespan, work_bound) >= best) continue;

      std::vector<double> next(free_times);
      for (int w = 0; w < tasks[i].procs; ++w) next[w] = finish;
      std::sort(next.begin(), next.end());
      used[i] = 1;
      dfs(next, new_makespan, remaining_work - tasks[i].procs * tasks[i].duration);
      used[i] = 0;
    }
    if (!any) best = std::min(best, placed_makespan);
  }
};

}  // namespace

double optimal_makespan_bruteforce(std::span<const TaskInstance> tasks,
                                   const PartitionSpec& spec, OracleCaps caps) {
  spec.validate();
  if (static_cast<int>(tasks.size()) > caps.max_tasks)
    throw InstanceTooLarge("instance has " + std::to_string(tasks.size()) +
                           " tasks, oracle cap is " + std::to_string(caps.max_tasks));
  if (spec.workers > caps.max_workers)
    throw InstanceTooLarge("instance has " + std::to_string(spec.workers) +
                           " workers, oracle cap is " + std::to_string(caps.max_workers));
  if (tasks.empty()) return 0.0;

  OracleSearch search;
  search.workers = spec.workers;
  for (const TaskInstance& task : tasks) {
    if (task.level < 0 || task.level > spec.max_level())
      throw UnschedulableTask("task level outside the group-size ladder");
    search.tasks.push_back({spec.group_sizes[task.level], task.duration});
  }
  std::sort(search.tasks.begin(), search.tasks.end(), [](const OracleTask& a, const OracleTask& b) {
    if (a.procs != b.procs) return a.procs < b.procs;
    return a.duration < b.duration;
  });
  search.used.assign(search.tasks.size(), 0);

  // upper bound: place tasks longest-first on the earliest-available workers
  std::vector<OracleTask> by_length(search.tasks);
  std::sort(by_length.begin(), by_length.end(),
            [](const OracleTask& a, const OracleTask& b) { return a.duration > b.duration; });
  std::vector<double> free_times(spec.workers, 0.0);
  double heuristic = 0.0;
  double remaining = 0.0;
  for (const OracleTask& task : by_length) {
    double finish = free_times[task.procs - 1] + task.duration;
    for (int w = 0; w < task.procs; ++w) free_times[w] = finish;
    std::sort(free_times.begin(), free_times.end());
    heuristic = std::max(heuristic, finish);
    remaining += task.procs * task.duration;
  }
  search.best = heuristic;

  std::vector<double> zeros(spec.workers, 0.0);
  search.dfs(zeros, 0.0, remaining);
  return search.best;
}

ApproximationCheck verify_two_approximation(const std::vector<TaskInstance>& tasks,
                                            const PartitionFamily& family, OracleCaps caps) {
  ApproximationCheck check;
  check.greedy = greedy_schedule(tasks, family).makespan;
  check.optimal = optimal_makespan_bruteforce(tasks, family.spec(), caps);
  check.ratio = check.optimal > 0.0 ? check.greedy / check.optimal : 1.0;
  if (check.ratio >= 2.0 + 1e-12)
    throw ApproximationViolation("greedy/optimal ratio " + std::to_string(check.ratio) +
                                 " reached 2");
  return check;
}

bool verify_no_idle_before_exhaustion(const Timeline& timeline,
                                      std::span<const TaskInstance> tasks) {
  if (tasks.empty()) return true;
  double last_assign = timeline.last_assignment_time();
  for (const TimelineInterval& iv : timeline.intervals)
    if (iv.kind == IntervalKind::Idle && iv.start < last_assign - 1e-12) return false;
  return true;
}

}  // namespace mlmc
