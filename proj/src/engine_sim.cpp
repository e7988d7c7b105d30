#include <algorithm>
#include <map>
#include <memory>
#include <queue>
#include <set>

#include "engine.hpp"

namespace mlmc::detail {

namespace {

// Virtual-time discrete-event execution of the duty protocol. Deliveries at
// one instant are applied before any coordinator processing at that instant,
// so coordinator inboxes see complete arrival sets and can break ties by
// sender id. Everything is deterministic.
class SimulateEngine {
 public:
  explicit SimulateEngine(const EngineContext& ctx) : ctx_(ctx) {
    const RunConfig& config = *ctx_.config;
    int workers = ctx_.family->workers();
    int coordinators = ctx_.tree->coordinator_count();

    MasterOptions options;
    options.adaptive = config.adaptive;
    options.max_iterations = config.max_iterations;
    master_ = std::make_unique<CoordinatorProtocol>(
        0, ctx_.routing, &config.batch, EstimatorState::initial(config.estimator), options);

    std::vector<long long> initial(config.estimator.max_levels + 1, 0);
    for (int l = 0; l <= config.estimator.initial_levels; ++l)
      initial[l] = config.estimator.initial_samples[l];
    for (int n = 1; n <= coordinators; ++n)
      coordinators_.push_back(std::make_unique<CoordinatorProtocol>(n, ctx_.routing,
                                                                    &config.batch, initial));
    for (int rank = 1; rank <= workers; ++rank)
      workers_.push_back(std::make_unique<WorkerProtocol>(rank, ctx_.routing));

    coordinator_state_.resize(coordinators + 1);
    if (config.capture_timeline) {
      timeline_.emplace();
      timeline_->workers = workers;
      timeline_->group_sizes = ctx_.family->spec().group_sizes;
    }
  }

  RunReport run() {
    for (auto& worker : workers_) dispatch(worker->on_start(), 0.0);
    for (std::size_t n = 1; n < coordinator_state_.size(); ++n)
      dispatch(coordinators_[n - 1]->on_start(), 0.0);
    dispatch(master_->on_start(), 0.0);

    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      switch (ev.kind) {
        case Event::Deliver: deliver(ev); break;
        case Event::BatchDone: batch_done(ev); break;
        case Event::Process: coordinator_process(ev); break;
      }
    }

    if (!master_->exited())
      throw ProtocolViolation("run ended with the master still active");
    for (const auto& worker : workers_)
      if (!worker->exited())
        throw ProtocolViolation("run ended with worker " + std::to_string(worker->rank()) +
                                " still active");

    return assemble();
  }

 private:
  struct Event {
    enum Kind { Deliver = 0, BatchDone = 1, Process = 2 };
    double time = 0.0;
    int kind = Deliver;
    long long seq = 0;
    Envelope env;       // Deliver
    int endpoint = 0;   // BatchDone (worker rank) / Process (coordinator endpoint)
    EvalRequest eval;   // BatchDone

    bool operator>(const Event& other) const {
      if (time != other.time) return time > other.time;
      if (kind != other.kind) return kind > other.kind;
      return seq > other.seq;
    }
  };

  struct InboxEntry {
    double arrival = 0.0;
    int from = 0;
    long long seq = 0;
    Envelope env;
    bool operator<(const InboxEntry& other) const {
      if (arrival != other.arrival) return arrival < other.arrival;
      if (from != other.from) return from < other.from;
      return seq < other.seq;
    }
  };

  struct CoordinatorState {
    std::set<InboxEntry> inbox;
    double busy_until = 0.0;
    bool scheduled = false;
  };

  bool is_worker(EndpointId id) const { return id >= 1 && id <= ctx_.family->workers(); }

  int coordinator_slot(EndpointId id) const {
    return id == 0 ? 0 : id - ctx_.family->workers();
  }

  CoordinatorProtocol& coordinator(int slot) {
    return slot == 0 ? *master_ : *coordinators_[slot - 1];
  }

  void push_deliver(const Envelope& env, double time) {
    Event ev;
    ev.time = time;
    ev.kind = Event::Deliver;
    ev.seq = ++seq_;
    ev.env = env;
    events_.push(ev);
  }

  void dispatch(const Actions& actions, double time) {
    for (const Envelope& env : actions.sends) push_deliver(env, time);
  }

  void deliver(const Event& ev) {
    if (ctx_.config->capture_message_log)
      log_.push_back({ev.time, ev.env.from, ev.env.to, ev.env.msg});

    if (is_worker(ev.env.to)) {
      WorkerProtocol& worker = *workers_[ev.env.to - 1];
      Actions actions = worker.on_message(ev.env);
      dispatch(actions, ev.time);
      if (actions.eval) start_batch(worker, *actions.eval, ev.time);
      return;
    }

    int slot = coordinator_slot(ev.env.to);
    CoordinatorState& state = coordinator_state_[slot];
    InboxEntry entry;
    entry.arrival = ev.time;
    entry.from = ev.env.from;
    entry.seq = ++seq_;
    entry.env = ev.env;
    state.inbox.insert(entry);
    if (!state.scheduled) {
      state.scheduled = true;
      Event process;
      process.time = std::max(ev.time, state.busy_until);
      process.kind = Event::Process;
      process.seq = ++seq_;
      process.endpoint = slot;
      events_.push(process);
    }
  }

  void coordinator_process(const Event& ev) {
    CoordinatorState& state = coordinator_state_[ev.endpoint];
    CoordinatorProtocol& proto = coordinator(ev.endpoint);
    InboxEntry entry = *state.inbox.begin();
    state.inbox.erase(state.inbox.begin());

    double done = ev.time + ctx_.config->coordinator_overhead;
    state.busy_until = done;

    std::size_t iterations_before = master_->iterations().size();
    Actions actions = proto.on_message(entry.env);
    dispatch(actions, done);
    if (ev.endpoint == 0 && master_->iterations().size() > iterations_before)
      iteration_ends_.push_back(done);

    if (!state.inbox.empty()) {
      Event next;
      next.time = done;
      next.kind = Event::Process;
      next.seq = ++seq_;
      next.endpoint = ev.endpoint;
      events_.push(next);
    } else {
      state.scheduled = false;
    }
    end_time_ = std::max(end_time_, done);
  }

  void start_batch(WorkerProtocol& worker, const EvalRequest& eval, double time) {
    int rank = worker.rank();
    int level = eval.level;
    bool root = ctx_.family->is_root(rank, level);
    int processors = ctx_.family->spec().group_sizes[level];
    double wall = 0.0;
    for (long long index = eval.first; index <= eval.last; ++index) {
      SampleValue value = ctx_.model->evaluate(level, index, ctx_.config->seed);
      wall += value.duration;
      if (root)
        worker.accumulate(level, coupled_difference(value, level),
                          value.duration * processors);
    }
    active_core_seconds_ += wall;
    if (timeline_) {
      timeline_->intervals.push_back(
          {rank, time, time + wall, IntervalKind::Active, eval.first, level});
      if (root) timeline_->assignments.push_back({time, eval.first, level, rank});
    }

    Event done;
    done.time = time + wall;
    done.kind = Event::BatchDone;
    done.seq = ++seq_;
    done.endpoint = rank;
    done.eval = eval;
    events_.push(done);
    end_time_ = std::max(end_time_, time + wall);
  }

  void batch_done(const Event& ev) {
    WorkerProtocol& worker = *workers_[ev.endpoint - 1];
    Actions actions = worker.on_batch_done();
    dispatch(actions, ev.time);
  }

  RunReport assemble() {
    RunReport report;
    fill_report_from_master(report, *master_, ctx_);
    report.wall_time = end_time_;
    report.iteration_end_times = iteration_ends_;

    int workers = ctx_.family->workers();
    int managers = 1 + ctx_.tree->coordinator_count();
    report.core_time.active = active_core_seconds_;
    report.core_time.manage = managers * end_time_;
    report.core_time.idle = workers * end_time_ - active_core_seconds_;
    report.core_time.total_processors = workers + managers;
    report.core_time.wall = end_time_;
    report.efficiency =
        end_time_ > 0.0 ? efficiency(report.core_time) : 0.0;

    if (timeline_) {
      timeline_->makespan = end_time_;
      fill_idle_gaps(*timeline_);
      timeline_->intervals.push_back({0, 0.0, end_time_, IntervalKind::Manage, -1, -1});
      for (int c = 1; c <= ctx_.tree->coordinator_count(); ++c)
        timeline_->intervals.push_back(
            {workers + c, 0.0, end_time_, IntervalKind::Manage, -1, -1});
      report.timeline = std::move(*timeline_);
    }
    report.message_log = std::move(log_);
    return report;
  }

  EngineContext ctx_;
  std::unique_ptr<CoordinatorProtocol> master_;
  std::vector<std::unique_ptr<CoordinatorProtocol>> coordinators_;
  std::vector<std::unique_ptr<WorkerProtocol>> workers_;
  std::vector<CoordinatorState> coordinator_state_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  long long seq_ = 0;
  double end_time_ = 0.0;
  double active_core_seconds_ = 0.0;
  std::vector<double> iteration_ends_;
  std::optional<Timeline> timeline_;
  std::vector<LoggedMessage> log_;
};

}  // namespace

RunReport run_simulate(const EngineContext& ctx) {
  SimulateEngine engine(ctx);
  return engine.run();
}

void fill_report_from_master(RunReport& report, const CoordinatorProtocol& master,
                             const EngineContext& ctx) {
  const EstimatorState& state = master.state();
  report.tolerance = state.config.tolerance;
  report.seed = ctx.config->seed;
  report.estimate = telescoping_estimate(state);
  report.iterations = static_cast<int>(master.iterations().size());
  report.converged = master.converged();
  report.error_estimate = master.final_error_estimate();
  for (const Group& g : ctx.family->below_q0_groups())
    report.permanently_idle_roots.push_back(g.root());

  for (int l = 0; l <= state.current_level; ++l) {
    const LevelStats& stats = state.per_level[l];
    LevelReport level;
    level.level = l;
    level.count = stats.count;
    level.mean_y = stats.count > 0 ? stats.mean() : 0.0;
    level.var_y = stats.count >= 2 ? sample_variance(stats) : 0.0;
    level.mean_cost = stats.count > 0 ? stats.mean_cost() : 0.0;
    level.sum_y = stats.sum_y + stats.comp_y;
    level.sum_y2 = stats.sum_y2 + stats.comp_y2;
    level.sum_cost = stats.sum_cost + stats.comp_cost;
    report.levels.push_back(level);
  }
  return;
}

}  // namespace mlmc::detail
