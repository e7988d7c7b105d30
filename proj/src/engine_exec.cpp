#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "engine.hpp"

namespace mlmc::detail {

namespace {

using Clock = std::chrono::steady_clock;

class Mailbox {
 public:
  void send(Envelope env) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      queue_.push_back(std::move(env));
    }
    cv_.notify_one();
  }

  std::optional<Envelope> recv(const std::atomic<bool>& abort) {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty() || abort.load(); });
    if (queue_.empty()) return std::nullopt;
    Envelope env = std::move(queue_.front());
    queue_.pop_front();
    return env;
  }

  void wake() { cv_.notify_all(); }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Envelope> queue_;
};

// One thread per endpoint over blocking mailboxes; the identical protocol
// state machines as simulate mode, driven by real time.
class ExecuteEngine {
 public:
  explicit ExecuteEngine(const EngineContext& ctx) : ctx_(ctx) {
    const RunConfig& config = *ctx_.config;
    int workers = ctx_.family->workers();
    int coordinators = ctx_.tree->coordinator_count();
    mailboxes_.resize(1 + workers + coordinators);
    for (auto& box : mailboxes_) box = std::make_unique<Mailbox>();

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
    worker_active_.assign(workers + 1, 0.0);
    worker_intervals_.resize(workers + 1);
  }

  RunReport run() {
    start_ = Clock::now();
    std::vector<std::thread> threads;
    threads.emplace_back([this] { coordinator_main(*master_); });
    for (auto& coordinator : coordinators_)
      threads.emplace_back([this, &coordinator] { coordinator_main(*coordinator); });
    for (auto& worker : workers_)
      threads.emplace_back([this, &worker] { worker_main(*worker); });
    for (std::thread& thread : threads) thread.join();
    if (failure_) std::rethrow_exception(failure_);
    return assemble();
  }

 private:
  double now() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  void fail(std::exception_ptr error) {
    {
      std::lock_guard<std::mutex> lock(failure_mutex_);
      if (!failure_) failure_ = error;
    }
    abort_.store(true);
    for (auto& box : mailboxes_) box->wake();
  }

  void send_all(const Actions& actions) {
    for (const Envelope& env : actions.sends) {
      if (ctx_.config->capture_message_log) {
        std::lock_guard<std::mutex> lock(log_mutex_);
        log_.push_back({now(), env.from, env.to, env.msg});
      }
      mailboxes_[env.to]->send(env);
    }
  }

  void worker_main(WorkerProtocol& worker) {
    try {
      perform(worker, worker.on_start());
      while (!worker.exited() && !abort_.load()) {
        std::optional<Envelope> env = mailboxes_[worker.rank()]->recv(abort_);
        if (!env) break;
        perform(worker, worker.on_message(*env));
      }
    } catch (...) {
      fail(std::current_exception());
    }
  }

  void perform(WorkerProtocol& worker, const Actions& actions) {
    send_all(actions);
    if (!actions.eval) return;
    const EvalRequest& eval = *actions.eval;
    int rank = worker.rank();
    int level = eval.level;
    bool root = ctx_.family->is_root(rank, level);
    int processors = ctx_.family->spec().group_sizes[level];
    bool wait = ctx_.model->wait_in_execute();
    double scale = ctx_.config->execute_time_scale;

    double begin = now();
    for (long long index = eval.first; index <= eval.last && !abort_.load(); ++index) {
      auto sample_begin = Clock::now();
      SampleValue value = ctx_.model->evaluate(level, index, ctx_.config->seed);
      double cost_duration;
      if (wait) {
        std::this_thread::sleep_for(
            std::chrono::duration<double>(value.duration * scale));
        cost_duration = value.duration;
      } else {
        cost_duration = std::chrono::duration<double>(Clock::now() - sample_begin).count();
      }
      if (root)
        worker.accumulate(level, coupled_difference(value, level),
                          cost_duration * processors);
    }
    double end = now();
    {
      std::lock_guard<std::mutex> lock(account_mutex_);
      worker_active_[rank] += end - begin;
      if (ctx_.config->capture_timeline)
        worker_intervals_[rank].push_back(
            {rank, begin, end, IntervalKind::Active, eval.first, level});
    }
    perform(worker, worker.on_batch_done());
  }

  void coordinator_main(CoordinatorProtocol& coordinator) {
    try {
      send_all(coordinator.on_start());
      EndpointId self = coordinator.endpoint();
      while (!coordinator.exited() && !abort_.load()) {
        std::optional<Envelope> env = mailboxes_[self]->recv(abort_);
        if (!env) break;
        std::size_t before = coordinator.is_master() ? coordinator.iterations().size() : 0;
        Actions actions = coordinator.on_message(*env);
        if (coordinator.is_master() && coordinator.iterations().size() > before) {
          std::lock_guard<std::mutex> lock(account_mutex_);
          iteration_ends_.push_back(now());
        }
        send_all(actions);
      }
    } catch (...) {
      fail(std::current_exception());
    }
  }

  RunReport assemble() {
    RunReport report;
    fill_report_from_master(report, *master_, ctx_);
    double wall = now();
    report.wall_time = wall;
    report.iteration_end_times = iteration_ends_;

    int workers = ctx_.family->workers();
    int managers = 1 + ctx_.tree->coordinator_count();
    double active = 0.0;
    for (double a : worker_active_) active += a;
    report.core_time.active = active;
    report.core_time.manage = managers * wall;
    report.core_time.idle = workers * wall - active;
    report.core_time.total_processors = workers + managers;
    report.core_time.wall = wall;
    report.efficiency = wall > 0.0 ? efficiency(report.core_time) : 0.0;

    if (ctx_.config->capture_timeline) {
      Timeline timeline;
      timeline.workers = workers;
      timeline.group_sizes = ctx_.family->spec().group_sizes;
      timeline.makespan = wall;
      for (int rank = 1; rank <= workers; ++rank)
        timeline.intervals.insert(timeline.intervals.end(), worker_intervals_[rank].begin(),
                                  worker_intervals_[rank].end());
      fill_idle_gaps(timeline);
      timeline.intervals.push_back({0, 0.0, wall, IntervalKind::Manage, -1, -1});
      for (int c = 1; c <= ctx_.tree->coordinator_count(); ++c)
        timeline.intervals.push_back({workers + c, 0.0, wall, IntervalKind::Manage, -1, -1});
      report.timeline = std::move(timeline);
    }
    report.message_log = std::move(log_);
    return report;
  }

  EngineContext ctx_;
  std::vector<std::unique_ptr<Mailbox>> mailboxes_;
  std::unique_ptr<CoordinatorProtocol> master_;
  std::vector<std::unique_ptr<CoordinatorProtocol>> coordinators_;
  std::vector<std::unique_ptr<WorkerProtocol>> workers_;

  Clock::time_point start_;
  std::atomic<bool> abort_{false};
  std::exception_ptr failure_;
  std::mutex failure_mutex_;
  std::mutex account_mutex_;
  std::mutex log_mutex_;
  std::vector<double> worker_active_;
  std::vector<std::vector<TimelineInterval>> worker_intervals_;
  std::vector<double> iteration_ends_;
  std::vector<LoggedMessage> log_;
};

}  // namespace

RunReport run_execute(const EngineContext& ctx) {
  ExecuteEngine engine(ctx);
  return engine.run();
}

}  // namespace mlmc::detail
