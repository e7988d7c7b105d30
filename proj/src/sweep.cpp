#include "mlmc/sweep.hpp"

#include <string>

namespace mlmc {

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.nodes.empty()) throw InvalidArgs("sweep needs at least one node count");
  if (spec.node_size < 1) throw InvalidArgs("node size must be >= 1");
  if (spec.base_samples.empty()) throw InvalidArgs("sweep needs base sample sizes");

  SweepResult result;
  for (int nodes : spec.nodes) {
    if (nodes < 1) throw InvalidArgs("node counts must be >= 1");
    long long multiplier =
        spec.mode == SweepSpec::Mode::Weak ? nodes : spec.strong_multiplier;

    RunConfig config = spec.base;
    config.partition.workers = nodes * spec.node_size;
    config.estimator.initial_samples = scale_samples(spec.base_samples, multiplier);
    config.estimator.initial_levels =
        static_cast<int>(config.estimator.initial_samples.size()) - 1;
    config.mode = RunMode::Simulate;
    config.capture_timeline = false;
    config.capture_message_log = false;

    RunReport report = run_mlmc(config);

    SweepPoint point;
    point.workers = config.partition.workers;
    point.multiplier = multiplier;
    point.wall = report.wall_time;
    // serial replay of the same workload: one worker runs W_T core-seconds
    point.speedup = speedup(report.core_time.active, report.wall_time);
    point.efficiency = report.efficiency;
    point.active = report.core_time.active;
    point.idle = report.core_time.idle;
    point.manage = report.core_time.manage;
    point.estimate = report.estimate;
    point.achieved_error = report.error_estimate;
    result.points.push_back(point);
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace mlmc
