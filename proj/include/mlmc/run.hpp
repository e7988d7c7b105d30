#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlmc/batching.hpp"
#include "mlmc/estimator.hpp"
#include "mlmc/metrics.hpp"
#include "mlmc/models.hpp"
#include "mlmc/partition.hpp"
#include "mlmc/protocol.hpp"
#include "mlmc/scheduler.hpp"

namespace mlmc {

enum class RunMode { Simulate, Execute };

struct RunConfig {
  EstimatorConfig estimator;
  PartitionSpec partition;
  BatchPolicy batch;
  ModelSpec model;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Simulate;
  bool adaptive = false;
  int max_iterations = 30;

  bool use_coordinator_tree = false;
  int comm_limit = 48;

  // simulate-mode cost per message handled by the master or a coordinator
  double coordinator_overhead = 0.0;
  // execute mode: scale factor on pause-model waits
  double execute_time_scale = 1.0;

  bool capture_timeline = true;
  bool capture_message_log = false;

  void validate() const;
};

struct LoggedMessage {
  double time = 0.0;
  EndpointId from = 0;
  EndpointId to = 0;
  DutyMessage msg;
};

struct LevelReport {
  int level = 0;
  long long count = 0;
  double mean_y = 0.0;
  double var_y = 0.0;  // 0 when fewer than 2 samples
  double mean_cost = 0.0;
  double sum_y = 0.0;
  double sum_y2 = 0.0;
  double sum_cost = 0.0;
};

struct RunReport {
  double estimate = 0.0;
  double tolerance = 0.0;
  std::vector<LevelReport> levels;
  double wall_time = 0.0;
  CoreTimeSplit core_time;
  double efficiency = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;

  bool converged = false;
  double error_estimate = 0.0;
  std::vector<double> iteration_end_times;  // virtual (or measured) barrier times
  std::vector<int> permanently_idle_roots;

  std::optional<Timeline> timeline;
  std::vector<LoggedMessage> message_log;
};

// Full duty-protocol execution of (A)MLMC on the configured model; simulate
// mode multiplexes all endpoints on one thread under virtual time, execute
// mode runs one thread per endpoint over blocking mailboxes. Both modes drive
// the same protocol state machines.
RunReport run_mlmc(const RunConfig& config);

}  // namespace mlmc
