#pragma once

#include <vector>

#include "mlmc/metrics.hpp"
#include "mlmc/run.hpp"

namespace mlmc {

// Weak/strong scaling driver over node counts. Weak scaling ties the sample
// multiplier C to the node count; strong scaling keeps C fixed. Speedup uses
// a serial replay baseline: the total active work of the scaled workload on
// one worker.
struct SweepSpec {
  enum class Mode { Weak, Strong };
  Mode mode = Mode::Weak;
  std::vector<int> nodes;
  int node_size = 48;
  long long strong_multiplier = 128;
  std::vector<long long> base_samples;  // N* per level
  RunConfig base;                       // partition.workers and samples set per point
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<RunReport> reports;
};

SweepResult run_sweep(const SweepSpec& spec);

}  // namespace mlmc
