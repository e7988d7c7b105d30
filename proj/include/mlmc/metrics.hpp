#pragma once

#include <ostream>
#include <vector>

#include "mlmc/errors.hpp"

namespace mlmc {

// Core-time accounting of one run. total_processors counts every endpoint
// (workers, master and any tree coordinators); coordinators contribute their
// entire lifetime to `manage`.
struct CoreTimeSplit {
  double active = 0.0;  // core-seconds
  double idle = 0.0;
  double manage = 0.0;
  int total_processors = 0;
  double wall = 0.0;  // seconds

  double conservation_defect() const;  // |a + i + m - p*t_w| / (p*t_w)
};

// A(p) = active / (p * t_w).
double efficiency(const CoreTimeSplit& split);

// S(p) = t_w(1) / t_w(p).
double speedup(double serial_wall, double parallel_wall);

// N_l = C * N*_l elementwise.
std::vector<long long> scale_samples(const std::vector<long long>& base, long long multiplier);

// Wall time credited for the error actually achieved relative to a reference.
double error_adjusted_time(double wall, double achieved_error, double reference_error);

struct SweepPoint {
  int workers = 0;           // p
  long long multiplier = 1;  // C
  double wall = 0.0;
  double speedup = 0.0;
  double efficiency = 0.0;
  double active = 0.0;
  double idle = 0.0;
  double manage = 0.0;
  double estimate = 0.0;
  double achieved_error = 0.0;
};

void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out);

}  // namespace mlmc
