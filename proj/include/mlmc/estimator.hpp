#pragma once

#include <optional>
#include <vector>

#include "mlmc/errors.hpp"

namespace mlmc {

// Configuration of the multilevel estimator. Levels are indexed 0..max_levels;
// the adaptive loop may not grow the hierarchy past max_levels.
struct EstimatorConfig {
  double tolerance = 1e-3;         // target total error (QoI units)
  double refinement_factor = 2.0;  // size ratio s between consecutive levels, > 1
  int max_levels = 0;              // M
  int initial_levels = 0;          // L0 <= M
  std::vector<long long> initial_samples;  // one entry per level 0..L0, each >= 2
  double safety_factor = 1.3;      // extra samples applied on each adaptive update
  double min_alpha = 1e-3;         // lower clamp for the fitted decay rate
  double work_growth = 3.0;        // cost extrapolation exponent for unsampled levels

  void validate() const;
};

// Streaming per-level accumulator. Only sums are kept, never samples; second
// moments make the sample variance computable after reductions. Accumulation
// is compensated (Neumaier) so totals are independent of summation order to
// well below the tolerances used in tests.
struct LevelStats {
  int level = 0;
  long long count = 0;
  double sum_y = 0.0;
  double sum_y2 = 0.0;
  double sum_cost = 0.0;
  // compensation carries; internal, zero by default
  double comp_y = 0.0;
  double comp_y2 = 0.0;
  double comp_cost = 0.0;

  void add(double y, double cost);
  void merge(const LevelStats& other);
  double mean() const;       // requires count >= 1
  double mean_cost() const;  // requires count >= 1
};

struct EstimatorState {
  EstimatorConfig config;
  int current_level = 0;  // L, finest level with committed samples
  std::vector<LevelStats> per_level;  // size config.max_levels + 1
  std::optional<double> decay_c;
  std::optional<double> decay_alpha;

  static EstimatorState initial(EstimatorConfig config);
};

struct DecayFit {
  double c = 0.0;
  double alpha = 0.0;
};

struct AdaptiveUpdate {
  int new_level = 0;                    // proposed L (already capped at M)
  std::vector<long long> new_samples;   // target N_l for l = 0..new_level
  bool converged = false;
  DecayFit fit;
  double bias_estimate = 0.0;
  double error_estimate = 0.0;          // sqrt(bias^2 + sum V_l / n_l)
};

// Sum of per-level means over levels 0..current_level.
double telescoping_estimate(const EstimatorState& state);

// Population-normalized sample variance sum_y2/n - (sum_y/n)^2, clamped at 0.
double sample_variance(const LevelStats& stats);

// Smallest L with c * s^(-alpha L) <= eps / sqrt(2), floored at 0.
int required_levels(double c, double alpha, double s, double eps);

// Per-level sample counts minimizing cost subject to a statistical error of
// eps^2/2; zero-variance levels are floored at one sample so the telescoping
// sum stays defined.
std::vector<double> optimal_sample_sizes_raw(const std::vector<double>& variances,
                                             const std::vector<double>& costs, double eps);
std::vector<long long> optimal_sample_sizes(const std::vector<double>& variances,
                                            const std::vector<double>& costs, double eps);

// Least-squares fit of log|mean_l| against l*log(s) over levels l >= 1 with
// nonzero means. Returns (c, alpha) from |mean_l| ~ c * s^(-alpha l); alpha is
// clamped below at min_alpha.
DecayFit fit_decay(const std::vector<double>& level_means, double s, double min_alpha = 1e-3);

// One step of the adaptive outer loop: refit the decay, recompute L and the
// per-level sample targets, and evaluate the convergence test.
AdaptiveUpdate adaptive_update(const EstimatorState& state);

}  // namespace mlmc
