#include "mlmc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mlmc {

namespace {

// Neumaier-compensated add: sum/comp pair absorbs the rounding of each step.
void compensated_add(double& sum, double& comp, double value) {
  double t = sum + value;
  if (std::abs(sum) >= std::abs(value)) {
    comp += (sum - t) + value;
  } else {
    comp += (value - t) + sum;
  }
  sum = t;
}

// Integer ceiling with a tiny tolerance so exact-math integers survive the
// log/division round trip (e.g. log2(8) evaluating to 3 + 1ulp).
double ceil_tol(double x, double tol = 1e-9) { return std::ceil(x - tol); }

}  // namespace

void EstimatorConfig::validate() const {
  if (!(tolerance > 0.0)) throw InvalidArgs("tolerance must be positive");
  if (!(refinement_factor > 1.0)) throw InvalidArgs("refinement factor must exceed 1");
  if (max_levels < 0) throw InvalidArgs("max_levels must be >= 0");
  if (initial_levels < 0 || initial_levels > max_levels)
    throw InvalidArgs("initial_levels must satisfy 0 <= L0 <= max_levels");
  if (static_cast<int>(initial_samples.size()) != initial_levels + 1)
    throw InvalidArgs("initial_samples must have exactly initial_levels+1 entries");
  for (long long n : initial_samples)
    if (n < 2) throw InvalidArgs("initial sample counts must be >= 2");
  if (!(safety_factor >= 1.0)) throw InvalidArgs("safety_factor must be >= 1");
  if (!(min_alpha > 0.0)) throw InvalidArgs("min_alpha must be positive");
}

void LevelStats::add(double y, double cost) {
  compensated_add(sum_y, comp_y, y);
  compensated_add(sum_y2, comp_y2, y * y);
  compensated_add(sum_cost, comp_cost, cost);
  ++count;
}

void LevelStats::merge(const LevelStats& other) {
  compensated_add(sum_y, comp_y, other.sum_y);
  compensated_add(sum_y, comp_y, other.comp_y);
  compensated_add(sum_y2, comp_y2, other.sum_y2);
  compensated_add(sum_y2, comp_y2, other.comp_y2);
  compensated_add(sum_cost, comp_cost, other.sum_cost);
  compensated_add(sum_cost, comp_cost, other.comp_cost);
  count += other.count;
}

double LevelStats::mean() const {
  if (count < 1) throw EmptyLevel("mean of level " + std::to_string(level) + " with no samples");
  return (sum_y + comp_y) / static_cast<double>(count);
}

double LevelStats::mean_cost() const {
  if (count < 1)
    throw EmptyLevel("mean cost of level " + std::to_string(level) + " with no samples");
  return (sum_cost + comp_cost) / static_cast<double>(count);
}

EstimatorState EstimatorState::initial(EstimatorConfig config) {
  config.validate();
  EstimatorState state;
  state.current_level = config.initial_levels;
  state.per_level.resize(config.max_levels + 1);
  for (int l = 0; l <= config.max_levels; ++l) state.per_level[l].level = l;
  state.config = std::move(config);
  return state;
}

double telescoping_estimate(const EstimatorState& state) {
  double estimate = 0.0;
  for (int l = 0; l <= state.current_level; ++l) {
    const LevelStats& stats = state.per_level[l];
    if (stats.count < 1)
      throw EmptyLevel("level " + std::to_string(l) + " has no samples");
    estimate += stats.mean();
  }
  return estimate;
}

double sample_variance(const LevelStats& stats) {
  if (stats.count < 2)
    throw InsufficientSamples("sample variance needs at least 2 samples, level " +
                              std::to_string(stats.level) + " has " +
                              std::to_string(stats.count));
  double n = static_cast<double>(stats.count);
  double mean = (stats.sum_y + stats.comp_y) / n;
  double v = (stats.sum_y2 + stats.comp_y2) / n - mean * mean;
  return std::max(v, 0.0);
}

int required_levels(double c, double alpha, double s, double eps) {
  if (!(c > 0.0) || !(alpha > 0.0) || !(eps > 0.0))
    throw InvalidArgs("required_levels needs positive c, alpha and eps");
  if (!(s > 1.0)) throw InvalidArgs("required_levels needs s > 1");
  double levels = ceil_tol(std::log(std::sqrt(2.0) * c / eps) / (alpha * std::log(s)));
  return levels <= 0.0 ? 0 : static_cast<int>(levels);
}

std::vector<double> optimal_sample_sizes_raw(const std::vector<double>& variances,
                                             const std::vector<double>& costs, double eps) {
  if (variances.size() != costs.size())
    throw DimensionMismatch("variance and cost lists differ in length");
  if (!(eps > 0.0)) throw InvalidArgs("eps must be positive");
  double cross = 0.0;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(costs[l] > 0.0))
      throw NonpositiveCost("cost of level " + std::to_string(l) + " is not positive");
    if (variances[l] < 0.0) throw InvalidArgs("variances must be nonnegative");
    cross += std::sqrt(variances[l] * costs[l]);
  }
  std::vector<double> raw(variances.size());
  for (std::size_t l = 0; l < variances.size(); ++l)
    raw[l] = 2.0 / (eps * eps) * std::sqrt(variances[l] / costs[l]) * cross;
  return raw;
}

std::vector<long long> optimal_sample_sizes(const std::vector<double>& variances,
                                            const std::vector<double>& costs, double eps) {
  std::vector<double> raw = optimal_sample_sizes_raw(variances, costs, eps);
  std::vector<long long> sizes(raw.size());
  for (std::size_t l = 0; l < raw.size(); ++l)
    sizes[l] = std::max<long long>(1, static_cast<long long>(std::ceil(raw[l])));
  return sizes;
}

DecayFit fit_decay(const std::vector<double>& level_means, double s, double min_alpha) {
  if (!(s > 1.0)) throw InvalidArgs("fit_decay needs s > 1");
  double log_s = std::log(s);
  // usable points: l >= 1 with a nonzero mean
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t l = 1; l < level_means.size(); ++l) {
    double m = std::abs(level_means[l]);
    if (m <= 0.0) continue;
    double x = static_cast<double>(l) * log_s;
    double y = std::log(m);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw InsufficientLevels("decay fit needs at least 2 nonzero means above level 0");
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  DecayFit fit;
  fit.alpha = std::max(-slope, min_alpha);
  fit.c = std::exp(intercept);
  return fit;
}

AdaptiveUpdate adaptive_update(const EstimatorState& state) {
  const EstimatorConfig& cfg = state.config;
  const double s = cfg.refinement_factor;
  const int sampled = state.current_level;

  std::vector<double> means(sampled + 1);
  for (int l = 0; l <= sampled; ++l) {
    if (state.per_level[l].count < 2)
      throw InsufficientSamples("adaptive update needs >= 2 samples on level " +
                                std::to_string(l));
    means[l] = state.per_level[l].mean();
  }

  AdaptiveUpdate update;
  update.fit = fit_decay(means, s, cfg.min_alpha);
  update.new_level = std::min(required_levels(update.fit.c, update.fit.alpha, s, cfg.tolerance),
                              cfg.max_levels);

  // Per-level variance and mean cost; levels beyond the sampled range are
  // extrapolated with the fitted decay and the work-growth exponent.
  int top = std::max(update.new_level, sampled);
  std::vector<double> variances(top + 1), costs(top + 1);
  for (int l = 0; l <= sampled; ++l) {
    variances[l] = sample_variance(state.per_level[l]);
    costs[l] = state.per_level[l].mean_cost();
  }
  for (int l = sampled + 1; l <= top; ++l) {
    double steps = static_cast<double>(l - sampled);
    variances[l] = variances[sampled] * std::pow(s, -2.0 * update.fit.alpha * steps);
    costs[l] = costs[sampled] * std::pow(s, cfg.work_growth * steps);
  }

  variances.resize(update.new_level + 1);
  costs.resize(update.new_level + 1);
  std::vector<long long> targets = optimal_sample_sizes(variances, costs, cfg.tolerance);
  update.new_samples.resize(targets.size());
  for (std::size_t l = 0; l < targets.size(); ++l)
    update.new_samples[l] = static_cast<long long>(
        std::ceil(static_cast<double>(targets[l]) * cfg.safety_factor));

  double statistical = 0.0;
  for (int l = 0; l <= sampled; ++l)
    statistical +=
        sample_variance(state.per_level[l]) / static_cast<double>(state.per_level[l].count);
  update.bias_estimate =
      std::abs(means[sampled]) / (std::pow(s, update.fit.alpha) - 1.0);
  update.error_estimate =
      std::sqrt(update.bias_estimate * update.bias_estimate + statistical);

  bool counts_ok = true;
  if (update.new_level <= sampled) {
    for (int l = 0; l <= update.new_level; ++l)
      if (update.new_samples[l] > state.per_level[l].count) counts_ok = false;
  } else {
    counts_ok = false;
  }
  update.converged = counts_ok && update.error_estimate <= cfg.tolerance;
  return update;
}

}  // namespace mlmc
