#include <cmath>
#include <random>

#include <doctest.h>

#include "mlmc/estimator.hpp"

using namespace mlmc;

namespace {

LevelStats stats_from_samples(int level, const std::vector<double>& samples) {
  LevelStats stats;
  stats.level = level;
  for (double y : samples) stats.add(y, 1.0);
  return stats;
}

EstimatorState state_with_levels(const std::vector<std::pair<double, long long>>& sums) {
  EstimatorConfig config;
  config.max_levels = static_cast<int>(sums.size()) - 1;
  config.initial_levels = config.max_levels;
  config.initial_samples.assign(sums.size(), 2);
  EstimatorState state = EstimatorState::initial(config);
  for (std::size_t l = 0; l < sums.size(); ++l) {
    state.per_level[l].sum_y = sums[l].first;
    state.per_level[l].count = sums[l].second;
  }
  return state;
}

}  // namespace

TEST_CASE("telescoping estimate sums per-level means") {
  CHECK(telescoping_estimate(state_with_levels({{10.0, 5}})) == doctest::Approx(2.0));
  CHECK(telescoping_estimate(state_with_levels({{10.0, 5}, {-1.0, 2}})) ==
        doctest::Approx(1.5));
  CHECK(telescoping_estimate(state_with_levels({{0.0, 3}, {0.0, 7}})) == 0.0);
  CHECK_THROWS_AS(telescoping_estimate(state_with_levels({{10.0, 5}, {0.0, 0}})), EmptyLevel);
}

TEST_CASE("telescoping estimate is linear in the sums") {
  EstimatorState state = state_with_levels({{3.0, 4}, {-0.5, 2}, {0.125, 8}});
  double base = telescoping_estimate(state);
  for (auto& stats : state.per_level) stats.sum_y *= 2.0;
  CHECK(telescoping_estimate(state) == doctest::Approx(2.0 * base));
}

TEST_CASE("sample variance uses the 1/n normalization") {
  CHECK(sample_variance(stats_from_samples(0, {1.0, 1.0, 1.0})) == doctest::Approx(0.0));
  CHECK(sample_variance(stats_from_samples(0, {0.0, 2.0})) == doctest::Approx(1.0));
  CHECK(sample_variance(stats_from_samples(0, {1.0, 2.0, 3.0})) ==
        doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(sample_variance(stats_from_samples(0, {1.0})), InsufficientSamples);
}

TEST_CASE("sample variance is nonnegative and vanishes only for constant data") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(rng() % 40);
    std::vector<double> samples;
    bool constant = trial % 4 == 0;
    double first = value(rng);
    for (int i = 0; i < n; ++i) samples.push_back(constant ? first : value(rng));
    double v = sample_variance(stats_from_samples(0, samples));
    CHECK(v >= 0.0);
    if (constant) CHECK(v <= 1e-9 * std::max(1.0, first * first));
  }
}

TEST_CASE("required levels matches the closed form") {
  CHECK(required_levels(1.0, 1.0, 2.0, std::sqrt(2.0)) == 0);
  CHECK(required_levels(1.0, 1.0, 2.0, std::sqrt(2.0) / 8.0) == 3);
  CHECK(required_levels(2.0, 2.0, 2.0, std::sqrt(2.0)) == 1);
  // negative arguments of the log clamp at zero
  CHECK(required_levels(0.01, 1.0, 2.0, 10.0) == 0);
  CHECK_THROWS_AS(required_levels(-1.0, 1.0, 2.0, 1.0), InvalidArgs);
}

TEST_CASE("required levels never shrinks as the tolerance tightens") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> unit(0.1, 4.0);
  for (int trial = 0; trial < 300; ++trial) {
    double c = unit(rng), alpha = unit(rng), s = 1.0 + unit(rng);
    double eps = unit(rng);
    CHECK(required_levels(c, alpha, s, eps / 2.0) >= required_levels(c, alpha, s, eps));
  }
}

TEST_CASE("optimal sample sizes match the closed form") {
  CHECK(optimal_sample_sizes({1.0}, {1.0}, 1.0) == std::vector<long long>{2});
  CHECK(optimal_sample_sizes({1.0, 1.0}, {1.0, 4.0}, 1.0) == std::vector<long long>{6, 3});
  CHECK_THROWS_AS(optimal_sample_sizes({1.0}, {1.0, 2.0}, 1.0), DimensionMismatch);
  CHECK_THROWS_AS(optimal_sample_sizes({1.0}, {0.0}, 1.0), NonpositiveCost);
}

TEST_CASE("zero-variance levels keep one sample") {
  std::vector<long long> sizes = optimal_sample_sizes({0.0, 1.0}, {1.0, 1.0}, 1.0);
  CHECK(sizes[0] == 1);
  CHECK(sizes[1] >= 1);
}

TEST_CASE("halving the tolerance quadruples the raw sizes exactly") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unit(0.25, 8.0);
  for (int trial = 0; trial < 100; ++trial) {
    int levels = 1 + static_cast<int>(rng() % 4);
    std::vector<double> variances, costs;
    for (int l = 0; l < levels; ++l) {
      variances.push_back(unit(rng));
      costs.push_back(unit(rng));
    }
    double eps = unit(rng);
    std::vector<double> raw = optimal_sample_sizes_raw(variances, costs, eps);
    std::vector<double> tightened = optimal_sample_sizes_raw(variances, costs, eps / 2.0);
    for (int l = 0; l < levels; ++l) CHECK(tightened[l] == 4.0 * raw[l]);
  }
}

TEST_CASE("joint rescaling V*k, C/k moves sizes only through the level ratio") {
  std::vector<double> variances{1.0, 0.5, 0.25};
  std::vector<double> costs{1.0, 2.0, 4.0};
  std::vector<double> raw = optimal_sample_sizes_raw(variances, costs, 0.5);
  std::vector<double> scaled_v, scaled_c;
  const double k = 4.0;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    scaled_v.push_back(variances[l] * k);
    scaled_c.push_back(costs[l] / k);
  }
  std::vector<double> raw_scaled = optimal_sample_sizes_raw(scaled_v, scaled_c, 0.5);
  // the cross term is invariant, the per-level factor picks up exactly k
  for (std::size_t l = 0; l < raw.size(); ++l) CHECK(raw_scaled[l] == k * raw[l]);
}

TEST_CASE("decay fit recovers exact log-linear data") {
  std::vector<double> means{123.0};  // level 0 is ignored by the fit
  for (int l = 1; l <= 3; ++l) means.push_back(8.0 * std::pow(2.0, -l));
  DecayFit fit = fit_decay(means, 2.0);
  CHECK(fit.c == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-9));

  // signs do not matter, only magnitudes
  std::vector<double> negated{123.0, -4.0, 2.0, -1.0};
  DecayFit from_negated = fit_decay(negated, 2.0);
  CHECK(from_negated.alpha == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("decay fit clamps flat data at the minimum rate") {
  std::vector<double> means{9.0, 3.0, 3.0, 3.0};
  DecayFit fit = fit_decay(means, 2.0);
  CHECK(fit.alpha == doctest::Approx(1e-3));
}

TEST_CASE("decay fit needs two usable points") {
  CHECK_THROWS_AS(fit_decay({5.0, 1.0}, 2.0), InsufficientLevels);
  CHECK_THROWS_AS(fit_decay({5.0, 0.0, 0.0, 1.0}, 2.0), InsufficientLevels);
}

namespace {

// state with synthetic decaying means |Y_l| = c0 * s^(-a0 l) and chosen
// variances/costs, suitable for exercising the adaptive update
EstimatorState decaying_state(double c0, double a0, double s, double eps, int levels,
                              int max_levels, long long count, double spread) {
  EstimatorConfig config;
  config.tolerance = eps;
  config.refinement_factor = s;
  config.max_levels = max_levels;
  config.initial_levels = levels;
  config.initial_samples.assign(levels + 1, 2);
  EstimatorState state = EstimatorState::initial(config);
  for (int l = 0; l <= levels; ++l) {
    double mean = c0 * std::pow(s, -a0 * l);
    LevelStats& stats = state.per_level[l];
    // two-point construction: mean +/- spread has variance spread^2
    for (long long i = 0; i < count; ++i)
      stats.add(mean + ((i % 2 == 0) ? spread : -spread), std::pow(8.0, l));
  }
  return state;
}

}  // namespace

TEST_CASE("adaptive update converges on a satisfied state") {
  // large tolerance: bias and statistical error are both tiny
  EstimatorState state = decaying_state(0.1, 1.0, 2.0, 1.0, 2, 5, 64, 1e-4);
  AdaptiveUpdate update = adaptive_update(state);
  CHECK(update.converged);
  CHECK(update.new_level <= state.current_level);
  for (std::size_t l = 0; l < update.new_samples.size(); ++l)
    CHECK(update.new_samples[l] <= state.per_level[l].count);
}

TEST_CASE("halving the tolerance grows the level count per the closed form") {
  EstimatorState coarse = decaying_state(0.5, 1.0, 2.0, 0.2, 2, 8, 64, 1e-3);
  AdaptiveUpdate at_eps = adaptive_update(coarse);

  EstimatorState fine = decaying_state(0.5, 1.0, 2.0, 0.1, 2, 8, 64, 1e-3);
  AdaptiveUpdate at_half = adaptive_update(fine);

  CHECK(at_half.new_level >= at_eps.new_level);
  int expected = required_levels(at_half.fit.c, at_half.fit.alpha, 2.0, 0.1);
  CHECK(at_half.new_level == std::min(expected, 8));
}

TEST_CASE("deterministic data with negligible bias converges") {
  // zero variance on all levels, tiny fine-level mean
  EstimatorState state = decaying_state(1e-6, 2.0, 2.0, 1e-3, 2, 4, 4, 0.0);
  AdaptiveUpdate update = adaptive_update(state);
  CHECK(update.converged);
}

TEST_CASE("adaptive update propagates fit failures") {
  EstimatorState state = decaying_state(0.5, 1.0, 2.0, 0.1, 2, 4, 4, 1e-3);
  state.per_level[1].sum_y = 0.0;
  state.per_level[1].comp_y = 0.0;
  state.per_level[2].sum_y = 0.0;
  state.per_level[2].comp_y = 0.0;
  CHECK_THROWS_AS(adaptive_update(state), InsufficientLevels);
}

TEST_CASE("config validation rejects malformed inputs") {
  EstimatorConfig config;
  config.tolerance = 0.0;
  CHECK_THROWS_AS(config.validate(), InvalidArgs);
  config.tolerance = 0.1;
  config.refinement_factor = 1.0;
  CHECK_THROWS_AS(config.validate(), InvalidArgs);
  config.refinement_factor = 2.0;
  config.initial_samples = {4, 4};
  CHECK_THROWS_AS(config.validate(), InvalidArgs);  // L0+1 mismatch
  config.initial_samples = {4};
  config.validate();
  config.initial_samples = {1};
  CHECK_THROWS_AS(config.validate(), InvalidArgs);  // needs >= 2 for the variance
}

TEST_CASE("with one level the estimate is the plain Monte Carlo mean") {
  EstimatorState state = state_with_levels({{42.0, 21}});
  CHECK(telescoping_estimate(state) == doctest::Approx(2.0));
}
