#include "mlmc/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlmc/rng.hpp"

namespace mlmc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// --- pause -------------------------------------------------------------------

double PauseModelSpec::mu(int level) const {
  if (mu_per_level.empty()) throw InvalidArgs("pause model needs at least one mu");
  std::size_t i = std::min<std::size_t>(level, mu_per_level.size() - 1);
  return mu_per_level[i];
}

double PauseModelSpec::sigma(int level) const {
  if (sigma_per_level.empty()) return 0.0;
  std::size_t i = std::min<std::size_t>(level, sigma_per_level.size() - 1);
  return sigma_per_level[i];
}

double PauseModelSpec::half_range(int level) const {
  double sg = sigma(level);
  return interpretation == SigmaInterpretation::StdDev ? std::sqrt(3.0) * sg
                                                       : std::sqrt(3.0 * sg);
}

void PauseModelSpec::validate(int max_level) const {
  for (int l = 0; l <= max_level; ++l) {
    if (!(mu(l) > 0.0)) throw InvalidArgs("pause mu must be positive");
    if (sigma(l) < 0.0) throw InvalidArgs("pause sigma must be nonnegative");
    if (!(mu(l) - half_range(l) > 0.0))
      throw InvalidArgs("pause durations can reach zero: mu - sqrt(3) sigma must stay positive");
  }
}

PauseModel::PauseModel(PauseModelSpec spec, int max_level) : spec_(std::move(spec)) {
  spec_.validate(max_level);
}

double PauseModel::draw_duration(int level, long long index, std::uint64_t seed) const {
  RngStream stream(seed, level, static_cast<std::uint64_t>(index));
  double h = spec_.half_range(level);
  return spec_.mu(level) + (2.0 * stream.uniform01() - 1.0) * h;
}

SampleValue PauseModel::evaluate(int level, long long index, std::uint64_t seed) const {
  SampleValue value;
  value.qoi_fine = draw_duration(level, index, seed);
  value.duration = value.qoi_fine;
  if (level > 0) {
    // coupled coarse draw: same uniform, coarse-level parameters
    RngStream stream(seed, level, static_cast<std::uint64_t>(index));
    double u = stream.uniform01();
    value.qoi_coarse = spec_.mu(level - 1) + (2.0 * u - 1.0) * spec_.half_range(level - 1);
  }
  return value;
}

// --- synthetic ----------------------------------------------------------------

void SyntheticModelSpec::validate() const {
  if (!(decay_c > 0.0)) throw InvalidArgs("decay_c must be positive");
  if (!(decay_alpha > 0.0)) throw InvalidArgs("decay_alpha must be positive");
  if (!(s > 1.0)) throw InvalidArgs("s must exceed 1");
  if (noise_scale < 0.0) throw InvalidArgs("noise_scale must be nonnegative");
  if (!(cost_base > 0.0)) throw InvalidArgs("cost_base must be positive");
  if (!std::isfinite(base_mean)) throw InvalidArgs("base_mean must be finite");
}

SyntheticModel::SyntheticModel(SyntheticModelSpec spec) : spec_(spec) { spec_.validate(); }

SampleValue SyntheticModel::evaluate(int level, long long index, std::uint64_t seed) const {
  RngStream stream(seed, level, static_cast<std::uint64_t>(index));
  double z = stream.normal();
  double shock = 1.0 + spec_.noise_scale * z;
  auto q = [&](int l) {
    return spec_.base_mean - spec_.decay_c * std::pow(spec_.s, -spec_.decay_alpha * l) * shock;
  };
  SampleValue value;
  value.qoi_fine = q(level);
  if (level > 0) value.qoi_coarse = q(level - 1);
  value.duration = spec_.cost_base * std::pow(spec_.s, spec_.work_exponent * level);
  return value;
}

double SyntheticModel::exact_mean_y(int level) const {
  if (level == 0) return spec_.base_mean - spec_.decay_c;
  double fine = std::pow(spec_.s, -spec_.decay_alpha * level);
  double coarse = std::pow(spec_.s, -spec_.decay_alpha * (level - 1));
  return -spec_.decay_c * (fine - coarse);
}

double SyntheticModel::exact_var_y(int level) const {
  double amp;
  if (level == 0) {
    amp = spec_.decay_c;
  } else {
    double fine = std::pow(spec_.s, -spec_.decay_alpha * level);
    double coarse = std::pow(spec_.s, -spec_.decay_alpha * (level - 1));
    amp = spec_.decay_c * std::abs(fine - coarse);
  }
  double sd = amp * spec_.noise_scale;
  return sd * sd;
}

double SyntheticModel::exact_estimate(int finest_level) const {
  return spec_.base_mean - spec_.decay_c * std::pow(spec_.s, -spec_.decay_alpha * finest_level);
}

// --- elliptic 1D --------------------------------------------------------------

void Elliptic1DSpec::validate() const {
  if (coarse_elements < 2) throw InvalidArgs("coarse_elements must be >= 2");
  if (refinement < 2) throw InvalidArgs("refinement must be an integer >= 2");
  if (kle_terms < 1) throw InvalidArgs("kle_terms must be >= 1");
  if (!(correlation_length > 0.0)) throw InvalidArgs("correlation_length must be positive");
  if (log_std < 0.0) throw InvalidArgs("log_std must be nonnegative");
  if (!(work_per_element > 0.0)) throw InvalidArgs("work_per_element must be positive");
}

namespace {

// Transcendental equations for the exponential-covariance KLE on [-a, a]
// (Ghanem & Spanos): even modes solve c = w tan(w a), odd modes solve
// w = -c tan(w a), with c the inverse correlation length.
double bisect(double lo, double hi, const auto& f) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Elliptic1DModel::Elliptic1DModel(Elliptic1DSpec spec, int max_level)
    : spec_(spec), max_level_(max_level) {
  spec_.validate();
  const double a = 0.5;                          // domain (0,1) mapped to [-a, a]
  const double c = 1.0 / spec_.correlation_length;

  auto even_eq = [&](double w) { return c - w * std::tan(w * a); };
  auto odd_eq = [&](double w) { return w + c * std::tan(w * a); };

  // one even and one odd root per period of tan(w a); gather enough of both,
  // then keep the kle_terms largest eigenvalues (smallest omega)
  std::vector<EigenPair> modes;
  int needed = spec_.kle_terms + 2;
  for (int k = 0; static_cast<int>(modes.size()) < 2 * needed; ++k) {
    double lo = (k * kPi) / a + 1e-9;
    double hi = (k * kPi + kPi / 2.0) / a - 1e-9;
    double w_even = bisect(std::max(lo, 1e-9), hi, even_eq);
    EigenPair even;
    even.omega = w_even;
    even.even = true;
    even.norm = std::sqrt(a + std::sin(2.0 * w_even * a) / (2.0 * w_even));
    even.sqrt_lambda = std::sqrt(2.0 * c / (w_even * w_even + c * c));
    modes.push_back(even);
    if (k >= 1) {
      double lo_odd = (k * kPi - kPi / 2.0) / a + 1e-9;
      double hi_odd = (k * kPi) / a - 1e-9;
      double w_odd = bisect(lo_odd, hi_odd, odd_eq);
      EigenPair odd;
      odd.omega = w_odd;
      odd.even = false;
      odd.norm = std::sqrt(a - std::sin(2.0 * w_odd * a) / (2.0 * w_odd));
      odd.sqrt_lambda = std::sqrt(2.0 * c / (w_odd * w_odd + c * c));
      modes.push_back(odd);
    }
  }
  std::sort(modes.begin(), modes.end(),
            [](const EigenPair& x, const EigenPair& y) { return x.omega < y.omega; });
  modes.resize(spec_.kle_terms);
  modes_ = std::move(modes);

  midpoint_basis_.resize(max_level_ + 1);
  for (int level = 0; level <= max_level_; ++level) {
    int n = elements(level);
    double h = 1.0 / n;
    std::vector<double>& basis = midpoint_basis_[level];
    basis.resize(static_cast<std::size_t>(spec_.kle_terms) * n);
    for (int k = 0; k < spec_.kle_terms; ++k) {
      const EigenPair& mode = modes_[k];
      for (int e = 0; e < n; ++e) {
        double x = (e + 0.5) * h - 0.5;  // midpoint in [-a, a]
        double phi = mode.even ? std::cos(mode.omega * x) / mode.norm
                               : std::sin(mode.omega * x) / mode.norm;
        basis[static_cast<std::size_t>(k) * n + e] = mode.sqrt_lambda * phi * spec_.log_std;
      }
    }
  }
}

int Elliptic1DModel::elements(int level) const {
  double n = spec_.coarse_elements * std::pow(spec_.refinement, level);
  return static_cast<int>(n + 0.5);
}

double Elliptic1DModel::solve_qoi(int level, const std::vector<double>& xi) const {
  if (level < 0 || level > max_level_)
    throw OutOfRange("elliptic level " + std::to_string(level) + " outside 0.." +
                     std::to_string(max_level_));
  int n = elements(level);
  double h = 1.0 / n;
  const std::vector<double>& basis = midpoint_basis_[level];

  std::vector<double> kappa(n);
  for (int e = 0; e < n; ++e) {
    double g = 0.0;
    for (int k = 0; k < spec_.kle_terms; ++k)
      g += basis[static_cast<std::size_t>(k) * n + e] * xi[k];
    kappa[e] = std::exp(g);
  }

  // P1 stiffness with element-midpoint kappa; Thomas solve of the tridiagonal
  // system for interior nodes 1..n-1, load f = 1.
  int m = n - 1;
  std::vector<double> diag(m), upper(m), rhs(m, h);
  for (int i = 0; i < m; ++i) {
    diag[i] = (kappa[i] + kappa[i + 1]) / h;
    upper[i] = -(kappa[i + 1]) / h;
  }
  // forward elimination (symmetric system, lower[i] == upper[i-1])
  for (int i = 1; i < m; ++i) {
    if (!(diag[i - 1] > 0.0)) throw SolveFailure("lost positivity in tridiagonal solve");
    double w = upper[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (!(diag[m - 1] > 0.0)) throw SolveFailure("lost positivity in tridiagonal solve");
  std::vector<double> u(m);
  u[m - 1] = rhs[m - 1] / diag[m - 1];
  for (int i = m - 2; i >= 0; --i) u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];

  if (spec_.qoi == EllipticQoi::MidpointValue) {
    // value of the P1 solution at x = 1/2
    double x = 0.5 * n;  // node coordinate in units of h
    int left = static_cast<int>(x);
    double frac = x - left;
    auto node_value = [&](int node) {
      if (node <= 0 || node >= n) return 0.0;
      return u[node - 1];
    };
    return (1.0 - frac) * node_value(left) + frac * node_value(left + 1);
  }
  double integral = 0.0;
  for (int i = 0; i < m; ++i) integral += u[i];
  return integral * h;  // trapezoid with zero boundary values
}

SampleValue Elliptic1DModel::evaluate(int level, long long index, std::uint64_t seed) const {
  RngStream stream(seed, level, static_cast<std::uint64_t>(index));
  std::vector<double> xi(spec_.kle_terms);
  for (double& x : xi) x = stream.normal();

  SampleValue value;
  value.qoi_fine = solve_qoi(level, xi);
  double work = static_cast<double>(elements(level));
  if (level > 0) {
    value.qoi_coarse = solve_qoi(level - 1, xi);
    work += static_cast<double>(elements(level - 1));
  }
  value.duration = spec_.work_per_element * work;
  return value;
}

// --- selection -----------------------------------------------------------------

std::string ModelSpec::kind() const {
  if (std::holds_alternative<PauseModelSpec>(spec)) return "pause";
  if (std::holds_alternative<SyntheticModelSpec>(spec)) return "synthetic";
  return "elliptic1d";
}

std::unique_ptr<SampleModel> make_model(const ModelSpec& spec, int max_level) {
  if (const auto* pause = std::get_if<PauseModelSpec>(&spec.spec))
    return std::make_unique<PauseModel>(*pause, max_level);
  if (const auto* synthetic = std::get_if<SyntheticModelSpec>(&spec.spec))
    return std::make_unique<SyntheticModel>(*synthetic);
  return std::make_unique<Elliptic1DModel>(std::get<Elliptic1DSpec>(spec.spec), max_level);
}

}  // namespace mlmc
