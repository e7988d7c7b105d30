#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mlmc/errors.hpp"

namespace mlmc {

// Result of one coupled sample evaluation. For level 0 only qoi_fine is
// meaningful; for level l >= 1 both values come from the same random draws.
// duration is the wall time of the pair in seconds (simulate mode advances
// virtual time by it; execute mode measures or genuinely waits).
struct SampleValue {
  double qoi_fine = 0.0;
  double qoi_coarse = 0.0;
  double duration = 0.0;
};

inline double coupled_difference(const SampleValue& value, int level) {
  return level == 0 ? value.qoi_fine : value.qoi_fine - value.qoi_coarse;
}

class SampleModel {
 public:
  virtual ~SampleModel() = default;
  virtual SampleValue evaluate(int level, long long index, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
  // Pause-style models make execute-mode workers genuinely wait the duration.
  virtual bool wait_in_execute() const { return false; }
};

// --- pause benchmark -------------------------------------------------------

enum class SigmaInterpretation {
  StdDev,    // duration ~ Uniform[mu - sqrt(3)*sigma, mu + sqrt(3)*sigma]
  Variance,  // duration ~ Uniform[mu - sqrt(3*sigma), mu + sqrt(3*sigma)]
};

struct PauseModelSpec {
  std::vector<double> mu_per_level;     // seconds, > 0; broadcast if shorter
  std::vector<double> sigma_per_level;  // >= 0
  SigmaInterpretation interpretation = SigmaInterpretation::StdDev;

  double mu(int level) const;
  double sigma(int level) const;
  double half_range(int level) const;
  void validate(int max_level) const;
};

class PauseModel : public SampleModel {
 public:
  PauseModel(PauseModelSpec spec, int max_level);
  SampleValue evaluate(int level, long long index, std::uint64_t seed) const override;
  std::string name() const override { return "pause"; }
  bool wait_in_execute() const override { return true; }
  const PauseModelSpec& spec() const { return spec_; }

 private:
  double draw_duration(int level, long long index, std::uint64_t seed) const;
  PauseModelSpec spec_;
};

// --- synthetic model with closed-form moments -------------------------------

struct SyntheticModelSpec {
  double base_mean = 1.0;
  double decay_c = 0.5;     // > 0
  double decay_alpha = 1.0; // > 0
  double s = 2.0;           // > 1
  double noise_scale = 0.1; // >= 0
  double cost_base = 1e-3;  // seconds for a level-0 evaluation
  double work_exponent = 3.0;

  void validate() const;
};

// Q_l(w) = base_mean - decay_c * s^(-alpha l) * (1 + noise * Z); the coupled
// pair shares Z, so every moment is known in closed form.
class SyntheticModel : public SampleModel {
 public:
  explicit SyntheticModel(SyntheticModelSpec spec);
  SampleValue evaluate(int level, long long index, std::uint64_t seed) const override;
  std::string name() const override { return "synthetic"; }
  const SyntheticModelSpec& spec() const { return spec_; }

  double exact_mean_y(int level) const;
  double exact_var_y(int level) const;
  double exact_estimate(int finest_level) const;

 private:
  SyntheticModelSpec spec_;
};

// --- 1D random-coefficient elliptic problem ---------------------------------

enum class EllipticQoi { MidpointValue, Integral };

struct Elliptic1DSpec {
  int coarse_elements = 16;      // >= 2
  int refinement = 2;            // integer s >= 2
  int kle_terms = 8;             // >= 1
  double correlation_length = 0.25;
  double log_std = 0.25;
  EllipticQoi qoi = EllipticQoi::MidpointValue;
  double work_per_element = 1e-4;  // simulate-mode seconds per element

  void validate() const;
};

// Solves -(k u')' = 1 on (0,1), u(0)=u(1)=0, with log-normal k built from the
// analytic Karhunen-Loeve expansion of the exponential covariance kernel.
// Fine and coarse solves share the same KLE coefficients.
class Elliptic1DModel : public SampleModel {
 public:
  Elliptic1DModel(Elliptic1DSpec spec, int max_level);
  SampleValue evaluate(int level, long long index, std::uint64_t seed) const override;
  std::string name() const override { return "elliptic1d"; }
  const Elliptic1DSpec& spec() const { return spec_; }

  int elements(int level) const;
  // Solve one mesh with the given KLE coefficients; exposed for tests.
  double solve_qoi(int level, const std::vector<double>& xi) const;

 private:
  struct EigenPair {
    double omega = 0.0;
    double sqrt_lambda = 0.0;
    double norm = 0.0;
    bool even = true;
  };

  Elliptic1DSpec spec_;
  int max_level_ = 0;
  std::vector<EigenPair> modes_;
  // per level: log-kappa KLE basis evaluated at element midpoints,
  // laid out mode-major: basis[level][k * elements + e]
  std::vector<std::vector<double>> midpoint_basis_;
};

// --- model selection --------------------------------------------------------

struct ModelSpec {
  std::variant<PauseModelSpec, SyntheticModelSpec, Elliptic1DSpec> spec =
      SyntheticModelSpec{};
  std::string kind() const;
};

std::unique_ptr<SampleModel> make_model(const ModelSpec& spec, int max_level);

}  // namespace mlmc
