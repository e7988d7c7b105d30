#include "mlmc/metrics.hpp"

#include <cmath>
#include <limits>

namespace mlmc {

double CoreTimeSplit::conservation_defect() const {
  double budget = static_cast<double>(total_processors) * wall;
  if (budget <= 0.0) return 0.0;
  return std::abs(active + idle + manage - budget) / budget;
}

double efficiency(const CoreTimeSplit& split) {
  if (!(split.wall > 0.0) || split.total_processors < 1)
    throw InvalidArgs("efficiency needs a positive wall time and at least one processor");
  return split.active / (static_cast<double>(split.total_processors) * split.wall);
}

double speedup(double serial_wall, double parallel_wall) {
  if (!(serial_wall > 0.0) || !(parallel_wall > 0.0))
    throw InvalidArgs("speedup needs positive wall times");
  return serial_wall / parallel_wall;
}

std::vector<long long> scale_samples(const std::vector<long long>& base, long long multiplier) {
  if (multiplier < 1) throw InvalidArgs("sample multiplier must be >= 1");
  std::vector<long long> scaled(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) scaled[i] = base[i] * multiplier;
  return scaled;
}

double error_adjusted_time(double wall, double achieved_error, double reference_error) {
  if (!(achieved_error > 0.0) || !(reference_error > 0.0))
    throw InvalidArgs("error-adjusted time needs positive errors");
  return wall * achieved_error / reference_error;
}

void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "p,C,t_w,S,A,active,idle,manage,estimate,achieved_error\n";
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const SweepPoint& point : points) {
    out << point.workers << ',' << point.multiplier << ',' << point.wall << ',' << point.speedup
        << ',' << point.efficiency << ',' << point.active << ',' << point.idle << ','
        << point.manage << ',' << point.estimate << ',' << point.achieved_error << '\n';
  }
}

}  // namespace mlmc
