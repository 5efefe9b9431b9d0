#include "oisnet/random.hpp"

#include <boost/random/poisson_distribution.hpp>

#include <cmath>

#include "oisnet/errors.hpp"

namespace oisnet {

double sample_noncentral_chi2(double dof, double noncentrality, Engine& rng) {
  if (!(dof > 0.0) || !(noncentrality >= 0.0) || !std::isfinite(noncentrality)) {
    throw NumericalError("noncentral chi2: invalid parameters dof=" + std::to_string(dof) +
                         " noncentrality=" + std::to_string(noncentrality));
  }
  std::int64_t mixing = 0;
  if (noncentrality > 0.0) {
    boost::random::poisson_distribution<std::int64_t, double> poisson(0.5 * noncentrality);
    mixing = poisson(rng);
  }
  // chi2(v) == Gamma(shape v/2, scale 2)
  std::gamma_distribution<double> chi2(0.5 * dof + static_cast<double>(mixing), 2.0);
  return chi2(rng);
}

}  // namespace oisnet
