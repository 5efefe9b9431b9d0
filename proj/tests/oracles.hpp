// Reference computations used only by the tests. They share no code with the
// library beyond plain data types.
#pragma once

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oisnet/rates.hpp"

namespace ref {

// Continuous-compounding CIR zero-coupon bond A(tau) exp(-B(tau) r).
inline double cir_bond(double kappa, double theta, double sigma, double r, double tau) {
  const double h = std::sqrt(kappa * kappa + 2.0 * sigma * sigma);
  const double e = std::expm1(h * tau);
  const double den = 2.0 * h + (kappa + h) * e;
  const double a = std::pow(2.0 * h * std::exp((kappa + h) * tau / 2.0) / den,
                            2.0 * kappa * theta / (sigma * sigma));
  const double b = 2.0 * e / den;
  return a * std::exp(-b * r);
}

inline double ncx2_cdf(double dof, double nc, double x) {
  boost::math::non_central_chi_squared dist(dof, nc);
  return boost::math::cdf(dist, x);
}

// One-step CIR law: r' = c * chi2'_d(nc), independent of the library formula.
struct CirStep {
  double c, d, nc;
};
inline CirStep cir_step(double kappa, double theta, double sigma, double r, double h) {
  const double e = std::exp(-kappa * h);
  const double c = sigma * sigma * (1.0 - e) / (4.0 * kappa);
  return {c, 4.0 * kappa * theta / (sigma * sigma), r * e / c};
}

// r(t) = theta + (r0 - theta) e^{-kappa t} on the daily grid.
inline std::vector<double> ode_rates(double kappa, double theta, double r0, std::int64_t n_days) {
  std::vector<double> r;
  for (std::int64_t i = 0; i <= n_days; ++i) {
    r.push_back(theta + (r0 - theta) * std::exp(-kappa * static_cast<double>(i) / 365.0));
  }
  return r;
}

// Bonds priced off a fixed rate vector: p(t, T) = prod_{i=t+1..T} 1/(1 + r_i/365).
class CurveBonds final : public oisnet::BondSource {
 public:
  explicit CurveBonds(std::vector<double> r) : r_(std::move(r)) {}
  double price(std::int64_t day, std::int64_t maturity) const override {
    double p = 1.0;
    for (std::int64_t i = day + 1; i <= maturity; ++i) {
      const double ri = i < static_cast<std::int64_t>(r_.size()) ? r_[static_cast<std::size_t>(i)] : r_.back();
      p /= 1.0 + ri / 365.0;
    }
    return p;
  }

 private:
  std::vector<double> r_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Each file under `dir`, keyed by relative path, with its bytes.
inline std::vector<std::pair<std::string, std::string>> tree(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.emplace_back(std::filesystem::relative(e.path(), dir).string(), slurp(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("oisnet_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ref
