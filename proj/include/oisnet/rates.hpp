#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "oisnet/random.hpp"

namespace oisnet {

inline constexpr double days_per_year = 365.0;

/// Uniform daily grid, actual/365 without holidays.
struct TimeGrid {
  static constexpr double dt = 1.0 / days_per_year;

  std::int64_t n_days = 0;  // last grid index; the grid is t_0 .. t_{n_days}

  constexpr double t(std::int64_t i) const noexcept { return static_cast<double>(i) * dt; }
  static constexpr double years(std::int64_t days) noexcept {
    return static_cast<double>(days) / days_per_year;
  }
};

/// Cox-Ingersoll-Ross short-rate parameters:
///   dr = kappa (theta - r) dt + sigma sqrt(r) dW,  r(0) = r0.
struct CirParams {
  double kappa = 0.6;
  double theta = 0.04;
  double sigma = 0.14;
  double r0 = 0.04;

  /// Throws ParameterError unless all fields are positive and the Feller
  /// condition 2 kappa theta >= sigma^2 holds.
  void validate() const;
  double degrees_of_freedom() const noexcept { return 4.0 * theta * kappa / (sigma * sigma); }
};

/// Exact one-step transition of the CIR process over a fixed horizon.
/// r(u + h) | r(u) ~ c * chi2'_d(r(u) e^{-kappa h} / c),
/// c = sigma^2 (1 - e^{-kappa h}) / (4 kappa), d = 4 theta kappa / sigma^2.
class CirTransition {
 public:
  CirTransition(const CirParams& params, double horizon);

  double scale() const noexcept { return scale_; }
  double degrees_of_freedom() const noexcept { return dof_; }
  double noncentrality(double r_prev) const noexcept { return r_prev * decay_ / scale_; }

  /// Throws NumericalError if the draw is not finite and positive.
  double sample(double r_prev, Engine& rng) const;

 private:
  double scale_;
  double dof_;
  double decay_;
};

/// One daily realization of the reference rate and its money-market account
/// B(t_i) = B(t_{i-1}) (1 + r(t_i) dt), B(t_0) = 1.
class RatePath {
 public:
  RatePath() = default;
  /// rates[0] is r(t_0). Throws DataError on non-positive or non-finite rates.
  explicit RatePath(std::vector<double> rates);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::int64_t n_days() const noexcept { return grid_.n_days; }
  double rate(std::int64_t day) const { return rates_.at(static_cast<std::size_t>(day)); }
  double accumulator(std::int64_t day) const {
    return accumulator_.at(static_cast<std::size_t>(day));
  }
  std::span<const double> rates() const noexcept { return rates_; }
  std::span<const double> accumulators() const noexcept { return accumulator_; }

  /// prod_{t_i in (from, to]} (1 + r(t_i) dt)
  double growth(std::int64_t from, std::int64_t to) const;
  /// prod_{t_i in (from, to]} (1 + r(t_i) dt)^{-1}
  double discount(std::int64_t from, std::int64_t to) const;

 private:
  TimeGrid grid_;
  std::vector<double> rates_;
  std::vector<double> accumulator_;
};

RatePath sample_cir_path(const CirParams& params, TimeGrid grid, std::uint64_t seed);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact conditional mean and variance of r(u + horizon) given r(u) = r_u.
Moments cir_conditional_moments(const CirParams& params, double r_u, double horizon);

struct BondEstimate {
  double price = 1.0;
  double std_error = 0.0;
};

/// Monte Carlo term structure from one starting rate: entry n is the mean over
/// paths of prod_{i=1..n} (1 + r_i dt)^{-1}, n = 0 .. length. All maturities
/// share the same paths, and path j draws from its own stream derived from
/// (seed, j), so a longer curve extends a shorter one without changing it.
struct BondCurve {
  std::vector<double> price;
  std::vector<double> std_error;
};
BondCurve simulate_bond_curve(const CirParams& params, double rate_now, std::int64_t length,
                              std::size_t n_paths, std::uint64_t seed);

/// Zero-coupon bond p(t, T) under daily compounding, estimated from n_paths
/// exact CIR sub-paths started at rate_now. T == t returns exactly 1.
BondEstimate bond_price(const CirParams& params, double rate_now, std::int64_t t, std::int64_t T,
                        std::size_t n_paths, std::uint64_t seed);

/// Simple spot rate R = (1/price - 1) / tau.
double spot_rate(double price, double tau_years);

/// Anything that can quote p(day, maturity) on the grid.
class BondSource {
 public:
  virtual ~BondSource() = default;
  virtual double price(std::int64_t day, std::int64_t maturity) const = 0;
};

/// Bond prices along a realized rate path, one Monte Carlo curve per day,
/// computed lazily and memoized. The curve for `day` is seeded by
/// derive_seed(seed, day), so it equals
/// bond_price(params, path.rate(day), day, T, n_paths, derive_seed(seed, day)).
class BondCurveCache final : public BondSource {
 public:
  BondCurveCache(const CirParams& params, const RatePath& path, std::size_t n_paths,
                 std::uint64_t seed);

  double price(std::int64_t day, std::int64_t maturity) const override;

  struct Request {
    std::int64_t day;
    std::int64_t length;  // days to the farthest maturity needed
  };
  /// Computes all missing curves, in parallel when threads > 1.
  void prefetch(std::span<const Request> requests, unsigned threads) const;

  std::size_t n_paths() const noexcept { return n_paths_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t curve_seed(std::int64_t day) const noexcept {
    return derive_seed(seed_, static_cast<std::uint64_t>(day));
  }
  std::size_t cached_curves() const;

 private:
  std::vector<double> compute(std::int64_t day, std::int64_t length) const;
  void store(std::int64_t day, std::vector<double> curve) const;

  CirParams params_;
  std::vector<double> rates_;
  std::size_t n_paths_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::int64_t, std::vector<double>> curves_;
};

}  // namespace oisnet
