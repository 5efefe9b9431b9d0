#include "oisnet/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oisnet/errors.hpp"
#include "oisnet/parallel.hpp"

namespace oisnet {

void CirParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError(std::string("CIR parameter ") + name + " must be positive and finite");
    }
  };
  positive(kappa, "kappa");
  positive(theta, "theta");
  positive(sigma, "sigma");
  positive(r0, "r0");
  if (2.0 * kappa * theta < sigma * sigma) {
    throw ParameterError("CIR parameters violate the Feller condition 2*kappa*theta >= sigma^2");
  }
}

CirTransition::CirTransition(const CirParams& params, double horizon) {
  params.validate();
  if (!(horizon > 0.0)) throw ParameterError("CIR transition horizon must be positive");
  decay_ = std::exp(-params.kappa * horizon);
  scale_ = params.sigma * params.sigma * (-std::expm1(-params.kappa * horizon)) / (4.0 * params.kappa);
  dof_ = params.degrees_of_freedom();
}

double CirTransition::sample(double r_prev, Engine& rng) const {
  const double next = scale_ * sample_noncentral_chi2(dof_, noncentrality(r_prev), rng);
  if (!std::isfinite(next) || !(next > 0.0)) {
    throw NumericalError("CIR transition produced " + std::to_string(next) + " from r=" +
                         std::to_string(r_prev));
  }
  return next;
}

RatePath::RatePath(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw DataError("rate path must contain at least r(t_0)");
  grid_.n_days = static_cast<std::int64_t>(rates_.size()) - 1;
  accumulator_.resize(rates_.size());
  accumulator_[0] = 1.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!(rates_[i] > 0.0) || !std::isfinite(rates_[i])) {
      throw DataError("rate path has non-positive rate at day " + std::to_string(i));
    }
    if (i > 0) accumulator_[i] = accumulator_[i - 1] * (1.0 + rates_[i] * TimeGrid::dt);
  }
}

double RatePath::growth(std::int64_t from, std::int64_t to) const {
  if (from < 0 || to > n_days()) throw DataError("rate path does not cover requested interval");
  double g = 1.0;
  for (std::int64_t i = from + 1; i <= to; ++i) g *= 1.0 + rates_[i] * TimeGrid::dt;
  return g;
}

double RatePath::discount(std::int64_t from, std::int64_t to) const {
  if (from < 0 || to > n_days()) throw DataError("rate path does not cover requested interval");
  double d = 1.0;
  for (std::int64_t i = from + 1; i <= to; ++i) d *= 1.0 / (1.0 + rates_[i] * TimeGrid::dt);
  return d;
}

RatePath sample_cir_path(const CirParams& params, TimeGrid grid, std::uint64_t seed) {
  params.validate();
  if (grid.n_days < 0) throw ParameterError("time grid must be non-empty");
  const CirTransition step(params, TimeGrid::dt);
  Engine rng(seed);
  std::vector<double> r(static_cast<std::size_t>(grid.n_days) + 1);
  r[0] = params.r0;
  for (std::size_t i = 1; i < r.size(); ++i) r[i] = step.sample(r[i - 1], rng);
  return RatePath(std::move(r));
}

Moments cir_conditional_moments(const CirParams& params, double r_u, double horizon) {
  params.validate();
  if (!(horizon > 0.0)) throw ParameterError("conditional moments need a positive horizon");
  const double decay = std::exp(-params.kappa * horizon);
  const double one_minus = -std::expm1(-params.kappa * horizon);
  const double s2 = params.sigma * params.sigma;
  Moments m;
  m.mean = r_u * decay + params.theta * one_minus;
  m.variance = r_u * s2 * decay * one_minus / params.kappa +
               params.theta * s2 * one_minus * one_minus / (2.0 * params.kappa);
  return m;
}

BondCurve simulate_bond_curve(const CirParams& params, double rate_now, std::int64_t length,
                              std::size_t n_paths, std::uint64_t seed) {
  if (length < 0) throw std::domain_error("bond curve length must be non-negative");
  if (n_paths == 0) throw ParameterError("bond pricing needs at least one path");
  const CirTransition step(params, TimeGrid::dt);
  const auto len = static_cast<std::size_t>(length);
  std::vector<double> sum(len + 1, 0.0);
  std::vector<double> sum_sq(len + 1, 0.0);
  for (std::size_t j = 0; j < n_paths; ++j) {
    Engine rng(derive_seed(seed, j));
    double r = rate_now;
    double product = 1.0;
    sum[0] += 1.0;
    sum_sq[0] += 1.0;
    for (std::size_t n = 1; n <= len; ++n) {
      r = step.sample(r, rng);
      product /= 1.0 + r * TimeGrid::dt;
      sum[n] += product;
      sum_sq[n] += product * product;
    }
  }
  BondCurve curve;
  curve.price.resize(len + 1);
  curve.std_error.resize(len + 1);
  const double n = static_cast<double>(n_paths);
  for (std::size_t i = 0; i <= len; ++i) {
    curve.price[i] = sum[i] / n;
    if (n_paths > 1) {
      const double var = std::max(0.0, (sum_sq[i] - sum[i] * sum[i] / n) / (n - 1.0));
      curve.std_error[i] = std::sqrt(var / n);
    }
  }
  curve.price[0] = 1.0;
  curve.std_error[0] = 0.0;
  return curve;
}

BondEstimate bond_price(const CirParams& params, double rate_now, std::int64_t t, std::int64_t T,
                        std::size_t n_paths, std::uint64_t seed) {
  if (T < t) throw std::domain_error("bond_price requires t <= T");
  if (T == t) return {1.0, 0.0};
  const BondCurve curve = simulate_bond_curve(params, rate_now, T - t, n_paths, seed);
  return {curve.price.back(), curve.std_error.back()};
}

double spot_rate(double price, double tau_years) {
  if (!(price > 0.0)) throw std::domain_error("spot_rate requires a positive bond price");
  if (!(tau_years > 0.0)) throw std::domain_error("spot_rate requires T > t");
  return (1.0 / price - 1.0) / tau_years;
}

BondCurveCache::BondCurveCache(const CirParams& params, const RatePath& path, std::size_t n_paths,
                               std::uint64_t seed)
    : params_(params),
      rates_(path.rates().begin(), path.rates().end()),
      n_paths_(n_paths),
      seed_(seed) {
  params_.validate();
  if (n_paths_ == 0) throw ParameterError("bond pricing needs at least one path");
}

std::vector<double> BondCurveCache::compute(std::int64_t day, std::int64_t length) const {
  if (day < 0 || day >= static_cast<std::int64_t>(rates_.size())) {
    throw DataError("bond curve requested outside the rate path (day " + std::to_string(day) + ")");
  }
  return simulate_bond_curve(params_, rates_[static_cast<std::size_t>(day)], length, n_paths_,
                             curve_seed(day))
      .price;
}

void BondCurveCache::store(std::int64_t day, std::vector<double> curve) const {
  std::lock_guard lock(mutex_);
  auto& slot = curves_[day];
  if (curve.size() > slot.size()) slot = std::move(curve);
}

double BondCurveCache::price(std::int64_t day, std::int64_t maturity) const {
  if (maturity < day) throw std::domain_error("bond price requested with maturity before day");
  if (maturity == day) return 1.0;
  const auto need = static_cast<std::size_t>(maturity - day);
  {
    std::lock_guard lock(mutex_);
    auto it = curves_.find(day);
    if (it != curves_.end() && it->second.size() > need) return it->second[need];
  }
  auto curve = compute(day, maturity - day);
  const double p = curve[need];
  store(day, std::move(curve));
  return p;
}

void BondCurveCache::prefetch(std::span<const Request> requests, unsigned threads) const {
  std::unordered_map<std::int64_t, std::int64_t> longest;
  for (const auto& r : requests) {
    auto& l = longest[r.day];
    l = std::max(l, r.length);
  }
  std::vector<Request> todo;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [day, length] : longest) {
      if (length <= 0) continue;
      auto it = curves_.find(day);
      if (it == curves_.end() || it->second.size() <= static_cast<std::size_t>(length)) {
        todo.push_back({day, length});
      }
    }
  }
  std::sort(todo.begin(), todo.end(), [](auto& a, auto& b) { return a.day < b.day; });
  parallel_for(todo.size(), threads, [&](std::size_t i) {
    store(todo[i].day, compute(todo[i].day, todo[i].length));
  });
}

std::size_t BondCurveCache::cached_curves() const {
  std::lock_guard lock(mutex_);
  return curves_.size();
}

}  // namespace oisnet
