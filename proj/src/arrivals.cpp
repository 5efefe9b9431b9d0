#include "oisnet/arrivals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "oisnet/errors.hpp"
#include "oisnet/swaps.hpp"

namespace oisnet {

void IntensityParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ParameterError("intensity parameter gamma must be positive");
  }
  if (!std::isfinite(eta) || !std::isfinite(theta_int) || !std::isfinite(beta)) {
    throw ParameterError("intensity parameters must be finite");
  }
}

double pair_feature(int x_i, int x_j) {
  auto binary = [](int x) { return x == hub || x == private_node; };
  if (!binary(x_i) || !binary(x_j)) throw std::domain_error("node features must be +1 or -1");
  return (-x_i * x_j + std::abs(x_i - x_j) + (x_i + x_j)) / 3.0;
}

double intensity(const IntensityParams& params, double r, double g) {
  return params.gamma * std::exp(params.eta + (params.theta_int + params.beta * g) * r);
}

std::vector<Arrival> simulate_arrivals(const IntensityParams& params, const RatePath& path,
                                       double g, std::int64_t from_day, std::int64_t to_day,
                                       Engine& rng) {
  params.validate();
  if (from_day < 0 || to_day > path.n_days()) {
    throw DataError("rate path does not cover the arrival horizon");
  }
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<Arrival> out;
  double target = unit_exp(rng);
  double compensator = 0.0;
  for (std::int64_t day = from_day + 1; day <= to_day; ++day) {
    const double lambda = intensity(params, path.rate(day), g);
    const double next = compensator + lambda * TimeGrid::dt;
    while (target <= next) {
      const double time = path.grid().t(day - 1) + (target - compensator) / lambda;
      out.push_back({time, day});
      target += unit_exp(rng);
    }
    compensator = next;
  }
  return out;
}

DeltaRule parse_delta_rule(std::string_view name) {
  if (name == "random") return DeltaRule::random;
  if (name == "hub_receiver") return DeltaRule::hub_receiver;
  throw ParameterError("unknown delta rule '" + std::string(name) + "'");
}

std::string_view to_string(DeltaRule rule) noexcept {
  return rule == DeltaRule::random ? "random" : "hub_receiver";
}

int draw_delta(int x_i, int x_j, DeltaRule rule, Engine& rng) {
  if (rule == DeltaRule::hub_receiver) {
    if (x_i != x_j) return x_i == hub ? +1 : -1;
    return +1;
  }
  std::bernoulli_distribution coin(0.5);
  return coin(rng) ? +1 : -1;
}

Marks draw_marks(std::int64_t day, int x_i, int x_j, const BondSource& bonds,
                 const MarkConfig& config, Engine& rng) {
  Marks m;
  m.principal = config.principal;
  m.maturity = day + config.tenor_days;
  m.fair_rate = fair_rate(bonds.price(day, m.maturity), TimeGrid::years(config.tenor_days));
  m.delta_i = draw_delta(x_i, x_j, config.delta_rule, rng);
  return m;
}

}  // namespace oisnet
