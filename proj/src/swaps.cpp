#include "oisnet/swaps.hpp"

#include <stdexcept>
#include <string>

#include "oisnet/errors.hpp"

namespace oisnet {

double fair_rate(double bond_price, double tenor_years) {
  return spot_rate(bond_price, tenor_years);
}

double floating_leg(const RatePath& path, std::int64_t start, std::int64_t t) {
  if (t > path.n_days()) {
    throw DataError("rate path ends at day " + std::to_string(path.n_days()) +
                    ", floating leg needs day " + std::to_string(t));
  }
  return path.growth(start, t);
}

double contract_value(const OisContract& c, int delta, std::int64_t t, const RatePath& path,
                      double bond_t_T) {
  if (!c.alive(t)) return 0.0;
  const double fixed = bond_t_T * (1.0 + c.fair_rate * c.tenor_years());
  const double floating = floating_leg(path, c.start, t);
  return delta * (c.principal * (fixed - floating));
}

double variation_margin(double value_prev, double value_next, double rate_next) {
  return value_next - (1.0 + rate_next * TimeGrid::dt) * value_prev;
}

double contract_margin(const OisContract& c, int delta, std::int64_t day, const RatePath& path,
                       const BondSource& bonds) {
  if (!c.alive(day)) return 0.0;
  const double v_next = contract_value(c, delta, day, path, bonds.price(day, c.maturity));
  const double v_prev =
      c.alive(day - 1) ? contract_value(c, delta, day - 1, path, bonds.price(day - 1, c.maturity))
                       : 0.0;
  return variation_margin(v_prev, v_next, path.rate(day));
}

double node_margin(std::span<const OisContract> contracts, int node, std::int64_t day,
                   const RatePath& path, const BondSource& bonds) {
  double total = 0.0;
  for (const auto& c : contracts) {
    if (!c.involves(node) || !c.alive(day)) continue;
    total += contract_margin(c, c.delta_for(node), day, path, bonds);
  }
  return total;
}

}  // namespace oisnet
