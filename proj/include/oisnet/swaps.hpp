#pragma once

#include <cstdint>
#include <span>

#include "oisnet/rates.hpp"

namespace oisnet {

/// One overnight indexed swap between node_i < node_j. delta_i is the
/// receiver/payer indicator of node_i (+1 receives fixed); node_j holds the
/// opposite side.
struct OisContract {
  std::int64_t id = 0;
  int node_i = 0;
  int node_j = 0;
  std::int64_t start = 0;
  std::int64_t maturity = 0;
  double principal = 1.0;
  double fair_rate = 0.0;
  int delta_i = 1;

  int delta_for(int node) const noexcept { return node == node_i ? delta_i : -delta_i; }
  int counterparty(int node) const noexcept { return node == node_i ? node_j : node_i; }
  bool involves(int node) const noexcept { return node == node_i || node == node_j; }
  double tenor_years() const noexcept { return TimeGrid::years(maturity - start); }
  /// Outstanding on `day`: t in (start, maturity].
  bool alive(std::int64_t day) const noexcept { return start < day && day <= maturity; }
  /// Known on `day` and still owing a margin on a later day: t in [start, maturity).
  bool open(std::int64_t day) const noexcept { return start <= day && day < maturity; }

  friend bool operator==(const OisContract&, const OisContract&) = default;
};

/// K = (1/p(t0, T) - 1) / (T - t0).
double fair_rate(double bond_price, double tenor_years);

/// Floating leg prod_{t_i in (start, t]} (1 + r(t_i) dt).
double floating_leg(const RatePath& path, std::int64_t start, std::int64_t t);

/// Mark-to-market value on day t for the side with indicator `delta`:
///   delta N (p(t,T) (1 + K (T - t0)) - prod_{(t0, t]} (1 + r dt))
/// and 0 outside (start, maturity]. `bond_t_T` is p(t, maturity).
double contract_value(const OisContract& c, int delta, std::int64_t t, const RatePath& path,
                      double bond_t_T);

/// m = V(t_{l+1}) - (1 + r(t_{l+1}) dt) V(t_l).
double variation_margin(double value_prev, double value_next, double rate_next);

/// Margin paid on `day` (= t_{l+1}) by contract c to the side `delta`.
double contract_margin(const OisContract& c, int delta, std::int64_t day, const RatePath& path,
                       const BondSource& bonds);

/// Net variation margin of `node` on `day`, summed over the given contracts in
/// order. Contracts not involving the node, or not outstanding on `day`,
/// contribute nothing.
double node_margin(std::span<const OisContract> contracts, int node, std::int64_t day,
                   const RatePath& path, const BondSource& bonds);

}  // namespace oisnet
