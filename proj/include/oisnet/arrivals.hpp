#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "oisnet/random.hpp"
#include "oisnet/rates.hpp"

namespace oisnet {

inline constexpr int hub = +1;
inline constexpr int private_node = -1;

/// Coefficients of lambda = gamma * exp(eta + (theta_int + beta g) r).
struct IntensityParams {
  double gamma = 3.0;
  double eta = -4.0;
  double theta_int = 20.0;
  double beta = 5.0;

  void validate() const;
};

/// g(x_i, x_j) = (-x_i x_j + |x_i - x_j| + x_i + x_j) / 3: +1 hub-private,
/// 1/3 hub-hub, -1 private-private. Throws std::domain_error unless x is +-1.
double pair_feature(int x_i, int x_j);

/// Contract arrival intensity in events per year.
double intensity(const IntensityParams& params, double r, double g);

struct Arrival {
  double time = 0.0;       // continuous arrival time in years
  std::int64_t day = 0;    // smallest grid day t with time <= t
};

/// Cox process on (t_from, t_to] by time change: arrival k is the first time
/// the compensator int lambda ds reaches E_1 + ... + E_k, E unit exponentials.
/// lambda is constant on (t_{i-1}, t_i] and uses r(t_i). Arrivals past t_to
/// are discarded.
std::vector<Arrival> simulate_arrivals(const IntensityParams& params, const RatePath& path,
                                       double g, std::int64_t from_day, std::int64_t to_day,
                                       Engine& rng);

/// How the receiver/payer sides of a new contract are assigned.
///   random:       the first node (the hub in hub-private pairs) receives fixed
///                 with probability 1/2, independently per contract.
///   hub_receiver: in hub-private pairs the hub always receives fixed; in
///                 same-class pairs the lower node index does.
enum class DeltaRule { random, hub_receiver };

DeltaRule parse_delta_rule(std::string_view name);
std::string_view to_string(DeltaRule rule) noexcept;

struct MarkConfig {
  double principal = 1.0;
  std::int64_t tenor_days = 365;
  DeltaRule delta_rule = DeltaRule::random;
};

struct Marks {
  double principal = 1.0;
  double fair_rate = 0.0;
  std::int64_t maturity = 0;
  int delta_i = 1;
};

/// Indicator of the lower-index node i for a contract between i < j.
int draw_delta(int x_i, int x_j, DeltaRule rule, Engine& rng);

/// Marks for a contract starting on `day` between nodes i < j with features
/// x_i, x_j. K is the fair rate from p(day, day + tenor).
Marks draw_marks(std::int64_t day, int x_i, int x_j, const BondSource& bonds,
                 const MarkConfig& config, Engine& rng);

}  // namespace oisnet
