#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oisnet/arrivals.hpp"
#include "oisnet/network.hpp"
#include "oisnet/rates.hpp"
#include "oisnet/swaps.hpp"

namespace oisnet {

/// Discounted conditional expectation of M(t_{l+m}) given the rate path up to
/// t_{l+m} and the contracts known at t_l, split into the part from known
/// contracts and the part from contracts arriving in (t_l, t_{l+m}).
struct OracleEstimate {
  int node = 0;
  std::int64_t base_day = 0;
  int horizon = 0;
  double value = 0.0;
  double fixed_component = 0.0;
  double arrivals_component = 0.0;
  std::size_t n_sims = 0;
  double std_error = 0.0;
};

/// Everything the predictor conditions on. The book may hold contracts that
/// start after the base day; those are ignored.
struct OracleInputs {
  const RatePath* path = nullptr;
  std::span<const OisContract> book;
  const NodeSet* nodes = nullptr;
  IntensityParams intensity;
  MarkConfig marks;
  const BondSource* bonds = nullptr;
};

OracleInputs oracle_inputs(const Simulation& sim);

class Oracle {
 public:
  /// `seed` drives the arrival resimulations; the stream for a given
  /// (base day, pair, simulation index) does not depend on the horizon or on
  /// how many simulations are requested, so results nest across both.
  Oracle(OracleInputs inputs, std::uint64_t seed);

  double fixed_component(int node, std::int64_t base_day, int horizon) const;

  struct ArrivalEstimate {
    double value = 0.0;
    double std_error = 0.0;
  };
  ArrivalEstimate arrivals_component(int node, std::int64_t base_day, int horizon,
                                     std::size_t n_sims) const;

  OracleEstimate best_predictor(int node, std::int64_t base_day, int horizon,
                                std::size_t n_sims) const;

  /// Estimates for every node and every horizon 1 .. max_horizon from one set
  /// of arrival simulations; entry [h - 1][node]. Equal to calling
  /// best_predictor for each (node, h).
  std::vector<std::vector<OracleEstimate>> evaluate(std::int64_t base_day, int max_horizon,
                                                    std::size_t n_sims) const;

  /// Undiscounted new-arrival margin per simulation: entry
  /// [(sim * max_horizon + h - 1) * n_nodes + node].
  std::vector<double> arrival_samples(std::int64_t base_day, int max_horizon,
                                      std::size_t n_sims) const;

  /// Bond curves the estimator will touch for this base day.
  std::vector<BondCurveCache::Request> bond_requests(std::int64_t base_day, int max_horizon) const;

  /// Throws unless the realized path covers base_day + horizon and the
  /// horizon is within one tenor.
  void check(std::int64_t base_day, int horizon) const;
  /// Book entries with start <= base_day, in book order.
  std::vector<OisContract> known_at(std::int64_t base_day) const;

 private:
  OracleInputs in_;
  std::uint64_t seed_;
};

struct ErrorStudyRow {
  int horizon = 0;
  std::size_t n_sims = 0;
  std::int64_t base_day = 0;
  int node = 0;
  double mean = 0.0;        // mean of the estimate across repeats
  double fixed = 0.0;
  double dispersion = 0.0;  // sample std across repeats
  double relative_error = 0.0;
  bool nonzero_mean = false;

  friend bool operator==(const ErrorStudyRow&, const ErrorStudyRow&) = default;
};

/// Repeats the predictor `repeats` times with independent arrival seeds and
/// reports the spread for each (horizon, n_sims, base day, node). Relative
/// error is dispersion / |mean|. A mean counts as nonzero when it is more
/// than three standard errors (dispersion / sqrt(repeats)) away from zero, or
/// when there is no dispersion and the mean is not zero. Empty when
/// repeats < 2.
std::vector<ErrorStudyRow> error_study(const OracleInputs& inputs,
                                       std::span<const std::int64_t> base_days,
                                       std::span<const int> horizons,
                                       std::span<const std::size_t> n_sims, std::size_t repeats,
                                       std::uint64_t seed, unsigned threads = 1);

}  // namespace oisnet
