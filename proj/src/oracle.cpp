#include "oisnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "oisnet/errors.hpp"
#include "oisnet/parallel.hpp"

namespace oisnet {

OracleInputs oracle_inputs(const Simulation& sim) {
  OracleInputs in;
  in.path = &sim.path;
  in.book = sim.contracts;
  in.nodes = &sim.nodes;
  in.intensity = sim.config.intensity;
  in.marks = sim.config.marks();
  in.bonds = sim.bonds.get();
  return in;
}

Oracle::Oracle(OracleInputs inputs, std::uint64_t seed) : in_(inputs), seed_(seed) {
  if (!in_.path || !in_.nodes || !in_.bonds) throw ParameterError("oracle inputs are incomplete");
  in_.intensity.validate();
}

void Oracle::check(std::int64_t base_day, int horizon) const {
  if (horizon < 1) throw ParameterError("oracle horizon must be at least 1");
  if (horizon > in_.marks.tenor_days) throw ParameterError("oracle horizon exceeds the contract tenor");
  if (base_day < 0 || base_day + horizon > in_.path->n_days()) {
    throw DataError("realized rate path does not reach day " + std::to_string(base_day + horizon));
  }
}

std::vector<OisContract> Oracle::known_at(std::int64_t base_day) const {
  std::vector<OisContract> known;
  for (const auto& c : in_.book) {
    if (c.start <= base_day) known.push_back(c);
  }
  return known;
}

double Oracle::fixed_component(int node, std::int64_t base_day, int horizon) const {
  check(base_day, horizon);
  const auto known = known_at(base_day);
  const std::int64_t target = base_day + horizon;
  return in_.path->discount(base_day, target) *
         node_margin(known, node, target, *in_.path, *in_.bonds);
}

namespace {

struct SampleJob {
  const OracleInputs* in;
  std::uint64_t seed;
  std::int64_t base_day;
  int max_horizon;
  std::size_t n_sims;
  int only_node;  // -1 for all nodes
};

// Undiscounted margin at t_{l+h} of contracts arriving in (t_l, t_{l+h}),
// per simulation, horizon and node.
std::vector<double> run_samples(const SampleJob& job) {
  const auto& in = *job.in;
  const int n = in.nodes->size();
  const auto H = static_cast<std::size_t>(job.max_horizon);
  std::vector<double> out(job.n_sims * H * static_cast<std::size_t>(n), 0.0);
  const std::int64_t end = job.base_day + job.max_horizon;
  const double tenor_years = TimeGrid::years(in.marks.tenor_days);
  for (std::size_t sim = 0; sim < job.n_sims; ++sim) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (job.only_node >= 0 && job.only_node != i && job.only_node != j) continue;
        const auto pair = static_cast<std::uint64_t>(i * n + j);
        Engine times(derive_seed(job.seed, Stream::oracle, static_cast<std::uint64_t>(job.base_day),
                                 2 * pair, sim));
        Engine signs(derive_seed(job.seed, Stream::oracle, static_cast<std::uint64_t>(job.base_day),
                                 2 * pair + 1, sim));
        const int x_i = in.nodes->features[i];
        const int x_j = in.nodes->features[j];
        const auto events =
            simulate_arrivals(in.intensity, *in.path, pair_feature(x_i, x_j), job.base_day, end, times);
        for (const auto& e : events) {
          const int delta = draw_delta(x_i, x_j, in.marks.delta_rule, signs);
          if (e.day >= end) continue;
          OisContract c;
          c.node_i = i;
          c.node_j = j;
          c.start = e.day;
          c.maturity = e.day + in.marks.tenor_days;
          c.principal = in.marks.principal;
          c.fair_rate = fair_rate(in.bonds->price(c.start, c.maturity), tenor_years);
          c.delta_i = delta;
          for (std::int64_t target = e.day + 1; target <= end; ++target) {
            const double m = contract_margin(c, delta, target, *in.path, *in.bonds);
            const auto h = static_cast<std::size_t>(target - job.base_day - 1);
            double* row = &out[(sim * H + h) * static_cast<std::size_t>(n)];
            row[i] += m;
            row[j] += -m;
          }
        }
      }
    }
  }
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& samples, std::size_t H, int n_nodes, std::size_t h,
                   int node, std::size_t n_sims) {
  double sum = 0.0;
  for (std::size_t s = 0; s < n_sims; ++s) sum += samples[(s * H + h) * n_nodes + node];
  const double mean = sum / static_cast<double>(n_sims);
  MeanSe out{mean, 0.0};
  if (n_sims > 1) {
    double ss = 0.0;
    for (std::size_t s = 0; s < n_sims; ++s) {
      const double d = samples[(s * H + h) * n_nodes + node] - mean;
      ss += d * d;
    }
    out.se = std::sqrt(ss / static_cast<double>(n_sims - 1) / static_cast<double>(n_sims));
  }
  return out;
}

}  // namespace

std::vector<double> Oracle::arrival_samples(std::int64_t base_day, int max_horizon,
                                            std::size_t n_sims) const {
  check(base_day, max_horizon);
  return run_samples({&in_, seed_, base_day, max_horizon, n_sims, -1});
}

Oracle::ArrivalEstimate Oracle::arrivals_component(int node, std::int64_t base_day, int horizon,
                                                   std::size_t n_sims) const {
  check(base_day, horizon);
  if (n_sims < 1) throw ParameterError("oracle needs at least one simulation");
  if (node < 0 || node >= in_.nodes->size()) throw std::out_of_range("node index out of range");
  const auto samples = run_samples({&in_, seed_, base_day, horizon, n_sims, node});
  const auto ms = mean_and_se(samples, static_cast<std::size_t>(horizon), in_.nodes->size(),
                              static_cast<std::size_t>(horizon - 1), node, n_sims);
  const double discount = in_.path->discount(base_day, base_day + horizon);
  return {discount * ms.mean, discount * ms.se};
}

OracleEstimate Oracle::best_predictor(int node, std::int64_t base_day, int horizon,
                                      std::size_t n_sims) const {
  const auto arrivals = arrivals_component(node, base_day, horizon, n_sims);
  OracleEstimate e;
  e.node = node;
  e.base_day = base_day;
  e.horizon = horizon;
  e.fixed_component = fixed_component(node, base_day, horizon);
  e.arrivals_component = arrivals.value;
  e.value = e.fixed_component + e.arrivals_component;
  e.n_sims = n_sims;
  e.std_error = arrivals.std_error;
  return e;
}

std::vector<std::vector<OracleEstimate>> Oracle::evaluate(std::int64_t base_day, int max_horizon,
                                                          std::size_t n_sims) const {
  check(base_day, max_horizon);
  if (n_sims < 1) throw ParameterError("oracle needs at least one simulation");
  const int n = in_.nodes->size();
  const auto H = static_cast<std::size_t>(max_horizon);
  const auto samples = run_samples({&in_, seed_, base_day, max_horizon, n_sims, -1});
  const auto known = known_at(base_day);
  std::vector<std::vector<OracleEstimate>> out(H);
  for (std::size_t h = 0; h < H; ++h) {
    const std::int64_t target = base_day + static_cast<std::int64_t>(h) + 1;
    const double discount = in_.path->discount(base_day, target);
    for (int node = 0; node < n; ++node) {
      const auto ms = mean_and_se(samples, H, n, h, node, n_sims);
      OracleEstimate e;
      e.node = node;
      e.base_day = base_day;
      e.horizon = static_cast<int>(h) + 1;
      e.fixed_component = discount * node_margin(known, node, target, *in_.path, *in_.bonds);
      e.arrivals_component = discount * ms.mean;
      e.value = e.fixed_component + e.arrivals_component;
      e.n_sims = n_sims;
      e.std_error = discount * ms.se;
      out[h].push_back(e);
    }
  }
  return out;
}

std::vector<BondCurveCache::Request> Oracle::bond_requests(std::int64_t base_day,
                                                           int max_horizon) const {
  std::vector<BondCurveCache::Request> out;
  for (std::int64_t d = base_day; d <= base_day + max_horizon; ++d) {
    out.push_back({d, in_.marks.tenor_days});
  }
  return out;
}

std::vector<ErrorStudyRow> error_study(const OracleInputs& inputs,
                                       std::span<const std::int64_t> base_days,
                                       std::span<const int> horizons,
                                       std::span<const std::size_t> n_sims, std::size_t repeats,
                                       std::uint64_t seed, unsigned threads) {
  if (repeats < 2 || base_days.empty() || horizons.empty() || n_sims.empty()) return {};
  const int max_h = *std::max_element(horizons.begin(), horizons.end());
  const std::size_t max_n = *std::max_element(n_sims.begin(), n_sims.end());
  if (*std::min_element(n_sims.begin(), n_sims.end()) < 1) {
    throw ParameterError("error study needs at least one simulation per estimate");
  }
  const int n = inputs.nodes->size();
  const auto H = static_cast<std::size_t>(max_h);

  // values[day][(h_idx * n_sims.size() + s_idx) * n + node][repeat]
  std::vector<std::vector<std::vector<double>>> values(base_days.size());
  std::vector<std::vector<double>> fixed(base_days.size());
  parallel_for(base_days.size(), threads, [&](std::size_t b) {
    const std::int64_t l = base_days[b];
    auto& v = values[b];
    v.assign(horizons.size() * n_sims.size() * static_cast<std::size_t>(n),
             std::vector<double>(repeats, 0.0));
    fixed[b].assign(horizons.size() * static_cast<std::size_t>(n), 0.0);
    const Oracle probe(inputs, seed);
    const auto known = probe.known_at(l);
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      probe.check(l, horizons[hi]);
      const std::int64_t target = l + horizons[hi];
      const double discount = inputs.path->discount(l, target);
      for (int node = 0; node < n; ++node) {
        fixed[b][hi * n + node] =
            discount * node_margin(known, node, target, *inputs.path, *inputs.bonds);
      }
    }
    for (std::size_t r = 0; r < repeats; ++r) {
      const Oracle oracle(inputs, derive_seed(seed, Stream::oracle, r));
      const auto samples = oracle.arrival_samples(l, max_h, max_n);
      for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
        const auto h = static_cast<std::size_t>(horizons[hi] - 1);
        const double discount = inputs.path->discount(l, l + horizons[hi]);
        for (std::size_t si = 0; si < n_sims.size(); ++si) {
          for (int node = 0; node < n; ++node) {
            const auto ms = mean_and_se(samples, H, n, h, node, n_sims[si]);
            v[(hi * n_sims.size() + si) * n + node][r] = fixed[b][hi * n + node] + discount * ms.mean;
          }
        }
      }
    }
  });

  std::vector<ErrorStudyRow> rows;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    for (std::size_t si = 0; si < n_sims.size(); ++si) {
      for (std::size_t b = 0; b < base_days.size(); ++b) {
        for (int node = 0; node < n; ++node) {
          const auto& reps = values[b][(hi * n_sims.size() + si) * n + node];
          double sum = 0.0;
          for (double x : reps) sum += x;
          const double mean = sum / static_cast<double>(repeats);
          double ss = 0.0;
          for (double x : reps) ss += (x - mean) * (x - mean);
          ErrorStudyRow row;
          row.horizon = horizons[hi];
          row.n_sims = n_sims[si];
          row.base_day = base_days[b];
          row.node = node;
          row.mean = mean;
          row.fixed = fixed[b][hi * n + node];
          row.dispersion = std::sqrt(ss / static_cast<double>(repeats - 1));
          row.relative_error = mean != 0.0 ? row.dispersion / std::abs(mean) : 0.0;
          row.nonzero_mean =
              row.dispersion > 0.0
                  ? std::abs(mean) > 3.0 * row.dispersion / std::sqrt(static_cast<double>(repeats))
                  : mean != 0.0;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

}  // namespace oisnet
