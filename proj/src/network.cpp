#include "oisnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "oisnet/errors.hpp"
#include "oisnet/parallel.hpp"

namespace oisnet {

NodeSet NodeSet::with_hubs(int n_nodes, int n_hubs) {
  if (n_nodes < 1) throw ParameterError("network needs at least one node");
  if (n_hubs < 0 || n_hubs > n_nodes) throw ParameterError("hub count must be in [0, nodes]");
  NodeSet set;
  set.features.assign(static_cast<std::size_t>(n_nodes), private_node);
  std::fill_n(set.features.begin(), n_hubs, hub);
  return set;
}

void SimulationConfig::validate() const {
  cir.validate();
  intensity.validate();
  if (n_nodes < 2) throw ParameterError("network needs at least two nodes");
  if (n_hubs < 0 || n_hubs > n_nodes) throw ParameterError("hub count must be in [0, nodes]");
  if (!(years > 0.0) || !std::isfinite(years)) throw ParameterError("horizon must be positive");
  if (n_days() < 1) throw ParameterError("horizon must cover at least one day");
  if (tenor_days < 1) throw ParameterError("contract tenor must be at least one day");
  if (!(principal > 0.0)) throw ParameterError("principal must be positive");
  if (bond_paths < 1) throw ParameterError("bond pricing needs at least one path");
}

std::int64_t SimulationConfig::n_days() const {
  return static_cast<std::int64_t>(std::llround(years * days_per_year));
}

SeedSchedule SeedSchedule::from_master(std::uint64_t master) {
  return {master, derive_seed(master, Stream::rates), derive_seed(master, Stream::arrivals),
          derive_seed(master, Stream::marks), derive_seed(master, Stream::bonds)};
}

Simulation assemble_simulation(const SimulationConfig& config, const SeedSchedule& seeds,
                               RatePath path, std::vector<OisContract> contracts) {
  config.validate();
  Simulation sim;
  sim.config = config;
  sim.nodes = NodeSet::with_hubs(config.n_nodes, config.n_hubs);
  sim.seeds = seeds;
  sim.path = std::move(path);
  sim.contracts = std::move(contracts);
  for (std::size_t k = 0; k < sim.contracts.size(); ++k) {
    const auto& c = sim.contracts[k];
    if (c.id != static_cast<std::int64_t>(k) || c.node_i >= c.node_j || c.node_i < 0 ||
        c.node_j >= config.n_nodes || c.maturity <= c.start || (c.delta_i != 1 && c.delta_i != -1)) {
      throw DataError("malformed contract record " + std::to_string(k));
    }
  }
  sim.bonds = std::make_shared<BondCurveCache>(config.cir, sim.path, config.bond_paths, seeds.bonds);
  return sim;
}

Simulation simulate_network(const SimulationConfig& config) {
  config.validate();
  const SeedSchedule seeds = SeedSchedule::from_master(config.seed);
  RatePath path = sample_cir_path(config.cir, TimeGrid{config.n_days()}, seeds.rates);
  Simulation sim = assemble_simulation(config, seeds, std::move(path), {});

  struct Pending {
    std::int64_t day;
    int i, j;
    std::size_t seq;
  };
  std::vector<Pending> pending;
  const int n = config.n_nodes;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Engine rng(derive_seed(seeds.arrivals, static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(j)));
      const double g = pair_feature(sim.nodes.features[i], sim.nodes.features[j]);
      const auto events = simulate_arrivals(config.intensity, sim.path, g, 0, sim.n_days(), rng);
      for (std::size_t s = 0; s < events.size(); ++s) pending.push_back({events[s].day, i, j, s});
    }
  }

  std::vector<BondCurveCache::Request> requests;
  requests.reserve(pending.size());
  for (const auto& p : pending) requests.push_back({p.day, config.tenor_days});
  sim.bonds->prefetch(requests, config.threads);

  // marks are drawn per pair in arrival order
  const MarkConfig mark_config = config.marks();
  std::vector<OisContract> contracts(pending.size());
  {
    std::size_t k = 0;
    while (k < pending.size()) {
      const int i = pending[k].i, j = pending[k].j;
      Engine rng(derive_seed(seeds.marks, static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(j)));
      for (; k < pending.size() && pending[k].i == i && pending[k].j == j; ++k) {
        const Marks m = draw_marks(pending[k].day, sim.nodes.features[i], sim.nodes.features[j],
                                   *sim.bonds, mark_config, rng);
        auto& c = contracts[k];
        c.node_i = i;
        c.node_j = j;
        c.start = pending[k].day;
        c.maturity = m.maturity;
        c.principal = m.principal;
        c.fair_rate = m.fair_rate;
        c.delta_i = m.delta_i;
      }
    }
  }
  std::vector<std::size_t> order(pending.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(pending[a].day, pending[a].i, pending[a].j, pending[a].seq) <
           std::tie(pending[b].day, pending[b].i, pending[b].j, pending[b].seq);
  });
  sim.contracts.reserve(order.size());
  for (std::size_t k : order) {
    sim.contracts.push_back(contracts[k]);
    sim.contracts.back().id = static_cast<std::int64_t>(sim.contracts.size()) - 1;
  }
  return sim;
}

std::vector<ContractLeg> edge_tensor(const Simulation& sim) {
  std::vector<ContractLeg> legs;
  legs.reserve(2 * sim.contracts.size());
  for (const auto& c : sim.contracts) {
    legs.push_back({c.id, c.node_i, c.node_j, c.delta_i});
    legs.push_back({c.id, c.node_j, c.node_i, -c.delta_i});
  }
  return legs;
}

namespace {

// Curves needed to value every contract on every day it is outstanding.
std::vector<BondCurveCache::Request> valuation_requests(const Simulation& sim) {
  std::vector<std::int64_t> need(static_cast<std::size_t>(sim.n_days()) + 1, 0);
  for (const auto& c : sim.contracts) {
    const std::int64_t last = std::min(c.maturity, sim.n_days());
    for (std::int64_t d = c.start; d <= last; ++d) {
      auto& slot = need[static_cast<std::size_t>(d)];
      slot = std::max(slot, c.maturity - d);
    }
  }
  std::vector<BondCurveCache::Request> requests;
  for (std::size_t d = 0; d < need.size(); ++d) {
    if (need[d] > 0) requests.push_back({static_cast<std::int64_t>(d), need[d]});
  }
  return requests;
}

}  // namespace

LabelTable compute_labels(const Simulation& sim) {
  const auto requests = valuation_requests(sim);
  sim.bonds->prefetch(requests, sim.config.threads);

  const int n = sim.nodes.size();
  LabelTable table;
  table.n_nodes = n;
  table.values.assign(static_cast<std::size_t>(sim.n_days() + 1) * static_cast<std::size_t>(n), 0.0);
  std::vector<OisContract> live;
  std::size_t first_unstarted = 0;
  std::vector<OisContract> started;
  for (std::int64_t day = 1; day <= sim.n_days(); ++day) {
    while (first_unstarted < sim.contracts.size() && sim.contracts[first_unstarted].start < day) {
      started.push_back(sim.contracts[first_unstarted++]);
    }
    live.clear();
    for (const auto& c : started) {
      if (c.alive(day)) live.push_back(c);
    }
    std::erase_if(started, [day](const OisContract& c) { return c.maturity < day; });
    for (int node = 0; node < n; ++node) {
      table.values[static_cast<std::size_t>(day) * n + node] =
          node_margin(live, node, day, sim.path, *sim.bonds);
    }
  }
  return table;
}

std::vector<Snapshot> build_snapshots(const Simulation& sim, const LabelTable& labels) {
  const int n = sim.nodes.size();
  if (labels.n_nodes != n || labels.n_days() != sim.n_days()) {
    throw DataError("label table does not match the simulation");
  }
  std::vector<Snapshot> out(static_cast<std::size_t>(sim.n_days()) + 1);
  for (std::int64_t day = 0; day <= sim.n_days(); ++day) {
    auto& s = out[static_cast<std::size_t>(day)];
    s.day = day;
    s.rate = sim.path.rate(day);
    s.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
    s.labels.resize(static_cast<std::size_t>(n));
    for (int node = 0; node < n; ++node) s.labels[node] = labels.at(day, node);
  }
  for (const auto& c : sim.contracts) {
    const std::int64_t last = std::min(c.maturity, sim.n_days());
    for (std::int64_t day = c.start + 1; day <= last; ++day) {
      auto& s = out[static_cast<std::size_t>(day)];
      s.adjacency[static_cast<std::size_t>(c.node_i) * n + c.node_j] = 1;
      s.adjacency[static_cast<std::size_t>(c.node_j) * n + c.node_i] = 1;
      s.live_contracts.push_back(c.id);
    }
  }
  return out;
}

std::size_t max_open_contracts(const Simulation& sim) {
  const int n = sim.nodes.size();
  const auto days = static_cast<std::size_t>(sim.n_days()) + 2;
  std::vector<std::int64_t> delta(days * static_cast<std::size_t>(n), 0);
  auto bump = [&](int node, std::int64_t day, std::int64_t v) {
    if (day < static_cast<std::int64_t>(days)) delta[static_cast<std::size_t>(day) * n + node] += v;
  };
  for (const auto& c : sim.contracts) {
    for (int node : {c.node_i, c.node_j}) {
      bump(node, c.start, +1);
      bump(node, c.maturity, -1);
    }
  }
  std::size_t best = 0;
  for (int node = 0; node < n; ++node) {
    std::int64_t open = 0;
    for (std::size_t d = 0; d + 1 < days; ++d) {
      open += delta[d * n + node];
      best = std::max(best, static_cast<std::size_t>(open));
    }
  }
  return best;
}

ContractMatrix build_contract_matrix(const Simulation& sim, int node, std::int64_t first_day,
                                     std::int64_t last_day, std::size_t blocks) {
  if (first_day < 0 || last_day > sim.n_days() || first_day > last_day) {
    throw std::out_of_range("contract matrix window [" + std::to_string(first_day) + ", " +
                            std::to_string(last_day) + "] outside the simulated horizon");
  }
  if (node < 0 || node >= sim.nodes.size()) throw std::out_of_range("node index out of range");
  ContractMatrix m;
  m.first_day = first_day;
  m.rows = static_cast<std::size_t>(last_day - first_day + 1);
  m.blocks = blocks;
  m.values.assign(m.rows * m.width(), 0.0);
  m.block_contract.assign(m.rows * blocks, -1);

  std::vector<std::int64_t> free_from(blocks, first_day);
  for (const auto& c : sim.contracts) {
    if (!c.involves(node)) continue;
    const std::int64_t a = std::max(c.start, first_day);
    const std::int64_t b = std::min(c.maturity - 1, last_day);
    if (a > b) continue;
    std::size_t block = 0;
    while (block < blocks && free_from[block] > a) ++block;
    if (block == blocks) {
      throw std::logic_error("contract matrix width too small for node " + std::to_string(node));
    }
    free_from[block] = b + 1;
    const int delta = c.delta_for(node);
    const double p_start = sim.bonds->price(c.start, c.maturity);
    const double b_start = sim.path.accumulator(c.start);
    for (std::int64_t t = a; t <= b; ++t) {
      const auto row = static_cast<std::size_t>(t - first_day);
      double* cell = &m.values[row * m.width() + block * contract_features];
      cell[0] = static_cast<double>(c.maturity - t) / days_per_year;
      cell[1] = p_start;
      cell[2] = sim.bonds->price(t, c.maturity);
      cell[3] = b_start;
      cell[4] = sim.path.accumulator(t);
      cell[5] = static_cast<double>(delta);
      m.block_contract[row * blocks + block] = c.id;
    }
  }
  return m;
}

std::vector<WindowSpec> WindowPlan::all() const {
  std::vector<WindowSpec> out(train);
  out.insert(out.end(), validation.begin(), validation.end());
  return out;
}

WindowPlan make_windows(std::int64_t n_days, int lookback, int horizon, double split) {
  if (lookback < 1) throw ParameterError("lookback must be at least 1");
  if (horizon < 1) throw ParameterError("steps ahead must be at least 1");
  if (!(split > 0.0 && split < 1.0)) throw ParameterError("split must be in (0, 1)");
  WindowPlan plan;
  plan.lookback = lookback;
  plan.horizon = horizon;
  plan.split = split;
  const std::int64_t first_base = lookback;
  const std::int64_t last_base = n_days - horizon;
  plan.eligible = last_base - first_base + 1;
  if (plan.eligible < 1) {
    throw DataError("horizon of " + std::to_string(n_days) + " days is too short for lookback " +
                    std::to_string(lookback) + " and " + std::to_string(horizon) + " steps ahead");
  }
  const auto n_train = static_cast<std::int64_t>(std::floor(split * static_cast<double>(plan.eligible)));
  std::int64_t id = 0;
  for (std::int64_t l = first_base; l < first_base + n_train; ++l) {
    plan.train.push_back({id++, l, Split::train});
  }
  plan.boundary_day = n_train > 0 ? first_base + n_train - 1 + horizon : first_base;
  const std::int64_t first_validation = n_train > 0 ? plan.boundary_day : first_base;
  for (std::int64_t l = first_validation; l <= last_base; ++l) {
    plan.validation.push_back({id++, l, Split::validation});
  }
  return plan;
}

Window assemble_window(const Simulation& sim, const LabelTable& labels, const WindowSpec& spec,
                       int lookback, int horizon, std::size_t blocks) {
  const std::int64_t first = spec.base_day - lookback + 1;
  const std::int64_t last_target = spec.base_day + horizon;
  if (first < 0 || last_target > sim.n_days()) {
    throw std::out_of_range("window " + std::to_string(spec.id) + " exceeds the simulated horizon");
  }
  Window w;
  w.spec = spec;
  for (std::int64_t d = first; d <= spec.base_day; ++d) w.row_days.push_back(d);
  for (std::int64_t d = spec.base_day + 1; d <= last_target; ++d) {
    w.conditioning.push_back(sim.path.rate(d));
  }
  const int n = sim.nodes.size();
  for (int node = 0; node < n; ++node) {
    w.matrices.push_back(build_contract_matrix(sim, node, first, spec.base_day, blocks));
    std::vector<double> target;
    for (std::int64_t d = spec.base_day + 1; d <= last_target; ++d) target.push_back(labels.at(d, node));
    w.labels.push_back(std::move(target));
  }
  return w;
}

}  // namespace oisnet
