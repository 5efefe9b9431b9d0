#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "oisnet/arrivals.hpp"
#include "oisnet/rates.hpp"
#include "oisnet/swaps.hpp"

namespace oisnet {

/// Fixed binary node features: +1 for hubs, -1 for privates.
struct NodeSet {
  std::vector<int> features;

  /// The first n_hubs nodes are hubs.
  static NodeSet with_hubs(int n_nodes, int n_hubs);
  int size() const noexcept { return static_cast<int>(features.size()); }
};

struct SimulationConfig {
  CirParams cir;
  IntensityParams intensity;
  int n_nodes = 5;
  int n_hubs = 2;
  double years = 60.0;
  std::int64_t tenor_days = 365;
  double principal = 1.0;
  DeltaRule delta_rule = DeltaRule::random;
  std::size_t bond_paths = 10'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const;
  std::int64_t n_days() const;
  MarkConfig marks() const { return {principal, tenor_days, delta_rule}; }
};

/// Per-purpose seeds derived from the master seed.
struct SeedSchedule {
  std::uint64_t master = 0;
  std::uint64_t rates = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t marks = 0;
  std::uint64_t bonds = 0;

  static SeedSchedule from_master(std::uint64_t master);
};

struct Simulation {
  SimulationConfig config;
  NodeSet nodes;
  SeedSchedule seeds;
  RatePath path;
  /// Upper-triangle contracts (node_i < node_j), ordered by start day, then
  /// pair, then arrival order; id equals the position in this vector.
  std::vector<OisContract> contracts;
  std::shared_ptr<const BondCurveCache> bonds;

  std::int64_t n_days() const noexcept { return path.n_days(); }
};

/// Simulates the rate path, the Cox arrivals of every unordered pair and their
/// marks. Deterministic given config.seed.
Simulation simulate_network(const SimulationConfig& config);

/// Rebuilds a simulation from stored pieces (rate path, contracts, seeds).
Simulation assemble_simulation(const SimulationConfig& config, const SeedSchedule& seeds,
                               RatePath path, std::vector<OisContract> contracts);

/// Both orientations of every contract: the (i, j) entry carries delta_i and
/// the mirrored (j, i) entry carries -delta_i.
struct ContractLeg {
  std::int64_t contract = 0;
  int node = 0;
  int counterparty = 0;
  int delta = 0;
};
std::vector<ContractLeg> edge_tensor(const Simulation& sim);

/// Net variation margins M^{(i)}(t) for every day (rows) and node (columns).
/// Day 0 is all zeros.
struct LabelTable {
  int n_nodes = 0;
  std::vector<double> values;  // (n_days + 1) x n_nodes, row-major

  double at(std::int64_t day, int node) const {
    return values.at(static_cast<std::size_t>(day) * static_cast<std::size_t>(n_nodes) +
                     static_cast<std::size_t>(node));
  }
  std::int64_t n_days() const noexcept {
    return static_cast<std::int64_t>(values.size() / static_cast<std::size_t>(n_nodes)) - 1;
  }
};
LabelTable compute_labels(const Simulation& sim);

struct Snapshot {
  std::int64_t day = 0;
  double rate = 0.0;
  std::vector<std::uint8_t> adjacency;       // n x n, 1 iff an outstanding contract exists
  std::vector<std::int64_t> live_contracts;  // ids with start < day <= maturity
  std::vector<double> labels;                // per node
};
std::vector<Snapshot> build_snapshots(const Simulation& sim, const LabelTable& labels);

inline constexpr std::size_t contract_features = 6;

/// Largest number of open contracts (start <= t < maturity) any node holds on
/// any day. The contract matrix width is this times contract_features.
std::size_t max_open_contracts(const Simulation& sim);

/// Rows are days [first_day, last_day]; each open contract of the node
/// occupies one block of six columns
///   [(T - t)/365, p(t0,T), p(t,T), B(t0), B(t), delta]
/// on the rows where it is open, and keeps that block for the whole window.
/// Blocks are assigned greedily in start order, so a block freed by a matured
/// contract can be reused later in the window. Unused entries are zero.
struct ContractMatrix {
  std::int64_t first_day = 0;
  std::size_t rows = 0;
  std::size_t blocks = 0;
  std::vector<double> values;                 // rows x (blocks * 6), row-major
  std::vector<std::int64_t> block_contract;   // rows x blocks, -1 when empty

  std::size_t width() const noexcept { return blocks * contract_features; }
  double at(std::size_t row, std::size_t col) const { return values.at(row * width() + col); }
};
ContractMatrix build_contract_matrix(const Simulation& sim, int node, std::int64_t first_day,
                                     std::int64_t last_day, std::size_t blocks);

enum class Split : std::int64_t { train = 0, validation = 1 };

/// A window ends at base day l: rows are l-k+1 .. l, targets are l+1 .. l+m.
struct WindowSpec {
  std::int64_t id = 0;
  std::int64_t base_day = 0;
  Split split = Split::train;
};

/// Windows slide with stride 1 over base days k .. n_days - m. The first
/// floor(split * eligible) go to training; validation windows start once
/// their first target day is past the last training target day, so the two
/// sets never share a target day.
struct WindowPlan {
  int lookback = 5;
  int horizon = 1;
  double split = 0.8;
  std::int64_t eligible = 0;
  std::int64_t boundary_day = 0;  // last target day of the training set
  std::vector<WindowSpec> train;
  std::vector<WindowSpec> validation;

  std::vector<WindowSpec> all() const;
  std::size_t size() const noexcept { return train.size() + validation.size(); }
};
WindowPlan make_windows(std::int64_t n_days, int lookback, int horizon, double split);

struct Window {
  WindowSpec spec;
  std::vector<std::int64_t> row_days;
  std::vector<ContractMatrix> matrices;     // per node
  std::vector<double> conditioning;         // r(t_{l+1}) .. r(t_{l+m})
  std::vector<std::vector<double>> labels;  // per node, M(t_{l+1}) .. M(t_{l+m})
};
Window assemble_window(const Simulation& sim, const LabelTable& labels, const WindowSpec& spec,
                       int lookback, int horizon, std::size_t blocks);

}  // namespace oisnet
