// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oisnet/arrivals.hpp"
#include "oisnet/network.hpp"
#include "oisnet/oracle.hpp"
#include "oisnet/parallel.hpp"
#include "oisnet/rates.hpp"
#include "oisnet/swaps.hpp"
#include "oracles.hpp"

using namespace oisnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

Outcome cir_exactness() {
  const CirParams p;
  const double r0 = p.r0;
  const int n = 100000;
  const CirTransition step(p, TimeGrid::dt);
  Engine rng(derive_seed(2024, Stream::rates));
  std::vector<double> x(n);
  for (auto& v : x) v = step.sample(r0, rng);

  const bool positive = std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  const auto exact = cir_conditional_moments(p, r0, TimeGrid::dt);
  const double z_mean = (mean - exact.mean) / std::sqrt(exact.variance / n);
  const double z_var = (m2 - exact.variance) / std::sqrt((m4 - m2 * m2) / n);

  const auto law = ref::cir_step(p.kappa, p.theta, p.sigma, r0, TimeGrid::dt);
  std::sort(x.begin(), x.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = ref::ncx2_cdf(law.d, law.nc, x[i] / law.c);
    ks = std::max({ks, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  const double critical = 1.628 / std::sqrt(static_cast<double>(n));
  const bool pass = positive && std::abs(z_mean) < 4.0 && std::abs(z_var) < 4.0 && ks < critical;
  return {pass, "mean z=" + num(z_mean) + ", variance z=" + num(z_var) + ", KS D=" + num(ks) +
                    " (1% critical " + num(critical) + "), all positive=" + (positive ? "yes" : "no")};
}

struct LongRun {
  Simulation sim;
  LabelTable labels;
};

const LongRun& long_run() {
  static const LongRun run = [] {
    SimulationConfig c;  // 5 nodes, 60 years, default parameters
    c.bond_paths = 16;
    c.seed = 60;
    c.threads = default_threads();
    LongRun r{simulate_network(c), {}};
    r.labels = compute_labels(r.sim);
    return r;
  }();
  return run;
}

Outcome inception_zero() {
  const auto& sim = long_run().sim;
  std::size_t bad = 0;
  double worst_unmasked = 0.0;
  for (const auto& c : sim.contracts) {
    const double p = sim.bonds->price(c.start, c.maturity);
    for (int delta : {c.delta_i, -c.delta_i}) {
      if (contract_value(c, delta, c.start, sim.path, p) != 0.0) ++bad;
    }
    worst_unmasked = std::max(worst_unmasked, std::abs(p * (1.0 + c.fair_rate * c.tenor_years()) - 1.0));
  }
  const bool pass = bad == 0 && !sim.contracts.empty() && worst_unmasked < 1e-14;
  return {pass, std::to_string(sim.contracts.size()) + " contracts, " + std::to_string(bad) +
                    " nonzero inception values, largest |p(1+K tau) - 1| = " + num(worst_unmasked)};
}

Outcome conservation() {
  const auto& [sim, labels] = long_run();
  double worst = 0.0;
  std::size_t nonzero_days = 0;
  for (std::int64_t d = 1; d <= sim.n_days(); ++d) {
    double sum = 0.0, scale = 0.0;
    for (int v = 0; v < labels.n_nodes; ++v) {
      sum += labels.at(d, v);
      scale = std::max(scale, std::abs(labels.at(d, v)));
    }
    if (scale > 0.0) {
      ++nonzero_days;
      worst = std::max(worst, std::abs(sum) / scale);
    } else if (sum != 0.0) {
      worst = INFINITY;
    }
  }
  return {worst <= 1e-10 && nonzero_days > 0,
          std::to_string(sim.n_days()) + " days (" + std::to_string(nonzero_days) +
              " with margins), worst |sum|/max|M| = " + num(worst)};
}

Outcome martingale() {
  const CirParams p;
  const auto path = sample_cir_path(p, TimeGrid{301}, 77);
  OisContract c;
  c.node_i = 0;
  c.node_j = 1;
  c.start = 0;
  c.maturity = 365;
  c.delta_i = 1;
  c.fair_rate = fair_rate(bond_price(p, p.r0, 0, 365, 100000, 1).price, 1.0);
  const std::int64_t l = 300;
  const auto now = bond_price(p, path.rate(l), l, c.maturity, 100000, 2);
  const std::vector<double> history(path.rates().begin(), path.rates().begin() + l + 1);
  const double v_prev = contract_value(c, 1, l, RatePath(history), now.price);

  const int futures = 10000;
  const CirTransition step(p, TimeGrid::dt);
  std::vector<double> dm(futures);
  parallel_for(futures, default_threads(), [&](std::size_t j) {
    Engine rng(derive_seed(3, j));
    const double r_next = step.sample(path.rate(l), rng);
    auto ext = history;
    ext.push_back(r_next);
    const RatePath future(std::move(ext));
    const double p_next = bond_price(p, r_next, l + 1, c.maturity, 64, derive_seed(4, j)).price;
    const double v_next = contract_value(c, 1, l + 1, future, p_next);
    dm[j] = variation_margin(v_prev, v_next, r_next) / (1.0 + r_next * TimeGrid::dt);
  });
  double mean = 0.0;
  for (double x : dm) mean += x;
  mean /= futures;
  double var = 0.0;
  for (double x : dm) var += (x - mean) * (x - mean);
  var /= futures - 1;
  // v_prev itself carries Monte Carlo error common to every future.
  const double se = std::sqrt(var / futures + std::pow((1.0 + c.fair_rate) * now.std_error, 2));
  return {std::abs(mean) < 4.0 * se,
          "mean discounted margin " + num(mean) + ", standard error " + num(se) + " (" +
              num(std::abs(mean) / se) + " SE)"};
}

Outcome poisson() {
  IntensityParams p;
  const double r = 0.05;
  const RatePath path(std::vector<double>(3651, r));
  const double expected = intensity(p, r, 1.0) * 10.0;
  const int runs = 10000;
  Engine rng(derive_seed(9, Stream::arrivals));
  double total = 0.0;
  for (int k = 0; k < runs; ++k) total += static_cast<double>(simulate_arrivals(p, path, 1.0, 0, 3650, rng).size());
  const double mean = total / runs;
  const double se = std::sqrt(expected / runs);
  return {std::abs(mean - expected) < 4.0 * se,
          "mean count " + num(mean) + " vs lambda T = " + num(expected) + " (" +
              num((mean - expected) / se) + " SE)"};
}

Outcome one_step_identity() {
  const auto& [sim, labels] = long_run();
  const Oracle oracle(oracle_inputs(sim), derive_seed(sim.seeds.master, Stream::oracle));
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::int64_t l = 0; l < sim.n_days(); ++l) {
    const auto est = oracle.evaluate(l, 1, 1);
    for (int v = 0; v < labels.n_nodes; ++v) {
      const double target = sim.path.discount(l, l + 1) * labels.at(l + 1, v);
      const double err = std::abs(est[0][v].value - target);
      worst = std::max(worst, target != 0.0 ? err / std::abs(target) : (err == 0.0 ? 0.0 : INFINITY));
      ++checked;
    }
  }
  return {worst <= 1e-10, std::to_string(checked) + " node-days, worst relative deviation " + num(worst)};
}

Outcome error_study_reproduction() {
  SimulationConfig c;  // default parameters
  c.years = 10.0;
  c.bond_paths = 10000;
  c.seed = 7;
  c.threads = default_threads();
  const auto sim = simulate_network(c);
  const int m = 21;
  std::vector<std::int64_t> candidates;
  for (std::int64_t l = 1; l + m <= sim.n_days(); ++l) {
    for (const auto& k : sim.contracts) {
      if (k.open(l)) {
        candidates.push_back(l);
        break;
      }
    }
  }
  if (candidates.empty()) return {false, "no base day with an open contract"};
  const std::size_t n_days = std::min<std::size_t>(16, candidates.size());
  std::vector<std::int64_t> base_days;
  for (std::size_t i = 0; i < n_days; ++i) base_days.push_back(candidates[(2 * i + 1) * candidates.size() / (2 * n_days)]);

  const auto inputs = oracle_inputs(sim);
  const Oracle probe(inputs, 0);
  std::vector<BondCurveCache::Request> req;
  for (auto l : base_days) {
    const auto r = probe.bond_requests(l, m);
    req.insert(req.end(), r.begin(), r.end());
  }
  sim.bonds->prefetch(req, default_threads());
  const std::vector<int> horizons{m};
  const std::vector<std::size_t> sims{1000};
  const auto rows = error_study(inputs, base_days, horizons, sims, 100, 11, default_threads());
  std::size_t nonzero = 0, below = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    if (!r.nonzero_mean) continue;
    ++nonzero;
    below += r.relative_error < 0.02;
    worst = std::max(worst, r.relative_error);
  }
  const double fraction = nonzero ? static_cast<double>(below) / static_cast<double>(nonzero) : 0.0;

  // Informational only: per base day, norm of dispersions over norm of means across nodes.
  std::map<std::int64_t, std::pair<double, double>> by_day;
  for (const auto& r : rows) {
    if (!r.nonzero_mean) continue;
    auto& [ss_disp, ss_mean] = by_day[r.base_day];
    ss_disp += r.dispersion * r.dispersion;
    ss_mean += r.mean * r.mean;
  }
  std::size_t days_below = 0;
  for (const auto& [day, s] : by_day) days_below += std::sqrt(s.first / s.second) < 0.02;

  std::ostringstream dump;
  for (const auto& r : rows) {
    if (r.nonzero_mean) {
      dump << "\n    day " << r.base_day << " node " << r.node << " mean " << num(r.mean) << " fixed "
           << num(r.fixed) << " dispersion " << num(r.dispersion) << " rel " << num(r.relative_error);
    }
  }
  return {nonzero > 0 && fraction >= 0.9,
          std::to_string(below) + " of " + std::to_string(nonzero) + " nonzero-mean (base day, node) estimates below 2% (" +
              num(100 * fraction) + "%), " + std::to_string(base_days.size()) + " base days, " +
              std::to_string(sim.contracts.size()) + " contracts, largest relative error " + num(worst) +
              "; node-aggregated: " + std::to_string(days_below) + " of " + std::to_string(by_day.size()) +
              " base days below 2% (not gating)" + dump.str()};
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const auto root = ref::scratch("acceptance_determinism");
  const std::string cli = "\"" OISNET_CLI "\"";
  const std::string common = " --nodes 5 --years 2 --gamma 30 --bond-paths 64 --seed 99";
  for (const std::string run_id : {"a", "b"}) {
    const auto dir = root / run_id;
    const std::string threads = run_id == "a" ? " --threads 1" : " --threads 3";
    const std::string quiet = " > /dev/null";
    if (run(cli + " simulate" + common + threads + " --out \"" + (dir / "sim").string() + "\"" + quiet) != 0 ||
        run(cli + " export --horizon 5 --format csv" + threads + " --input \"" + (dir / "sim").string() +
            "\" --out \"" + (dir / "data").string() + "\"" + quiet) != 0 ||
        run(cli + " benchmark --sims 50 --repeats 3 --max-windows 8" + threads + " --dataset \"" +
            (dir / "data").string() + "\" --out \"" + (dir / "bench").string() + "\"" + quiet) != 0) {
      return {false, "pipeline run " + run_id + " failed"};
    }
  }
  const auto a = ref::tree(root / "a");
  const auto b = ref::tree(root / "b");
  std::size_t differing = 0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) differing += a[k] != b[k];
  const bool pass = a.size() == b.size() && differing == 0 && a.size() == 12;
  return {pass, std::to_string(a.size()) + " files per run, " + std::to_string(differing) +
                    " differ (thread counts 1 and 3)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cir_exactness", cir_exactness},
      {"inception_zero", inception_zero},
      {"conservation", conservation},
      {"martingale", martingale},
      {"poisson_check", poisson},
      {"one_step_oracle_identity", one_step_identity},
      {"error_study_reproduction", error_study_reproduction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << num(secs) << " s]"
              << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
