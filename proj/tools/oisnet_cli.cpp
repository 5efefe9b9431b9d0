#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "oisnet/commands.hpp"
#include "oisnet/errors.hpp"
#include "oisnet/parallel.hpp"

namespace fs = std::filesystem;
using namespace oisnet;

int main(int argc, char** argv) {
  CLI::App app{"Simulate OTC swap networks, export windowed datasets and benchmark margin forecasts"};
  app.set_config("--config", "", "key = value file (INI or TOML); command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig rc;
  rc.threads = default_threads();
  std::string delta_rule = "random";
  std::string format = "binary";
  std::string windows = "validation";
  auto& sc = rc.sim;

  auto* g = "Simulation";
  app.add_option("--nodes", sc.n_nodes, "number of nodes")->capture_default_str()->group(g);
  app.add_option("--hubs", sc.n_hubs, "number of hub nodes (the first ones)")->capture_default_str()->group(g);
  app.add_option("--years", sc.years, "simulated horizon in years")->capture_default_str()->group(g);
  app.add_option("--seed", sc.seed, "master seed")->capture_default_str()->group(g);
  app.add_option("--kappa", sc.cir.kappa, "rate mean-reversion speed")->capture_default_str()->group(g);
  app.add_option("--theta-cir", sc.cir.theta, "rate long-run mean")->capture_default_str()->group(g);
  app.add_option("--sigma", sc.cir.sigma, "rate volatility")->capture_default_str()->group(g);
  app.add_option("--r0", sc.cir.r0, "initial rate")->capture_default_str()->group(g);
  app.add_option("--gamma", sc.intensity.gamma, "intensity scale")->capture_default_str()->group(g);
  app.add_option("--eta", sc.intensity.eta, "intensity offset")->capture_default_str()->group(g);
  app.add_option("--theta-int", sc.intensity.theta_int, "intensity rate loading")->capture_default_str()->group(g);
  app.add_option("--beta", sc.intensity.beta, "intensity pair-feature loading")->capture_default_str()->group(g);
  app.add_option("--tenor-days", sc.tenor_days, "contract tenor in days")->capture_default_str()->group(g);
  app.add_option("--principal", sc.principal, "contract principal")->capture_default_str()->group(g);
  app.add_option("--delta-rule", delta_rule, "random | hub_receiver")->capture_default_str()->group(g);
  app.add_option("--bond-paths", sc.bond_paths, "paths per bond-price estimate")->capture_default_str()->group(g);

  g = "Dataset";
  app.add_option("--lookback", rc.lookback, "window lookback k")->capture_default_str()->group(g);
  app.add_option("--horizon", rc.horizon, "steps ahead m")->capture_default_str()->group(g);
  app.add_option("--split", rc.split, "training fraction of the windows")->capture_default_str()->group(g);
  app.add_option("--format", format, "binary | csv")->capture_default_str()->group(g);

  g = "Benchmark";
  app.add_option("--sims", rc.n_sims, "arrival simulations per oracle estimate")->capture_default_str()->group(g);
  app.add_option("--repeats", rc.repeats, "independent oracle repeats for the error study")->capture_default_str()->group(g);
  app.add_option("--windows", windows, "all | train | validation")->capture_default_str()->group(g);
  app.add_option("--max-windows", rc.max_windows, "evenly thin the selected windows (0 keeps all)")->capture_default_str()->group(g);
  app.add_option("--study-horizons", rc.study_horizons, "error-study horizons (default 1 and the dataset horizon)")->delimiter(',')->group(g);
  app.add_option("--study-sims", rc.study_sims, "error-study simulation counts (default 10,100,sims)")->delimiter(',')->group(g);

  app.add_option("--threads", rc.threads, "worker threads")->capture_default_str();

  const fs::path root = default_output_root();
  fs::path sim_out = root / "simulation";
  fs::path data_out = root / "dataset";
  fs::path bench_out = root / "benchmark";
  fs::path eval_out = root / "evaluation";
  fs::path sim_in = sim_out;
  fs::path data_in = data_out;
  fs::path predictions;
  std::optional<fs::path> oracle_in;

  auto* simulate = app.add_subcommand("simulate", "simulate a network and write rates, contracts and snapshots");
  simulate->add_option("--out", sim_out, "output directory")->capture_default_str();

  auto* exp = app.add_subcommand("export", "window a stored simulation into a dataset");
  exp->add_option("--input", sim_in, "simulation directory")->capture_default_str();
  exp->add_option("--out", data_out, "dataset directory")->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "oracle values and error study for a dataset");
  bench->add_option("--dataset", data_in, "dataset directory")->capture_default_str();
  bench->add_option("--out", bench_out, "output directory")->capture_default_str();

  auto* eval = app.add_subcommand("evaluate", "score a predictions CSV against labels and oracle values");
  eval->add_option("--predictions", predictions, "CSV with window_id,node,step,prediction")->required();
  eval->add_option("--dataset", data_in, "dataset directory")->capture_default_str();
  eval->add_option("--oracle", oracle_in, "benchmark directory");
  eval->add_option("--out", eval_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "oisnet: " << e.what() << "\n";
    return 2;
  }

  try {
    sc.delta_rule = parse_delta_rule(delta_rule);
    rc.format = parse_format(format);
    rc.windows = parse_window_selection(windows);
    rc.validate();
    if (simulate->parsed()) {
      cmd_simulate(rc, sim_out, std::cout);
    } else if (exp->parsed()) {
      cmd_export(rc, sim_in, data_out, std::cout);
    } else if (bench->parsed()) {
      cmd_benchmark(rc, data_in, bench_out, std::cout);
    } else if (eval->parsed()) {
      cmd_evaluate(predictions, data_in, oracle_in, eval_out, std::cout);
    }
  } catch (const ParameterError& e) {
    std::cerr << "oisnet: invalid parameter: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "oisnet: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
