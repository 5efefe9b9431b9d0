#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oisnet/dataset.hpp"
#include "oisnet/network.hpp"

namespace oisnet {

enum class WindowSelection { all, train, validation };
WindowSelection parse_window_selection(const std::string& name);
std::string to_string(WindowSelection s);

/// Everything an operator can set. Paths and the thread count are not part of
/// the echoed configuration because they never change an output byte.
struct RunConfig {
  SimulationConfig sim;
  int lookback = 5;
  int horizon = 2;
  double split = 0.8;
  Format format = Format::binary;

  std::size_t n_sims = 1000;
  std::size_t repeats = 1;
  WindowSelection windows = WindowSelection::validation;
  std::size_t max_windows = 0;  // 0 keeps every selected window
  std::vector<int> study_horizons;            // empty: {1, horizon}
  std::vector<std::size_t> study_sims;        // empty: {10, 100, n_sims} capped at n_sims

  unsigned threads = 1;

  void validate() const;
  std::vector<int> effective_study_horizons(int horizon) const;
  std::vector<std::size_t> effective_study_sims() const;
};

nlohmann::json to_json(const RunConfig& config);

/// OISNET_OUTPUT_ROOT if set, else the working directory.
std::filesystem::path default_output_root();

struct SimulationSummary {
  std::size_t contracts = 0;
  std::size_t hub_hub = 0;
  std::size_t hub_private = 0;
  std::size_t private_private = 0;
  std::size_t max_open = 0;
  double label_mean = 0.0;
  double label_std = 0.0;
  double label_min = 0.0;
  double label_max = 0.0;
  double max_conservation_error = 0.0;
};
SimulationSummary summarize(const Simulation& sim, const LabelTable& labels);

SimulationSummary cmd_simulate(const RunConfig& config, const std::filesystem::path& out,
                               std::ostream& log);

/// Windows the stored simulation with the configured lookback, horizon and
/// split. Labels are recomputed and must match the stored ones bit for bit.
void cmd_export(const RunConfig& config, const std::filesystem::path& simulation_dir,
                const std::filesystem::path& out, std::ostream& log);

/// Oracle values for the selected windows of an exported dataset, at every
/// step 1 .. horizon, plus the repeat-dispersion table when repeats > 1.
void cmd_benchmark(const RunConfig& config, const std::filesystem::path& dataset_dir,
                   const std::filesystem::path& out, std::ostream& log);

struct StepMetrics {
  int step = 0;  // 0 for the aggregate
  std::size_t count = 0;
  double mse_labels = 0.0;
  std::size_t oracle_count = 0;
  double mse_oracle = 0.0;
};

struct EvaluationReport {
  std::vector<StepMetrics> steps;
  StepMetrics overall;
};

/// Scores a predictions CSV (window_id,node,step,prediction) against the
/// dataset labels and, if given, the benchmark oracle values. Reads its
/// inputs only; results go to `out`.
EvaluationReport cmd_evaluate(const std::filesystem::path& predictions,
                              const std::filesystem::path& dataset_dir,
                              const std::optional<std::filesystem::path>& oracle_dir,
                              const std::filesystem::path& out, std::ostream& log);

}  // namespace oisnet
