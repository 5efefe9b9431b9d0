#include "oisnet/commands.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

#include "oisnet/errors.hpp"
#include "oisnet/oracle.hpp"
#include "oisnet/parallel.hpp"

namespace oisnet {

namespace fs = std::filesystem;
using nlohmann::json;

WindowSelection parse_window_selection(const std::string& name) {
  if (name == "all") return WindowSelection::all;
  if (name == "train") return WindowSelection::train;
  if (name == "validation") return WindowSelection::validation;
  throw ParameterError("unknown window selection '" + name + "' (expected all, train or validation)");
}

std::string to_string(WindowSelection s) {
  switch (s) {
    case WindowSelection::all: return "all";
    case WindowSelection::train: return "train";
    default: return "validation";
  }
}

void RunConfig::validate() const {
  sim.validate();
  if (lookback < 1) throw ParameterError("lookback must be at least 1");
  if (horizon < 1) throw ParameterError("horizon must be at least 1");
  if (!(split > 0.0 && split < 1.0)) throw ParameterError("split must lie in (0, 1)");
  if (n_sims < 1) throw ParameterError("oracle needs at least one simulation");
  if (repeats < 1) throw ParameterError("repeats must be at least 1");
  for (int h : study_horizons) {
    if (h < 1) throw ParameterError("study horizons must be at least 1");
  }
  for (auto n : study_sims) {
    if (n < 1) throw ParameterError("study simulation counts must be at least 1");
  }
  if (threads < 1) throw ParameterError("threads must be at least 1");
}

std::vector<int> RunConfig::effective_study_horizons(int h) const {
  std::vector<int> out = study_horizons.empty() ? std::vector<int>{1, h} : study_horizons;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> RunConfig::effective_study_sims() const {
  std::vector<std::size_t> out;
  if (study_sims.empty()) {
    for (std::size_t n : {std::size_t{10}, std::size_t{100}}) {
      if (n < n_sims) out.push_back(n);
    }
    out.push_back(n_sims);
  } else {
    out = study_sims;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

json to_json(const RunConfig& c) {
  return {{"simulation", config_to_json(c.sim)},
          {"lookback", c.lookback},
          {"horizon", c.horizon},
          {"split", c.split},
          {"format", to_string(c.format)},
          {"n_sims", c.n_sims},
          {"repeats", c.repeats},
          {"windows", to_string(c.windows)},
          {"max_windows", c.max_windows},
          {"study_horizons", c.study_horizons},
          {"study_sims", c.study_sims}};
}

fs::path default_output_root() {
  if (const char* env = std::getenv("OISNET_OUTPUT_ROOT"); env && *env) return env;
  return fs::current_path();
}

SimulationSummary summarize(const Simulation& sim, const LabelTable& labels) {
  SimulationSummary s;
  s.contracts = sim.contracts.size();
  for (const auto& c : sim.contracts) {
    const int a = sim.nodes.features[c.node_i];
    const int b = sim.nodes.features[c.node_j];
    if (a == hub && b == hub) {
      ++s.hub_hub;
    } else if (a == hub || b == hub) {
      ++s.hub_private;
    } else {
      ++s.private_private;
    }
  }
  s.max_open = max_open_contracts(sim);
  const int n = labels.n_nodes;
  double sum = 0.0;
  double sq = 0.0;
  std::size_t count = 0;
  s.label_min = std::numeric_limits<double>::infinity();
  s.label_max = -std::numeric_limits<double>::infinity();
  for (std::int64_t d = 1; d <= labels.n_days(); ++d) {
    double total = 0.0;
    double scale = 0.0;
    for (int v = 0; v < n; ++v) {
      const double x = labels.at(d, v);
      sum += x;
      sq += x * x;
      ++count;
      total += x;
      scale = std::max(scale, std::abs(x));
      s.label_min = std::min(s.label_min, x);
      s.label_max = std::max(s.label_max, x);
    }
    if (scale > 0.0) s.max_conservation_error = std::max(s.max_conservation_error, std::abs(total) / scale);
  }
  if (count > 0) {
    s.label_mean = sum / static_cast<double>(count);
    s.label_std = std::sqrt(std::max(0.0, sq / static_cast<double>(count) - s.label_mean * s.label_mean));
  } else {
    s.label_min = s.label_max = 0.0;
  }
  return s;
}

SimulationSummary cmd_simulate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  config.validate();
  SimulationConfig sc = config.sim;
  sc.threads = config.threads;
  const Simulation sim = simulate_network(sc);
  const LabelTable labels = compute_labels(sim);
  Dataset data = simulation_dataset(sim, labels, config.format);
  data.meta["run"] = to_json(config);
  write_dataset(data, out);

  const auto s = summarize(sim, labels);
  log << "days " << sim.n_days() << ", contracts " << s.contracts << " (hub-hub " << s.hub_hub
      << ", hub-private " << s.hub_private << ", private-private " << s.private_private << ")\n"
      << "max open contracts per node " << s.max_open << ", matrix width "
      << s.max_open * contract_features << "\n"
      << "labels mean " << s.label_mean << " std " << s.label_std << " min " << s.label_min << " max "
      << s.label_max << ", worst relative daily sum " << s.max_conservation_error << "\n"
      << "wrote " << out.string() << "\n";
  return s;
}

void cmd_export(const RunConfig& config, const fs::path& simulation_dir, const fs::path& out,
                std::ostream& log) {
  config.validate();
  const Dataset stored = read_dataset(simulation_dir);
  Simulation sim = load_simulation(stored);
  sim.config.threads = config.threads;
  const LabelTable labels = compute_labels(sim);
  const LabelTable kept = stored_labels(stored);
  if (kept.n_nodes != labels.n_nodes || kept.values.size() != labels.values.size() ||
      !std::equal(kept.values.begin(), kept.values.end(), labels.values.begin(),
                  [](double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); })) {
    throw DataError(simulation_dir.string() + ": stored labels do not match the recomputed ones");
  }
  const WindowPlan plan = make_windows(sim.n_days(), config.lookback, config.horizon, config.split);
  Dataset data = export_dataset(sim, labels, plan, config.format, config.threads);
  data.meta["run"] = to_json(config);
  data.meta["run"]["simulation"] = stored.meta.at("config");
  write_dataset(data, out);
  log << "windows " << plan.size() << " (train " << plan.train.size() << ", validation "
      << plan.validation.size() << "), records " << data.tables.at("windows").rows << ", matrix width "
      << data.meta.at("contract_matrix_width").get<std::size_t>() << "\nwrote " << out.string() << "\n";
}

namespace {

struct WindowRef {
  std::int64_t id;
  std::int64_t base_day;
  std::int64_t split;
};

std::vector<WindowRef> dataset_windows(const Dataset& data) {
  const auto it = data.tables.find("windows");
  if (it == data.tables.end()) throw DataError("dataset has no windows table; run export first");
  const auto& t = it->second;
  const auto& id = t.column("window_id").ints;
  const auto& base = t.column("base_day").ints;
  const auto& split = t.column("split").ints;
  std::vector<WindowRef> out;
  for (std::size_t r = 0; r < t.rows; ++r) {
    if (out.empty() || out.back().id != id[r]) out.push_back({id[r], base[r], split[r]});
  }
  return out;
}

}  // namespace

void cmd_benchmark(const RunConfig& config, const fs::path& dataset_dir, const fs::path& out,
                   std::ostream& log) {
  config.validate();
  const Dataset data = read_dataset(dataset_dir);
  const Simulation sim = load_simulation(data);
  const LabelTable labels = stored_labels(data);
  const int horizon = data.meta.at("windows").at("horizon").get<int>();
  const int n = sim.nodes.size();

  std::vector<WindowRef> selected;
  for (const auto& w : dataset_windows(data)) {
    if (config.windows == WindowSelection::all ||
        (config.windows == WindowSelection::train && w.split == 0) ||
        (config.windows == WindowSelection::validation && w.split == 1)) {
      selected.push_back(w);
    }
  }
  if (config.max_windows > 0 && selected.size() > config.max_windows) {
    std::vector<WindowRef> thinned;
    for (std::size_t i = 0; i < config.max_windows; ++i) {
      thinned.push_back(selected[i * selected.size() / config.max_windows]);
    }
    selected = std::move(thinned);
  }

  const auto study_h = config.effective_study_horizons(horizon);
  const auto study_n = config.effective_study_sims();
  const int reach = std::max(horizon, config.repeats > 1 ? study_h.back() : 1);

  const std::uint64_t oracle_seed = derive_seed(sim.seeds.master, Stream::oracle);
  const OracleInputs inputs = oracle_inputs(sim);
  const Oracle oracle(inputs, oracle_seed);
  std::vector<BondCurveCache::Request> requests;
  for (const auto& w : selected) {
    oracle.check(w.base_day, reach);
    const auto r = oracle.bond_requests(w.base_day, reach);
    requests.insert(requests.end(), r.begin(), r.end());
  }
  sim.bonds->prefetch(requests, config.threads);

  std::vector<std::vector<std::vector<OracleEstimate>>> results(selected.size());
  parallel_for(selected.size(), config.threads, [&](std::size_t w) {
    results[w] = oracle.evaluate(selected[w].base_day, horizon, config.n_sims);
  });

  Table table;
  table.rows = selected.size() * static_cast<std::size_t>(horizon * n);
  auto& c_id = table.add("window_id", ColumnType::int64);
  auto& c_base = table.add("base_day", ColumnType::int64);
  auto& c_day = table.add("day", ColumnType::int64);
  auto& c_node = table.add("node", ColumnType::int64);
  auto& c_step = table.add("step", ColumnType::int64);
  auto& c_value = table.add("value", ColumnType::float64);
  auto& c_fixed = table.add("fixed", ColumnType::float64);
  auto& c_arr = table.add("arrivals", ColumnType::float64);
  auto& c_se = table.add("std_error", ColumnType::float64);
  auto& c_label = table.add("label", ColumnType::float64);
  auto& c_disc = table.add("discounted_label", ColumnType::float64);
  for (std::size_t w = 0; w < selected.size(); ++w) {
    for (int h = 1; h <= horizon; ++h) {
      const std::int64_t day = selected[w].base_day + h;
      const double discount = sim.path.discount(selected[w].base_day, day);
      for (int v = 0; v < n; ++v) {
        const auto& e = results[w][static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(v)];
        c_id.ints.push_back(selected[w].id);
        c_base.ints.push_back(selected[w].base_day);
        c_day.ints.push_back(day);
        c_node.ints.push_back(v);
        c_step.ints.push_back(h);
        c_value.reals.push_back(e.value);
        c_fixed.reals.push_back(e.fixed_component);
        c_arr.reals.push_back(e.arrivals_component);
        c_se.reals.push_back(e.std_error);
        c_label.reals.push_back(labels.at(day, v));
        c_disc.reals.push_back(discount * labels.at(day, v));
      }
    }
  }

  std::vector<ErrorStudyRow> study;
  if (config.repeats > 1) {
    std::vector<std::int64_t> base_days;
    for (const auto& w : selected) base_days.push_back(w.base_day);
    study = error_study(inputs, base_days, study_h, study_n, config.repeats, oracle_seed, config.threads);
  }
  Table st;
  st.rows = study.size();
  auto& s_h = st.add("m", ColumnType::int64);
  auto& s_n = st.add("n_sims", ColumnType::int64);
  auto& s_base = st.add("base_day", ColumnType::int64);
  auto& s_node = st.add("node", ColumnType::int64);
  auto& s_mean = st.add("mean", ColumnType::float64);
  auto& s_fixed = st.add("fixed", ColumnType::float64);
  auto& s_disp = st.add("dispersion", ColumnType::float64);
  auto& s_rel = st.add("relative_error", ColumnType::float64);
  auto& s_nz = st.add("nonzero_mean", ColumnType::int64);
  json summary = json::array();
  for (const auto& r : study) {
    s_h.ints.push_back(r.horizon);
    s_n.ints.push_back(static_cast<std::int64_t>(r.n_sims));
    s_base.ints.push_back(r.base_day);
    s_node.ints.push_back(r.node);
    s_mean.reals.push_back(r.mean);
    s_fixed.reals.push_back(r.fixed);
    s_disp.reals.push_back(r.dispersion);
    s_rel.reals.push_back(r.relative_error);
    s_nz.ints.push_back(r.nonzero_mean ? 1 : 0);
  }
  for (int h : study_h) {
    for (auto ns : study_n) {
      std::size_t nonzero = 0;
      std::size_t below = 0;
      for (const auto& r : study) {
        if (r.horizon != h || r.n_sims != ns || !r.nonzero_mean) continue;
        ++nonzero;
        if (r.relative_error < 0.02) ++below;
      }
      if (study.empty()) continue;
      summary.push_back({{"m", h},
                         {"n_sims", ns},
                         {"nonzero_mean", nonzero},
                         {"below_2_percent", below},
                         {"fraction", nonzero ? static_cast<double>(below) / static_cast<double>(nonzero) : 0.0}});
    }
  }

  Dataset result;
  result.format = Format::csv;
  result.meta = {{"run", to_json(config)},
                 {"dataset_manifest_sha256", sha256_file(dataset_dir / manifest_name)},
                 {"oracle_seed", oracle_seed},
                 {"horizon", horizon},
                 {"windows", selected.size()},
                 {"study_horizons", study_h},
                 {"study_sims", study_n},
                 {"error_summary", summary}};
  result.meta["run"]["simulation"] = data.meta.at("config");
  result.tables.emplace("oracle", std::move(table));
  result.tables.emplace("error_study", std::move(st));
  write_dataset(result, out);
  log << "oracle values for " << selected.size() << " windows x " << horizon << " steps x " << n
      << " nodes, " << config.n_sims << " arrival simulations each\n";
  for (const auto& s : summary) {
    log << "m=" << s["m"] << " n_sims=" << s["n_sims"] << ": " << s["below_2_percent"] << " of "
        << s["nonzero_mean"] << " nonzero-mean estimates below 2% relative error\n";
  }
  log << "wrote " << out.string() << "\n";
}

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <class T>
T field_value(std::string_view f, const std::string& where, std::size_t line, const char* what) {
  T v{};
  const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size()) {
    throw DataError(where + ":" + std::to_string(line) + ": bad " + what + " '" + std::string(f) + "'");
  }
  return v;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

EvaluationReport cmd_evaluate(const fs::path& predictions, const fs::path& dataset_dir,
                              const std::optional<fs::path>& oracle_dir, const fs::path& out,
                              std::ostream& log) {
  const auto same = [](const fs::path& a, const fs::path& b) {
    std::error_code ec;
    return fs::exists(a) && fs::exists(b) && fs::equivalent(a, b, ec);
  };
  if (same(out, dataset_dir) || (oracle_dir && same(out, *oracle_dir))) {
    throw ParameterError("evaluation output must not be the dataset or oracle directory");
  }
  const Dataset data = read_dataset(dataset_dir);
  const auto& wt = data.tables.count("windows") ? data.tables.at("windows")
                                                : throw DataError("dataset has no windows table");
  const int n = data.meta.at("n_nodes").get<int>();
  const int m = data.meta.at("windows").at("horizon").get<int>();
  const auto n_windows = data.meta.at("windows").at("count").get<std::int64_t>();
  const auto slot = [&](std::int64_t w, std::int64_t v, std::int64_t h) {
    return static_cast<std::size_t>((w * n + v) * m + (h - 1));
  };
  const std::size_t total = static_cast<std::size_t>(n_windows) * static_cast<std::size_t>(n * m);
  std::vector<double> label(total, std::numeric_limits<double>::quiet_NaN());
  {
    const auto& id = wt.column("window_id").ints;
    const auto& node = wt.column("node").ints;
    const auto& lab = wt.column("labels").reals;
    for (std::size_t r = 0; r < wt.rows; ++r) {
      for (int h = 1; h <= m; ++h) label[slot(id[r], node[r], h)] = lab[r * m + (h - 1)];
    }
  }
  std::vector<double> oracle(total, std::numeric_limits<double>::quiet_NaN());
  if (oracle_dir) {
    const Dataset od = read_dataset(*oracle_dir);
    const auto& t = od.tables.count("oracle") ? od.tables.at("oracle")
                                              : throw DataError(oracle_dir->string() + ": no oracle table");
    const auto& id = t.column("window_id").ints;
    const auto& node = t.column("node").ints;
    const auto& step = t.column("step").ints;
    const auto& value = t.column("value").reals;
    for (std::size_t r = 0; r < t.rows; ++r) {
      if (id[r] < 0 || id[r] >= n_windows || node[r] < 0 || node[r] >= n || step[r] < 1 || step[r] > m) {
        throw DataError(oracle_dir->string() + ": oracle row " + std::to_string(r) + " does not match the dataset");
      }
      oracle[slot(id[r], node[r], step[r])] = value[r];
    }
  }

  std::ifstream in(predictions, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + predictions.string());
  const std::string where = predictions.string();
  std::vector<StepMetrics> steps(static_cast<std::size_t>(m));
  for (int h = 1; h <= m; ++h) steps[static_cast<std::size_t>(h - 1)].step = h;
  std::vector<char> seen(total, 0);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view row = trim_cr(raw);
    if (line == 1) {
      if (row != "window_id,node,step,prediction") {
        throw DataError(where + ":1: expected header window_id,node,step,prediction");
      }
      continue;
    }
    if (row.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = row.find(',', pos);
      f.push_back(row.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 4) {
      throw DataError(where + ":" + std::to_string(line) + ": expected 4 fields, found " + std::to_string(f.size()));
    }
    const auto w = field_value<std::int64_t>(f[0], where, line, "window_id");
    const auto v = field_value<std::int64_t>(f[1], where, line, "node");
    const auto h = field_value<std::int64_t>(f[2], where, line, "step");
    const auto p = field_value<double>(f[3], where, line, "prediction");
    if (w < 0 || w >= n_windows) throw DataError(where + ":" + std::to_string(line) + ": unknown window " + std::to_string(w));
    if (v < 0 || v >= n) throw DataError(where + ":" + std::to_string(line) + ": unknown node " + std::to_string(v));
    if (h < 1 || h > m) throw DataError(where + ":" + std::to_string(line) + ": step outside 1.." + std::to_string(m));
    if (!std::isfinite(p)) throw DataError(where + ":" + std::to_string(line) + ": prediction is not finite");
    const std::size_t s = slot(w, v, h);
    if (seen[s]) throw DataError(where + ":" + std::to_string(line) + ": duplicate prediction");
    seen[s] = 1;
    auto& st = steps[static_cast<std::size_t>(h - 1)];
    const double dl = p - label[s];
    st.mse_labels += dl * dl;
    ++st.count;
    if (!std::isnan(oracle[s])) {
      const double d0 = p - oracle[s];
      st.mse_oracle += d0 * d0;
      ++st.oracle_count;
    }
  }
  if (line == 0) throw DataError(where + ": empty file");

  EvaluationReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& st : steps) {
    report.overall.count += st.count;
    report.overall.mse_labels += st.mse_labels;
    report.overall.oracle_count += st.oracle_count;
    report.overall.mse_oracle += st.mse_oracle;
    st.mse_labels = st.count ? st.mse_labels / static_cast<double>(st.count) : nan;
    st.mse_oracle = st.oracle_count ? st.mse_oracle / static_cast<double>(st.oracle_count) : nan;
  }
  auto& o = report.overall;
  o.mse_labels = o.count ? o.mse_labels / static_cast<double>(o.count) : nan;
  o.mse_oracle = o.oracle_count ? o.mse_oracle / static_cast<double>(o.oracle_count) : nan;
  report.steps = steps;

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create " + out.string() + ": " + ec.message());
  std::ostringstream csv;
  csv << "step,count,mse_labels,oracle_count,mse_oracle\n";
  json js_steps = json::array();
  const auto emit = [&](const StepMetrics& s, const std::string& name) {
    csv << name << ',' << s.count << ',' << fmt(s.mse_labels) << ',' << s.oracle_count << ','
        << fmt(s.mse_oracle) << '\n';
    return json{{"step", name},
                {"count", s.count},
                {"mse_labels", std::isnan(s.mse_labels) ? json(nullptr) : json(s.mse_labels)},
                {"oracle_count", s.oracle_count},
                {"mse_oracle", std::isnan(s.mse_oracle) ? json(nullptr) : json(s.mse_oracle)}};
  };
  for (const auto& s : report.steps) js_steps.push_back(emit(s, std::to_string(s.step)));
  const json js_all = emit(report.overall, "all");
  json js = {{"steps", js_steps},
             {"overall", js_all},
             {"predictions_sha256", sha256_file(predictions)},
             {"dataset_manifest_sha256", sha256_file(dataset_dir / manifest_name)}};
  if (oracle_dir) js["oracle_manifest_sha256"] = sha256_file(*oracle_dir / manifest_name);
  {
    std::ofstream f(out / "metrics.csv", std::ios::binary | std::ios::trunc);
    f << csv.str();
    if (!f) throw std::runtime_error("cannot write " + (out / "metrics.csv").string());
  }
  {
    std::ofstream f(out / "metrics.json", std::ios::binary | std::ios::trunc);
    f << js.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + (out / "metrics.json").string());
  }
  log << "step  count  mse_labels  mse_oracle\n";
  for (const auto& s : report.steps) {
    log << s.step << "  " << s.count << "  " << fmt(s.mse_labels) << "  " << fmt(s.mse_oracle) << "\n";
  }
  log << "all  " << o.count << "  " << fmt(o.mse_labels) << "  " << fmt(o.mse_oracle) << "\n";
  return report;
}

}  // namespace oisnet
