#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oisnet/commands.hpp"
#include "oracles.hpp"

using namespace oisnet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::string& args, const fs::path& work, const std::string& env = "") {
  const auto out = work / "stdout.txt";
  const auto err = work / "stderr.txt";
  const std::string cmd = env + " \"" OISNET_CLI "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ref::slurp(out), ref::slurp(err)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    rows.push_back(f);
  }
  return rows;
}

const std::string small = "--nodes 4 --hubs 1 --years 1 --gamma 60 --bond-paths 8";

}  // namespace

TEST_CASE("simulate is deterministic") {
  const auto w = ref::scratch("cli_det");
  REQUIRE(cli("simulate " + small + " --seed 7 --out " + (w / "a").string(), w).code == 0);
  const auto r = cli("simulate " + small + " --seed 7 --threads 2 --out " + (w / "b").string(), w);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("contracts") != std::string::npos);
  CHECK(ref::tree(w / "a") == ref::tree(w / "b"));
  REQUIRE(cli("simulate " + small + " --seed 8 --out " + (w / "c").string(), w).code == 0);
  CHECK(ref::slurp(w / "a" / "manifest.json") != ref::slurp(w / "c" / "manifest.json"));
}

TEST_CASE("validation failures exit with code 2, other failures with 1") {
  const auto w = ref::scratch("cli_codes");
  auto r = cli("simulate --gamma 0 --out " + (w / "x").string(), w);
  CHECK(r.code == 2);
  CHECK(r.err.find("gamma") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(cli("simulate --sigma 0.5 --out " + (w / "x").string(), w).code == 2);
  CHECK(cli("simulate --nodes abc", w).code == 2);
  CHECK(cli("frobnicate", w).code == 2);
  CHECK(cli("", w).code == 2);
  CHECK(cli("export --input " + (w / "missing").string() + " --out " + (w / "d").string(), w).code == 1);
  CHECK(cli("benchmark --dataset " + (w / "missing").string() + " --out " + (w / "b").string(), w).code == 1);
  CHECK(cli("--help", w).code == 0);
}

TEST_CASE("flag beats config file beats default, and the result is echoed") {
  const auto w = ref::scratch("cli_config");
  std::ofstream(w / "run.ini") << "nodes = 3\nhubs = 1\nyears = 0.5\nbond-paths = 4\nseed = 11\n";
  REQUIRE(cli("simulate --config " + (w / "run.ini").string() + " --out " + (w / "a").string(), w).code == 0);
  REQUIRE(cli("simulate --config " + (w / "run.ini").string() + " --nodes 4 --out " + (w / "b").string(), w).code == 0);
  REQUIRE(cli("simulate --years 0.5 --bond-paths 4 --out " + (w / "c").string(), w).code == 0);
  const auto a = nlohmann::json::parse(ref::slurp(w / "a" / "manifest.json"));
  const auto b = nlohmann::json::parse(ref::slurp(w / "b" / "manifest.json"));
  const auto c = nlohmann::json::parse(ref::slurp(w / "c" / "manifest.json"));
  CHECK(a["config"]["nodes"] == 3);
  CHECK(a["config"]["seed"] == 11);
  CHECK(b["config"]["nodes"] == 4);
  CHECK(b["config"]["seed"] == 11);
  CHECK(c["config"]["nodes"] == 5);
  CHECK(c["config"]["seed"] == 1);
  CHECK(a["run"]["simulation"] == a["config"]);
  CHECK(c["config"]["intensity"]["gamma"] == 3.0);
  CHECK(c["run"]["lookback"] == 5);
  CHECK(c["run"]["split"] == 0.8);
}

TEST_CASE("output root comes from the environment") {
  const auto w = ref::scratch("cli_env");
  REQUIRE(cli("simulate --years 0.2 --bond-paths 4", w, "OISNET_OUTPUT_ROOT=\"" + w.string() + "\"").code == 0);
  CHECK(fs::exists(w / "simulation" / "manifest.json"));
  REQUIRE(cli("export --horizon 1", w, "OISNET_OUTPUT_ROOT=\"" + w.string() + "\"").code == 0);
  CHECK(fs::exists(w / "dataset" / "windows.bin"));
}

TEST_CASE("pipeline: one-step oracle equals the discounted label, evaluation scores") {
  const auto w = ref::scratch("cli_pipe");
  REQUIRE(cli("simulate " + small + " --seed 3 --out " + (w / "sim").string(), w).code == 0);
  REQUIRE(cli("export --horizon 1 --format csv --input " + (w / "sim").string() + " --out " + (w / "data").string(), w).code == 0);
  auto r = cli("benchmark --windows all --sims 20 --dataset " + (w / "data").string() + " --out " + (w / "bench").string(), w);
  REQUIRE(r.code == 0);
  const auto oracle = read_csv(w / "bench" / "oracle.csv");
  REQUIRE(oracle.size() > 100);
  CHECK(oracle[0][5] == "value");
  CHECK(oracle[0][8] == "std_error");
  CHECK(oracle[0][10] == "discounted_label");
  for (std::size_t k = 1; k < oracle.size(); ++k) CHECK(oracle[k][5] == oracle[k][10]);
  // repeats = 1: the dispersion table is only a header
  CHECK(read_csv(w / "bench" / "error_study.csv").size() == 1);

  // Predictions equal to labels, to oracle values, and all zero.
  const auto data = read_dataset(w / "data");
  const auto& wt = data.tables.at("windows");
  {
    std::ofstream lab(w / "labels.csv");
    std::ofstream zero(w / "zero.csv");
    lab << "window_id,node,step,prediction\n";
    zero << "window_id,node,step,prediction\n";
    for (std::size_t i = 0; i < wt.rows; ++i) {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + 64, wt.column("labels").reals[i]);
      lab << wt.column("window_id").ints[i] << ',' << wt.column("node").ints[i] << ",1," << std::string(buf, end) << '\n';
      zero << wt.column("window_id").ints[i] << ',' << wt.column("node").ints[i] << ",1,0\n";
    }
    std::ofstream orc(w / "oracle_pred.csv");
    orc << "window_id,node,step,prediction\n";
    for (std::size_t k = 1; k < oracle.size(); ++k) orc << oracle[k][0] << ',' << oracle[k][3] << ',' << oracle[k][4] << ',' << oracle[k][5] << '\n';
  }
  const auto before = ref::tree(w / "data");
  const auto before_bench = ref::tree(w / "bench");
  std::ostringstream log;
  const auto rep_l = cmd_evaluate(w / "labels.csv", w / "data", w / "bench", w / "eval_l", log);
  CHECK(rep_l.overall.mse_labels == 0.0);
  CHECK(rep_l.overall.count == wt.rows);
  const auto rep_o = cmd_evaluate(w / "oracle_pred.csv", w / "data", w / "bench", w / "eval_o", log);
  CHECK(rep_o.overall.mse_oracle == 0.0);
  const auto rep_z = cmd_evaluate(w / "zero.csv", w / "data", std::nullopt, w / "eval_z", log);
  double second = 0.0;
  for (double x : wt.column("labels").reals) second += x * x;
  CHECK(rep_z.overall.mse_labels == doctest::Approx(second / static_cast<double>(wt.rows)).epsilon(1e-12));
  CHECK(std::isnan(rep_z.overall.mse_oracle));
  CHECK(ref::tree(w / "data") == before);
  CHECK(ref::tree(w / "bench") == before_bench);

  // Through the executable, including schema errors.
  r = cli("evaluate --predictions " + (w / "labels.csv").string() + " --dataset " + (w / "data").string() +
              " --oracle " + (w / "bench").string() + " --out " + (w / "eval_cli").string(), w);
  CHECK(r.code == 0);
  CHECK(fs::exists(w / "eval_cli" / "metrics.csv"));
  CHECK(fs::exists(w / "eval_cli" / "metrics.json"));
  std::ofstream(w / "bad.csv") << "window_id,node,step,prediction\n0,0,1,0.5\n0,1,1\n";
  r = cli("evaluate --predictions " + (w / "bad.csv").string() + " --dataset " + (w / "data").string() +
              " --out " + (w / "eval_bad").string(), w);
  CHECK(r.code == 1);
  CHECK(r.err.find("bad.csv:3") != std::string::npos);
  std::ofstream(w / "bad2.csv") << "window,node,step,prediction\n";
  r = cli("evaluate --predictions " + (w / "bad2.csv").string() + " --dataset " + (w / "data").string() +
              " --out " + (w / "eval_bad").string(), w);
  CHECK(r.code == 1);
  CHECK(r.err.find("bad2.csv:1") != std::string::npos);
  std::ofstream(w / "bad3.csv") << "window_id,node,step,prediction\n0,0,2,0.5\n";
  r = cli("evaluate --predictions " + (w / "bad3.csv").string() + " --dataset " + (w / "data").string() +
              " --out " + (w / "eval_bad").string(), w);
  CHECK(r.code == 1);
  CHECK(r.err.find("bad3.csv:2") != std::string::npos);
  // Writing into the dataset directory is refused.
  r = cli("evaluate --predictions " + (w / "labels.csv").string() + " --dataset " + (w / "data").string() +
              " --out " + (w / "data").string(), w);
  CHECK(r.code == 2);
}

TEST_CASE("benchmark with repeats writes the dispersion table") {
  const auto w = ref::scratch("cli_study");
  REQUIRE(cli("simulate " + small + " --seed 4 --out " + (w / "sim").string(), w).code == 0);
  REQUIRE(cli("export --horizon 4 --input " + (w / "sim").string() + " --out " + (w / "data").string(), w).code == 0);
  const auto r = cli("benchmark --sims 30 --repeats 4 --max-windows 3 --study-sims 10,30 --dataset " +
                         (w / "data").string() + " --out " + (w / "bench").string(), w);
  REQUIRE(r.code == 0);
  const auto rows = read_csv(w / "bench" / "error_study.csv");
  CHECK(rows.size() == 1 + 2 * 2 * 3 * 4);  // horizons {1,4} x sims x windows x nodes
  CHECK(rows[0] == std::vector<std::string>{"m", "n_sims", "base_day", "node", "mean", "fixed", "dispersion",
                                            "relative_error", "nonzero_mean"});
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k][0] == "1") CHECK(rows[k][6] == "0");
  }
}

TEST_CASE("hub-private pairs trade more than private-private pairs over 60 years") {
  SimulationConfig c;
  c.bond_paths = 4;
  c.seed = 2024;
  const auto sim = simulate_network(c);
  const auto s = summarize(sim, compute_labels(sim));
  // 2 hubs and 3 privates: 6 hub-private pairs and 3 private-private pairs.
  CHECK(static_cast<double>(s.hub_private) / 6.0 > static_cast<double>(s.private_private) / 3.0);
  CHECK(s.max_conservation_error < 1e-10);
}
