#include "oisnet/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "oisnet/errors.hpp"
#include "oisnet/parallel.hpp"

namespace oisnet {

namespace fs = std::filesystem;
using nlohmann::json;

Format parse_format(const std::string& name) {
  if (name == "binary") return Format::binary;
  if (name == "csv") return Format::csv;
  throw ParameterError("unknown dataset format '" + name + "' (expected binary or csv)");
}

std::string to_string(Format format) { return format == Format::csv ? "csv" : "binary"; }

namespace {

std::string type_name(ColumnType t) { return t == ColumnType::int64 ? "int64" : "float64"; }

ColumnType parse_type(const std::string& s) {
  if (s == "int64") return ColumnType::int64;
  if (s == "float64") return ColumnType::float64;
  throw DataError("unknown column type '" + s + "'");
}

std::string file_name(const std::string& table, Format format) {
  return table + (format == Format::csv ? ".csv" : ".bin");
}

void put_u64(std::string& out, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

void put_number(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format value");
  out.append(buf, end);
}

void put_number(std::string& out, std::int64_t v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format value");
  out.append(buf, end);
}

std::string encode_binary(const Table& t) {
  std::string out;
  for (const auto& c : t.columns) {
    if (c.type == ColumnType::int64) {
      for (auto v : c.ints) put_u64(out, static_cast<std::uint64_t>(v));
    } else {
      for (auto v : c.reals) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

std::string encode_csv(const Table& t) {
  std::string out;
  bool first = true;
  for (const auto& c : t.columns) {
    for (std::size_t k = 0; k < c.width; ++k) {
      if (!first) out += ',';
      first = false;
      out += c.width == 1 ? c.name : c.name + "_" + std::to_string(k);
    }
  }
  out += '\n';
  for (std::size_t r = 0; r < t.rows; ++r) {
    first = true;
    for (const auto& c : t.columns) {
      for (std::size_t k = 0; k < c.width; ++k) {
        if (!first) out += ',';
        first = false;
        const std::size_t at = r * c.width + k;
        if (c.type == ColumnType::int64) {
          put_number(out, c.ints[at]);
        } else {
          put_number(out, c.reals[at]);
        }
      }
    }
    out += '\n';
  }
  return out;
}

void decode_binary(Table& t, const std::string& bytes, const std::string& where) {
  std::size_t total = 0;
  for (const auto& c : t.columns) total += t.rows * c.width;
  if (bytes.size() != total * 8) {
    throw DataError(where + ": expected " + std::to_string(total * 8) + " bytes, found " +
                    std::to_string(bytes.size()));
  }
  const char* p = bytes.data();
  for (auto& c : t.columns) {
    const std::size_t n = t.rows * c.width;
    if (c.type == ColumnType::int64) {
      c.ints.resize(n);
      for (std::size_t k = 0; k < n; ++k, p += 8) c.ints[k] = static_cast<std::int64_t>(get_u64(p));
    } else {
      c.reals.resize(n);
      for (std::size_t k = 0; k < n; ++k, p += 8) c.reals[k] = std::bit_cast<double>(get_u64(p));
    }
  }
}

template <class T>
T parse_field(std::string_view field, const std::string& where, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(where + ":" + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  }
  return v;
}

void decode_csv(Table& t, const std::string& text, const std::string& where) {
  std::string expected;
  for (const auto& c : t.columns) {
    for (std::size_t k = 0; k < c.width; ++k) {
      if (!expected.empty()) expected += ',';
      expected += c.width == 1 ? c.name : c.name + "_" + std::to_string(k);
    }
  }
  for (auto& c : t.columns) {
    if (c.type == ColumnType::int64) {
      c.ints.reserve(t.rows * c.width);
    } else {
      c.reals.reserve(t.rows * c.width);
    }
  }
  std::size_t pos = 0;
  std::size_t line = 0;
  std::size_t records = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) throw DataError(where + ": missing final newline");
    const std::string_view row(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line;
    if (line == 1) {
      if (row != expected) throw DataError(where + ":1: unexpected header");
      continue;
    }
    std::size_t fpos = 0;
    std::size_t fields = 0;
    for (auto& c : t.columns) {
      for (std::size_t k = 0; k < c.width; ++k) {
        if (fpos > row.size()) throw DataError(where + ":" + std::to_string(line) + ": too few fields");
        std::size_t comma = row.find(',', fpos);
        if (comma == std::string_view::npos) comma = row.size();
        const auto field = row.substr(fpos, comma - fpos);
        if (c.type == ColumnType::int64) {
          c.ints.push_back(parse_field<std::int64_t>(field, where, line));
        } else {
          c.reals.push_back(parse_field<double>(field, where, line));
        }
        fpos = comma + 1;
        ++fields;
      }
    }
    if (fpos <= row.size() && fields > 0) {
      throw DataError(where + ":" + std::to_string(line) + ": too many fields");
    }
    ++records;
  }
  if (line == 0) throw DataError(where + ": empty file");
  if (records != t.rows) {
    throw DataError(where + ": expected " + std::to_string(t.rows) + " records, found " +
                    std::to_string(records));
  }
}

void write_file(const fs::path& file, const std::string& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing: " + std::strerror(errno));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string() + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("cannot read " + file.string());
  return std::move(ss).str();
}

}  // namespace

Column& Table::add(std::string name, ColumnType type, std::size_t width) {
  Column c;
  c.name = std::move(name);
  c.type = type;
  c.width = width;
  columns.push_back(std::move(c));
  return columns.back();
}

const Column& Table::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw DataError("missing column '" + name + "'");
}

Column& Table::column(const std::string& name) {
  return const_cast<Column&>(std::as_const(*this).column(name));
}

void Table::check() const {
  for (const auto& c : columns) {
    if (c.size() != rows * c.width) {
      throw std::logic_error("column '" + c.name + "' holds " + std::to_string(c.size()) +
                             " values, expected " + std::to_string(rows * c.width));
    }
  }
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& file) { return sha256_hex(read_file(file)); }

void write_dataset(const Dataset& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  json manifest = data.meta;
  manifest["schema_version"] = schema_version;
  manifest["format"] = to_string(data.format);
  json files = json::object();
  for (const auto& [name, table] : data.tables) {
    table.check();
    const std::string bytes = data.format == Format::csv ? encode_csv(table) : encode_binary(table);
    const std::string fname = file_name(name, data.format);
    write_file(dir / fname, bytes);
    json cols = json::array();
    for (const auto& c : table.columns) {
      cols.push_back({{"name", c.name}, {"type", type_name(c.type)}, {"width", c.width}});
    }
    files[name] = {{"file", fname},
                   {"rows", table.rows},
                   {"columns", cols},
                   {"bytes", bytes.size()},
                   {"sha256", sha256_hex(bytes)}};
  }
  manifest["files"] = files;
  write_file(dir / manifest_name, manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path mpath = dir / manifest_name;
  json manifest;
  try {
    manifest = json::parse(read_file(mpath));
  } catch (const json::exception& e) {
    throw DataError(mpath.string() + ": " + e.what());
  }
  Dataset data;
  try {
    if (manifest.at("schema_version").get<int>() != schema_version) {
      throw DataError(mpath.string() + ": unsupported schema version");
    }
    data.format = parse_format(manifest.at("format").get<std::string>());
    for (const auto& [name, entry] : manifest.at("files").items()) {
      const fs::path file = dir / entry.at("file").get<std::string>();
      const std::string bytes = read_file(file);
      if (sha256_hex(bytes) != entry.at("sha256").get<std::string>()) {
        throw DataError(file.string() + ": checksum mismatch");
      }
      Table t;
      t.rows = entry.at("rows").get<std::size_t>();
      for (const auto& c : entry.at("columns")) {
        t.add(c.at("name").get<std::string>(), parse_type(c.at("type").get<std::string>()),
              c.at("width").get<std::size_t>());
      }
      if (data.format == Format::csv) {
        decode_csv(t, bytes, file.string());
      } else {
        decode_binary(t, bytes, file.string());
      }
      data.tables.emplace(name, std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError(mpath.string() + ": " + e.what());
  }
  manifest.erase("files");
  manifest.erase("format");
  manifest.erase("schema_version");
  data.meta = std::move(manifest);
  return data;
}

json config_to_json(const SimulationConfig& c) {
  return {{"cir", {{"kappa", c.cir.kappa}, {"theta", c.cir.theta}, {"sigma", c.cir.sigma}, {"r0", c.cir.r0}}},
          {"intensity",
           {{"gamma", c.intensity.gamma},
            {"eta", c.intensity.eta},
            {"theta", c.intensity.theta_int},
            {"beta", c.intensity.beta}}},
          {"nodes", c.n_nodes},
          {"hubs", c.n_hubs},
          {"years", c.years},
          {"tenor_days", c.tenor_days},
          {"principal", c.principal},
          {"delta_rule", std::string(to_string(c.delta_rule))},
          {"bond_paths", c.bond_paths},
          {"seed", c.seed}};
}

SimulationConfig config_from_json(const json& j) {
  try {
    SimulationConfig c;
    const auto& cir = j.at("cir");
    c.cir.kappa = cir.at("kappa").get<double>();
    c.cir.theta = cir.at("theta").get<double>();
    c.cir.sigma = cir.at("sigma").get<double>();
    c.cir.r0 = cir.at("r0").get<double>();
    const auto& in = j.at("intensity");
    c.intensity.gamma = in.at("gamma").get<double>();
    c.intensity.eta = in.at("eta").get<double>();
    c.intensity.theta_int = in.at("theta").get<double>();
    c.intensity.beta = in.at("beta").get<double>();
    c.n_nodes = j.at("nodes").get<int>();
    c.n_hubs = j.at("hubs").get<int>();
    c.years = j.at("years").get<double>();
    c.tenor_days = j.at("tenor_days").get<std::int64_t>();
    c.principal = j.at("principal").get<double>();
    c.delta_rule = parse_delta_rule(j.at("delta_rule").get<std::string>());
    c.bond_paths = j.at("bond_paths").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad simulation config: ") + e.what());
  }
}

json seeds_to_json(const SeedSchedule& s) {
  return {{"master", s.master}, {"rates", s.rates}, {"arrivals", s.arrivals}, {"marks", s.marks}, {"bonds", s.bonds}};
}

SeedSchedule seeds_from_json(const json& j) {
  try {
    return {j.at("master").get<std::uint64_t>(), j.at("rates").get<std::uint64_t>(),
            j.at("arrivals").get<std::uint64_t>(), j.at("marks").get<std::uint64_t>(),
            j.at("bonds").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("bad seed schedule: ") + e.what());
  }
}

Table rates_table(const RatePath& path) {
  Table t;
  t.rows = static_cast<std::size_t>(path.n_days() + 1);
  auto& day = t.add("day", ColumnType::int64);
  auto& r = t.add("rate", ColumnType::float64);
  auto& b = t.add("accumulator", ColumnType::float64);
  for (std::int64_t d = 0; d <= path.n_days(); ++d) {
    day.ints.push_back(d);
    r.reals.push_back(path.rate(d));
    b.reals.push_back(path.accumulator(d));
  }
  return t;
}

Table contracts_table(std::span<const OisContract> contracts) {
  Table t;
  t.rows = contracts.size();
  auto& id = t.add("id", ColumnType::int64);
  auto& i = t.add("node_i", ColumnType::int64);
  auto& j = t.add("node_j", ColumnType::int64);
  auto& start = t.add("start", ColumnType::int64);
  auto& maturity = t.add("maturity", ColumnType::int64);
  auto& principal = t.add("principal", ColumnType::float64);
  auto& rate = t.add("fair_rate", ColumnType::float64);
  auto& delta = t.add("delta_i", ColumnType::int64);
  for (const auto& c : contracts) {
    id.ints.push_back(c.id);
    i.ints.push_back(c.node_i);
    j.ints.push_back(c.node_j);
    start.ints.push_back(c.start);
    maturity.ints.push_back(c.maturity);
    principal.reals.push_back(c.principal);
    rate.reals.push_back(c.fair_rate);
    delta.ints.push_back(c.delta_i);
  }
  return t;
}

Table snapshots_table(const Simulation& sim, const LabelTable& labels) {
  const auto snaps = build_snapshots(sim, labels);
  const auto n = static_cast<std::size_t>(sim.nodes.size());
  Table t;
  t.rows = snaps.size();
  auto& day = t.add("day", ColumnType::int64);
  auto& rate = t.add("rate", ColumnType::float64);
  auto& live = t.add("live_contracts", ColumnType::int64);
  auto& adj = t.add("adjacency", ColumnType::int64, n * n);
  auto& lab = t.add("labels", ColumnType::float64, n);
  for (const auto& s : snaps) {
    day.ints.push_back(s.day);
    rate.reals.push_back(s.rate);
    live.ints.push_back(static_cast<std::int64_t>(s.live_contracts.size()));
    for (auto a : s.adjacency) adj.ints.push_back(a);
    for (auto v : s.labels) lab.reals.push_back(v);
  }
  return t;
}

Table windows_table(const Simulation& sim, const LabelTable& labels, const WindowPlan& plan,
                    std::size_t blocks, unsigned threads) {
  const auto specs = plan.all();
  const auto n = static_cast<std::size_t>(sim.nodes.size());
  const auto k = static_cast<std::size_t>(plan.lookback);
  const auto m = static_cast<std::size_t>(plan.horizon);
  const std::size_t width = blocks * contract_features;
  Table t;
  t.rows = specs.size() * n;
  auto& id = t.add("window_id", ColumnType::int64);
  auto& node = t.add("node", ColumnType::int64);
  auto& split = t.add("split", ColumnType::int64);
  auto& base = t.add("base_day", ColumnType::int64);
  auto& rows = t.add("row_days", ColumnType::int64, k);
  auto& matrix = t.add("contract_matrix", ColumnType::float64, k * width);
  auto& targets = t.add("target_days", ColumnType::int64, m);
  auto& cond = t.add("conditioning", ColumnType::float64, m);
  auto& lab = t.add("labels", ColumnType::float64, m);
  id.ints.resize(t.rows);
  node.ints.resize(t.rows);
  split.ints.resize(t.rows);
  base.ints.resize(t.rows);
  rows.ints.resize(t.rows * k);
  matrix.reals.resize(t.rows * k * width);
  targets.ints.resize(t.rows * m);
  cond.reals.resize(t.rows * m);
  lab.reals.resize(t.rows * m);

  parallel_for(specs.size(), threads, [&](std::size_t w) {
    const Window win = assemble_window(sim, labels, specs[w], plan.lookback, plan.horizon, blocks);
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t r = w * n + v;
      id.ints[r] = win.spec.id;
      node.ints[r] = static_cast<std::int64_t>(v);
      split.ints[r] = static_cast<std::int64_t>(win.spec.split);
      base.ints[r] = win.spec.base_day;
      std::copy(win.row_days.begin(), win.row_days.end(), rows.ints.begin() + static_cast<std::ptrdiff_t>(r * k));
      const auto& mat = win.matrices[v].values;
      std::copy(mat.begin(), mat.end(), matrix.reals.begin() + static_cast<std::ptrdiff_t>(r * k * width));
      for (std::size_t h = 0; h < m; ++h) {
        targets.ints[r * m + h] = win.spec.base_day + static_cast<std::int64_t>(h) + 1;
        cond.reals[r * m + h] = win.conditioning[h];
        lab.reals[r * m + h] = win.labels[v][h];
      }
    }
  });
  return t;
}

namespace {

json layout_description() {
  return {{"binary", "each column stored contiguously in column order, rows * width little-endian 64-bit values"},
          {"csv", "header row, one record per line, columns of width w expand to name_0 .. name_{w-1}"},
          {"contract_matrix",
           "row-major, rows are days base_day-lookback+1 .. base_day, each contract block holds "
           "[(T-t)/365, p(t0,T), p(t,T), B(t0), B(t), delta]; unused blocks are zero"},
          {"adjacency", "row-major n x n, 1 iff an outstanding contract exists on that day"},
          {"split", "0 train, 1 validation"}};
}

}  // namespace

Dataset simulation_dataset(const Simulation& sim, const LabelTable& labels, Format format) {
  Dataset d;
  d.format = format;
  const std::size_t blocks = max_open_contracts(sim);
  d.meta = {{"config", config_to_json(sim.config)},
            {"seeds", seeds_to_json(sim.seeds)},
            {"node_features", sim.nodes.features},
            {"n_nodes", sim.nodes.size()},
            {"n_days", sim.n_days()},
            {"contracts", sim.contracts.size()},
            {"max_open_contracts", blocks},
            {"contract_matrix_width", blocks * contract_features},
            {"layout", layout_description()}};
  d.tables.emplace("rates", rates_table(sim.path));
  d.tables.emplace("contracts", contracts_table(sim.contracts));
  d.tables.emplace("snapshots", snapshots_table(sim, labels));
  return d;
}

Dataset export_dataset(const Simulation& sim, const LabelTable& labels, const WindowPlan& plan,
                       Format format, unsigned threads) {
  Dataset d = simulation_dataset(sim, labels, format);
  const std::size_t blocks = d.meta.at("max_open_contracts").get<std::size_t>();
  d.meta["windows"] = {{"lookback", plan.lookback},
                       {"horizon", plan.horizon},
                       {"split", plan.split},
                       {"eligible", plan.eligible},
                       {"train", plan.train.size()},
                       {"validation", plan.validation.size()},
                       {"count", plan.size()},
                       {"records", plan.size() * static_cast<std::size_t>(sim.nodes.size())},
                       {"train_last_target_day", plan.boundary_day},
                       {"validation_first_base_day",
                        plan.validation.empty() ? json(nullptr) : json(plan.validation.front().base_day)}};
  d.tables.emplace("windows", windows_table(sim, labels, plan, blocks, threads));
  return d;
}

Simulation load_simulation(const Dataset& data) {
  SimulationConfig config;
  SeedSchedule seeds;
  try {
    config = config_from_json(data.meta.at("config"));
    seeds = seeds_from_json(data.meta.at("seeds"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  const auto rt = data.tables.find("rates");
  const auto ct = data.tables.find("contracts");
  if (rt == data.tables.end() || ct == data.tables.end()) {
    throw DataError("dataset lacks the rates or contracts table");
  }
  const auto& days = rt->second.column("day").ints;
  for (std::size_t d = 0; d < days.size(); ++d) {
    if (days[d] != static_cast<std::int64_t>(d)) throw DataError("rates table is not a contiguous day grid");
  }
  RatePath path(rt->second.column("rate").reals);
  if (path.n_days() != config.n_days()) throw DataError("rates table does not match the configured horizon");

  const auto& t = ct->second;
  std::vector<OisContract> contracts(t.rows);
  for (std::size_t k = 0; k < t.rows; ++k) {
    auto& c = contracts[k];
    c.id = t.column("id").ints[k];
    c.node_i = static_cast<int>(t.column("node_i").ints[k]);
    c.node_j = static_cast<int>(t.column("node_j").ints[k]);
    c.start = t.column("start").ints[k];
    c.maturity = t.column("maturity").ints[k];
    c.principal = t.column("principal").reals[k];
    c.fair_rate = t.column("fair_rate").reals[k];
    c.delta_i = static_cast<int>(t.column("delta_i").ints[k]);
  }
  return assemble_simulation(config, seeds, std::move(path), std::move(contracts));
}

LabelTable stored_labels(const Dataset& data) {
  const auto it = data.tables.find("snapshots");
  if (it == data.tables.end()) throw DataError("dataset lacks the snapshots table");
  const auto& lab = it->second.column("labels");
  LabelTable out;
  out.n_nodes = static_cast<int>(lab.width);
  out.values = lab.reals;
  return out;
}

}  // namespace oisnet
