#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "oisnet/network.hpp"

namespace oisnet {

enum class Format { binary, csv };
Format parse_format(const std::string& name);
std::string to_string(Format format);

enum class ColumnType { int64, float64 };

/// `width` values per record; a column of width 3 named "x" appears in CSV
/// as x_0,x_1,x_2.
struct Column {
  std::string name;
  ColumnType type = ColumnType::float64;
  std::size_t width = 1;
  std::vector<std::int64_t> ints;
  std::vector<double> reals;

  std::size_t size() const noexcept { return type == ColumnType::int64 ? ints.size() : reals.size(); }
};

/// Fixed-width records stored column by column. Binary files hold each column
/// contiguously (rows * width little-endian 64-bit values) in column order;
/// CSV files hold one record per line after a header.
struct Table {
  std::size_t rows = 0;
  std::deque<Column> columns;  // deque: references from add() stay valid

  Column& add(std::string name, ColumnType type, std::size_t width = 1);
  const Column& column(const std::string& name) const;
  Column& column(const std::string& name);
  void check() const;
};

/// A directory with manifest.json plus one file per table. `meta` is every
/// manifest entry except the format, schema version and file index, which
/// are derived when writing.
struct Dataset {
  Format format = Format::binary;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Table> tables;
};

inline constexpr int schema_version = 1;
inline constexpr const char* manifest_name = "manifest.json";

void write_dataset(const Dataset& data, const std::filesystem::path& dir);
/// Verifies every file against the checksum recorded in the manifest.
Dataset read_dataset(const std::filesystem::path& dir);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

nlohmann::json config_to_json(const SimulationConfig& config);
SimulationConfig config_from_json(const nlohmann::json& j);
nlohmann::json seeds_to_json(const SeedSchedule& seeds);
SeedSchedule seeds_from_json(const nlohmann::json& j);

Table rates_table(const RatePath& path);
Table contracts_table(std::span<const OisContract> contracts);
Table snapshots_table(const Simulation& sim, const LabelTable& labels);
/// One record per (window, node), windows in id order.
Table windows_table(const Simulation& sim, const LabelTable& labels, const WindowPlan& plan,
                    std::size_t blocks, unsigned threads);

/// Rates, contracts and snapshots with the effective configuration, seeds,
/// node features and contract-matrix width in the manifest.
Dataset simulation_dataset(const Simulation& sim, const LabelTable& labels, Format format);
/// simulation_dataset plus the windows table and the windowing parameters.
Dataset export_dataset(const Simulation& sim, const LabelTable& labels, const WindowPlan& plan,
                       Format format, unsigned threads);

/// Rebuilds the simulation from the stored configuration, seeds, rates and
/// contracts. Bond prices are recomputed from the bond seed.
Simulation load_simulation(const Dataset& data);
LabelTable stored_labels(const Dataset& data);

}  // namespace oisnet
