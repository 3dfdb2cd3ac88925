#include "otflow/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "otflow/error.hpp"

namespace otflow {
namespace {

constexpr const char* kFormat = "otflow-grid";
constexpr int kVersion = 1;

std::vector<double> flatten(const ManifoldGrid& grid) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(grid.size()) * (grid.dim() + 1));
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    for (int a = 0; a < grid.dim(); ++a) out.push_back(grid.nodes()(i, a));
  for (Eigen::Index i = 0; i < grid.size(); ++i) out.push_back(grid.weights()[i]);
  return out;
}

void write_le(std::ofstream& out, const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> read_le(const std::string& path, size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open {}", path));
  std::vector<unsigned char> bytes(count * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()) || in.peek() != std::char_traits<char>::eof())
    throw InvalidArgument(fmt::format("{}: expected exactly {} float64 values", path, count));
  std::vector<double> values(count);
  for (size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace

void save_grid(const ManifoldGrid& grid, const std::string& prefix) {
  const std::filesystem::path bin_path = prefix + ".bin";
  nlohmann::json header = {
      {"format", kFormat},
      {"version", kVersion},
      {"manifold", grid.spec().str()},
      {"kind", std::string(to_string(grid.kind()))},
      {"resolution", {grid.rows(), grid.cols()}},
      {"side", grid.spec().side},
      {"dim", grid.dim()},
      {"node_count", grid.size()},
      {"volume", grid.volume()},
      {"ricci_lambda", grid.ricci_lambda()},
      {"binary", bin_path.filename().string()},
      {"layout", "float64 little-endian row-major: nodes[node_count][dim], weights[node_count]"},
  };
  std::ofstream json_out(prefix + ".json");
  if (!json_out) throw InvalidArgument(fmt::format("cannot write {}.json", prefix));
  json_out << header.dump(2) << '\n';
  std::ofstream bin_out(bin_path, std::ios::binary);
  if (!bin_out) throw InvalidArgument(fmt::format("cannot write {}", bin_path.string()));
  write_le(bin_out, flatten(grid));
}

ManifoldGrid load_grid(const std::string& prefix) {
  std::ifstream json_in(prefix + ".json");
  if (!json_in) throw InvalidArgument(fmt::format("cannot open {}.json", prefix));
  nlohmann::json header;
  try {
    json_in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(fmt::format("{}.json: {}", prefix, e.what()));
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion)
    throw InvalidArgument(fmt::format("{}.json is not a version {} {} header", prefix, kVersion, kFormat));
  ManifoldGrid grid(ManifoldSpec::parse(header.at("manifold").get<std::string>()));
  if (header.at("node_count").get<Eigen::Index>() != grid.size() || header.at("dim").get<int>() != grid.dim())
    throw InvalidArgument(fmt::format("{}.json: node count or dimension disagrees with the manifold", prefix));
  const std::filesystem::path bin_path =
      std::filesystem::path(prefix).parent_path() / header.at("binary").get<std::string>();
  const std::vector<double> expected = flatten(grid);
  const std::vector<double> stored = read_le(bin_path.string(), expected.size());
  for (size_t i = 0; i < expected.size(); ++i)
    if (std::bit_cast<std::uint64_t>(stored[i]) != std::bit_cast<std::uint64_t>(expected[i]))
      throw InvalidArgument(fmt::format("{}: value {} differs from the rebuilt grid", bin_path.string(), i));
  return grid;
}

}  // namespace otflow
