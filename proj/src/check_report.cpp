#include "otflow/check_report.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>

namespace otflow {

void CheckReport::finalize() {
  pass = kind == CheckKind::inequality ? slack >= -tolerance : std::abs(slack) <= tolerance;
  if (!std::isfinite(slack)) pass = false;
  measured["slack"] = slack;
  measured["tolerance"] = tolerance;
}

nlohmann::json to_json(const CheckReport& report) {
  nlohmann::json measured = nlohmann::json::object();
  for (const auto& [key, value] : report.measured) {
    if (std::isfinite(value))
      measured[key] = value;
    else
      measured[key] = fmt::format("{}", value);
  }
  return {
      {"name", report.name},
      {"property", report.property},
      {"kind", report.kind == CheckKind::inequality ? "inequality" : "identity"},
      {"inputs", report.inputs_digest},
      {"measured", measured},
      {"slack", std::isfinite(report.slack) ? nlohmann::json(report.slack) : nlohmann::json(nullptr)},
      {"tolerance", report.tolerance},
      {"pass", report.pass},
      {"notes", report.notes},
  };
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string reports_csv(const std::vector<CheckReport>& reports) {
  std::string out = "name,kind,pass,slack,tolerance,inputs\n";
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{},{},{}\n", r.name, r.kind == CheckKind::inequality ? "inequality" : "identity",
                       r.pass ? 1 : 0, format_double(r.slack), format_double(r.tolerance), r.inputs_digest);
  }
  return out;
}

void Digest::bytes(const void* data, size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

Digest& Digest::add(std::string_view text) {
  add(static_cast<std::int64_t>(text.size()));
  bytes(text.data(), text.size());
  return *this;
}

Digest& Digest::add(double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  unsigned char le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
  bytes(le, 8);
  return *this;
}

Digest& Digest::add(std::int64_t value) {
  const auto u = static_cast<std::uint64_t>(value);
  unsigned char le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(u >> (8 * i));
  bytes(le, 8);
  return *this;
}

Digest& Digest::add(const Eigen::VectorXd& values) {
  add(static_cast<std::int64_t>(values.size()));
  for (double v : values) add(v);
  return *this;
}

std::string Digest::hex() const { return fmt::format("{:016x}", state_); }

}  // namespace otflow
