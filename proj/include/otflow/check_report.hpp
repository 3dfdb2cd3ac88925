#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace otflow {

enum class CheckKind { inequality, identity };

/// Result of one inequality or identity verification.
///
/// For inequalities `slack` is RHS - LHS (pass iff slack >= -tolerance); for
/// identities it is the residual (pass iff |slack| <= tolerance).
struct CheckReport {
  std::string name;
  /// Plain-language statement of the property checked.
  std::string property;
  CheckKind kind = CheckKind::inequality;
  std::string inputs_digest;
  std::map<std::string, double> measured;
  double slack = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<std::string> notes;

  /// Sets `pass` from slack, tolerance and kind; also records both in `measured`.
  void finalize();
};

nlohmann::json to_json(const CheckReport& report);

/// Header line plus one CSV row per report.
std::string reports_csv(const std::vector<CheckReport>& reports);

/// 64-bit FNV-1a over a canonical byte stream.
class Digest {
 public:
  Digest& add(std::string_view text);
  Digest& add(double value);
  Digest& add(std::int64_t value);
  Digest& add(const Eigen::VectorXd& values);
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  void bytes(const void* data, size_t size);
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Formats a double with 17 significant digits.
std::string format_double(double value);

}  // namespace otflow
