#pragma once

#include <string>

#include "otflow/manifold.hpp"

namespace otflow {

/// Writes <prefix>.json (self-describing header) and <prefix>.bin (little-endian
/// float64, row-major: node coordinates node_count x dim, then node weights).
void save_grid(const ManifoldGrid& grid, const std::string& prefix);

/// Rebuilds the grid named by <prefix>.json and verifies that <prefix>.bin
/// matches it bit for bit. Throws InvalidArgument on any mismatch.
ManifoldGrid load_grid(const std::string& prefix);

}  // namespace otflow
