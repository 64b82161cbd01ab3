#pragma once

// Hierarchical initialization-time breakdown over dotted module names and the
// gate that admits an application to optimization.
//
// A node's cumulative time is its own self time plus its children's
// cumulative times, so a package total is the sum of its modules, a library
// total the sum of its packages, and the root ("ALL") the sum of libraries.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgo/profile_model.hpp"

namespace pgo {

struct InitNode {
  std::string name;  // full dotted name; "ALL" for the root
  std::int64_t self_time_us = 0;
  std::int64_t cumulative_time_us = 0;
  double share_of_total = 0.0;
  std::vector<InitNode> children;  // sorted by name

  const InitNode* find(std::string_view dotted) const;
};

inline constexpr const char* kInitRoot = "ALL";

/// Per-module self times are averaged across invocations (rounded to the
/// nearest microsecond) before the tree is built. Empty input yields a root
/// with zero totals.
InitNode build_init_tree(std::span<const ImportTiming> imports);

struct GateResult {
  double init_ratio = 0.0;
  double threshold = 0.10;
  bool passes = false;
};

/// init_ratio = root cumulative / mean e2e time of cold-start invocations;
/// passes iff init_ratio > threshold. Throws NoColdStartData.
GateResult gate(const InitNode& tree, std::span<const InvocationEvent> invocations, double threshold = 0.10);

}  // namespace pgo
