#pragma once

#include "dscrd/network.hpp"

#include <string>

namespace dscrd::cli {

inline constexpr int kSchemaVersion = 1;

// Parses and fully validates a network configuration. Errors name the
// offending field (e.g. "nodes[1].noise_cov") or the parse position.
NetworkSpec parse_config(const std::string& text);
NetworkSpec load_config(const std::string& path);

// Inverse of parse_config; numbers are written in shortest round-trip form.
std::string serialize_config(const NetworkSpec& net);

}  // namespace dscrd::cli
