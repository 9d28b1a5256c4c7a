#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "divemeta/sim.hpp"

namespace divemeta {

// A scenario file: flat `key = value` lines, `#` starts a comment.
//
//   n_studies    = 30
//   size_pattern = varying          # fixed | varying
//   avg_n        = 100
//   outcome      = lognormal        # normal | skew-normal | lognormal
//   i2           = 0, 0.25, 0.5     # one scenario per value
//   replicates   = 1000             # optional, default 1000
//   seed         = 20240601         # required
//   alpha        = 0.05             # optional
//   methods      = dive, qe-re, qe-fe   # optional
//
// Every listed I^2 value yields one scenario sharing the other settings.
struct SimConfig {
  std::vector<SimScenario> scenarios;
  MethodSelection methods;
};

// Throws ConfigError naming the line and key.
SimConfig parse_sim_config_text(std::string_view text);
SimConfig parse_sim_config(const std::filesystem::path& path);

}  // namespace divemeta
