#pragma once

// Operator configuration for `crosstune serve`, loaded from JSON:
//
//   {
//     "loop":    {"cycle_time_ms", "snapshot_window", "settle_cycles",
//                 "report_timeout_ms", "history_path", "min_pcas", "seed"},
//     "tuner":   {"c_re", "c_sm", "top_k", "batch", "mut_frac", "delta_frac",
//                 "dedup_retries"},
//     "entropy": {"horizon", "softening", "inflection", "plateaus"},
//     "server":  {"bind", "poll_timeout_ms"},
//     "stats_path": "..."
//   }
//
// Every key is optional. report_timeout_ms defaults to cycle_time_ms.

#include <filesystem>
#include <string>

#include "crosstune/http_server.hpp"
#include "crosstune/service.hpp"

namespace crosstune {

struct CliConfig {
  ServiceOptions service;
  std::string bind = "127.0.0.1:8080";
  std::chrono::milliseconds poll_timeout{25000};
};

// Throws ValidationError naming the offending field.
CliConfig cli_config_from_json(const Json& j);
CliConfig load_cli_config(const std::filesystem::path& path);
Json to_json(const CliConfig& config);

}  // namespace crosstune
