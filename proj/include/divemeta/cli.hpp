#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "divemeta/core.hpp"
#include "divemeta/sim.hpp"
#include "divemeta/study_csv.hpp"

namespace divemeta {

enum class PoolMethod { Dive, QeRe, QeFe };
enum class CiSelection { Z, T, Both };
enum class OutputFormat { Text, Csv, Json };

struct RunConfig {
  PoolMethod method = PoolMethod::Dive;
  double alpha = 0.05;
  CiSelection ci = CiSelection::Both;
  OutputFormat output = OutputFormat::Text;
};

PooledResult run_pool(std::span<const StudyRecord> records, const RunConfig& cfg);

// Text mode rounds to two decimals; csv and json keep full precision.
std::string render_pooled(const PooledResult& result, const RunConfig& cfg);

// One row per (scenario, method): I^2, method, point and variance %Bias/%MSE,
// CP and AW for z and t intervals.
std::string metrics_csv(std::span<const MetricsReport> reports);
// One row per (scenario, method, replicate) with the percentage errors.
std::string replicate_errors_csv(std::span<const MetricsReport> reports);

inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kReplicateErrorsFile = "replicate_errors.csv";

// Command bodies behind the executable. Return the process exit status.
int cmd_pool(const std::filesystem::path& csv, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::filesystem::path& config, const std::filesystem::path& out_dir, int workers,
                 std::ostream& out, std::ostream& err);

}  // namespace divemeta
