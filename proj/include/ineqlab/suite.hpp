#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ineqlab/densities.hpp"
#include "ineqlab/errors.hpp"
#include "ineqlab/measure.hpp"
#include "ineqlab/report.hpp"

namespace ineqlab {

/// Malformed configuration; the message names the line or the field.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct LyapunovSpec {
  std::string w;  // expression in x
  double c = 0.0;
  double b = 0.0;
  double x0 = 0.0;
  double c4 = 2.0;
};

struct ModelSpec {
  std::string name;
  std::string potential;  // named model or expression
  Domain domain{-8.0, 8.0};
  std::size_t n = 1024;
  std::optional<double> c_ls;
  std::optional<double> c_t;
  bool bounded = false;  // also run the diameter form of thm2
  std::optional<LyapunovSpec> lyapunov;
};

struct Tolerances {
  double interp_step = 0.02;
  double interp_tail = 1e-5;
  double derivative_dt = 1e-3;
  double derivative_floor = 1e-12;
};

struct SuiteConfig {
  std::uint64_t seed = 0;
  std::vector<ModelSpec> models;
  DensityFamilySpec densities;
  std::vector<std::string> suites;
  Tolerances tolerances;
  std::vector<double> times{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> derivative_times{0.25, 0.5, 1.0};
  std::string transport = "quantile";  // or "lp"
  std::filesystem::path output = "reports";
};

/// Suite ids accepted in "suites".
const std::vector<std::string>& suite_ids();

/// Parses JSON text.  Throws ConfigError with a line number on syntax errors
/// and with the field path on schema errors.
SuiteConfig parse_config(const std::string& text);
SuiteConfig load_config(const std::filesystem::path& path);

struct SuiteResult {
  std::vector<InequalityReport> reports;  // sorted by (id, context)
  std::vector<std::string> errors;        // failed tasks; their reports are missing
};

/// Runs every selected suite on every model with up to `jobs` threads.  The
/// result does not depend on `jobs`.
SuiteResult run_suite(const SuiteConfig& config, unsigned jobs = 1);

/// 0 when there are no errors and no failing report; vacuous and skipped
/// reports do not count.
int exit_status(const SuiteResult& result);

std::string reports_json(const SuiteResult& result, const SuiteConfig& config);
std::string summary_csv(const SuiteResult& result);

/// Writes reports.json and summary.csv into `dir`, creating it if needed.
void write_outputs(const SuiteResult& result, const SuiteConfig& config, const std::filesystem::path& dir);

}  // namespace ineqlab
