#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ksred_cli/config.hpp"

namespace ksred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitRunFailed = 3;

/// Runs a three-body simulation and writes trajectory.csv and summary.json
/// into `out_dir`. With Mode::both the Lax trajectory goes to
/// trajectory_lax.csv. Diagnostics go to `log`.
int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 std::optional<Mode> mode_override, std::ostream& log);

struct VerifyOptions {
  std::string suite;
  int m{3};
  int trials{100};
  std::uint64_t seed{42};
  std::optional<double> tol;  ///< replaces every property threshold when set
};

struct PropertyResult {
  std::string name;
  double worst{0.0};
  double threshold{0.0};
  bool passed{false};
};

struct SuiteReport {
  VerifyOptions options;
  std::vector<PropertyResult> properties;

  bool passed() const;
  std::string to_json() const;
};

/// Throws std::invalid_argument on an unknown suite or unsupported m.
SuiteReport run_suite(const VerifyOptions& options);

/// Writes the JSON report to `out`; 0 iff every property passes.
int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& log);

struct KeplerOptions {
  double mu{0.5};
  double mass_product{1.0};
  double h{-0.5};
  double ecc{0.0};
  int periods{1};
  int steps_per_period{4000};
  std::filesystem::path out_dir{"."};
};

/// Integrates a bound Kepler orbit for `periods` physical periods and writes
/// trajectory.csv (s, t, X1..X4, detL). Prints a JSON summary to `out`.
int cmd_kepler(const KeplerOptions& options, std::ostream& out, std::ostream& log);

}  // namespace ksred::cli
