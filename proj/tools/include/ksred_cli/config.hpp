#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <ksred/dynamics3.hpp>

namespace ksred::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { canonical, lax, both };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct BodyInitial {
  std::array<Vec3, 3> positions;
  std::array<Vec3, 3> velocities;
};

struct RunConfig {
  std::array<double, 3> masses{};
  std::optional<BodyInitial> bodies;
  std::optional<std::array<PairState, 3>> pairs;
  std::optional<double> h;  ///< empty means "auto"
  double ds{1e-3};
  double s_end{1.0};
  Mode mode{Mode::both};
  std::uint64_t seed{0};
  std::size_t record_every{1};
  double drift_guard{1e-4};
  std::string source;  ///< config text as read, echoed into summary.json
};

/// Throws ConfigError on malformed JSON, missing fields or violated invariants.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace ksred::cli
