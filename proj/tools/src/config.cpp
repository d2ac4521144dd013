#include "ksred_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ksred::cli {

namespace {

using nlohmann::json;

double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(what + " must be finite");
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> vector_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) {
    throw ConfigError(what + " must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k) v[k] = finite_number(j[k], what);
  return v;
}

std::array<Vec3, 3> three_vectors(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must list 3 vectors");
  return {vector_of<3>(j[0], what), vector_of<3>(j[1], what), vector_of<3>(j[2], what)};
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "canonical") return Mode::canonical;
  if (name == "lax") return Mode::lax;
  if (name == "both") return Mode::both;
  throw ConfigError("mode must be canonical, lax or both (got '" + name + "')");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::canonical: return "canonical";
    case Mode::lax: return "lax";
    case Mode::both: return "both";
  }
  return "both";
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig cfg;
  cfg.source = text;

  if (!j.contains("masses")) throw ConfigError("masses is required");
  const auto& masses = j["masses"];
  if (!masses.is_array() || masses.size() != 3) throw ConfigError("masses must list 3 values");
  for (int k = 0; k < 3; ++k) {
    cfg.masses[k] = finite_number(masses[k], "masses");
    if (!(cfg.masses[k] > 0.0)) throw ConfigError("masses must be positive");
  }

  const bool has_bodies = j.contains("bodies");
  const bool has_pairs = j.contains("pairs");
  if (has_bodies == has_pairs) throw ConfigError("exactly one of bodies or pairs is required");
  if (has_bodies) {
    const auto& b = j["bodies"];
    if (!b.is_object() || !b.contains("positions") || !b.contains("velocities")) {
      throw ConfigError("bodies needs positions and velocities");
    }
    cfg.bodies = BodyInitial{three_vectors(b["positions"], "bodies.positions"),
                             three_vectors(b["velocities"], "bodies.velocities")};
  } else {
    const auto& p = j["pairs"];
    if (!p.is_array() || p.size() != 3) throw ConfigError("pairs must list 3 objects");
    std::array<PairState, 3> pairs;
    for (int a = 0; a < 3; ++a) {
      if (!p[a].is_object() || !p[a].contains("Q") || !p[a].contains("P")) {
        throw ConfigError("each pair needs Q and P");
      }
      pairs[a].Q = Quaternion::from_vector(vector_of<4>(p[a]["Q"], "pairs.Q"));
      pairs[a].P = Quaternion::from_vector(vector_of<4>(p[a]["P"], "pairs.P"));
    }
    cfg.pairs = pairs;
  }

  if (j.contains("h")) {
    const auto& h = j["h"];
    if (h.is_string()) {
      if (h.get<std::string>() != "auto") throw ConfigError("h must be a number or \"auto\"");
    } else {
      cfg.h = finite_number(h, "h");
    }
  }

  if (!j.contains("integrator") || !j["integrator"].is_object()) throw ConfigError("integrator is required");
  const auto& integ = j["integrator"];
  const std::string method = integ.value("method", std::string("rk4"));
  if (method != "rk4") throw ConfigError("integrator.method must be rk4");
  if (!integ.contains("ds") || !integ.contains("s_end")) throw ConfigError("integrator needs ds and s_end");
  cfg.ds = finite_number(integ["ds"], "integrator.ds");
  cfg.s_end = finite_number(integ["s_end"], "integrator.s_end");
  if (!(cfg.ds > 0.0) || !(cfg.s_end > 0.0)) throw ConfigError("ds and s_end must be positive");
  if (integ.contains("record_every")) {
    const auto& r = integ["record_every"];
    if (!r.is_number_integer() || r.get<long long>() < 1) throw ConfigError("record_every must be a positive integer");
    cfg.record_every = r.get<std::size_t>();
  }
  if (integ.contains("drift_guard")) {
    cfg.drift_guard = finite_number(integ["drift_guard"], "integrator.drift_guard");
    if (!(cfg.drift_guard > 0.0)) throw ConfigError("drift_guard must be positive");
  }

  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw ConfigError("mode must be a string");
    cfg.mode = parse_mode(j["mode"].get<std::string>());
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError("seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace ksred::cli
