#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/os.h>
#include <json.hpp>

#include <ksred/errors.hpp>

#include "ksred_cli/commands.hpp"

namespace ksred::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using cplx = std::complex<double>;

const MatrixXcd& j6() {
  static const MatrixXcd J = j_matrix(3).cast<cplx>();
  return J;
}

// One CSV per representation; also tracks the sampled Casimir drift.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const fs::path& path) : out_(path), basis_(3) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << "s,t";
    for (const auto& e : basis_.elements()) out_ << ',' << e.label();
    for (int k = 1; k <= 6; ++k) out_ << ",e" << k << "_re,e" << k << "_im";
    out_ << '\n';
  }

  void row(double s, double t, const GramPair& g, const std::vector<cplx>& e) {
    std::string line = fmt::format("{:.17g},{:.17g}", s, t);
    const VectorXd raw = basis_.raw_values(g);
    for (Eigen::Index k = 0; k < raw.size(); ++k) fmt::format_to(std::back_inserter(line), ",{:.17g}", raw[k]);
    for (const cplx& c : e) fmt::format_to(std::back_inserter(line), ",{:.17g},{:.17g}", c.real(), c.imag());
    out_ << line << '\n';

    if (e0_.empty()) {
      e0_ = e;
      l0_ = (j6() * g.hermitian()).norm();
      max_drift_.assign(e.size(), 0.0);
    }
    for (std::size_t d = 0; d < e.size(); ++d) {
      max_drift_[d] = std::max(max_drift_[d], casimir_drift(e[d], e0_[d], l0_, static_cast<int>(d + 1)));
    }
    raw_.push_back(raw);
  }

  void flush() { out_.flush(); }
  const std::vector<double>& casimir_drift_max() const { return max_drift_; }
  const std::vector<cplx>& casimir_initial() const { return e0_; }
  const std::vector<VectorXd>& raw_rows() const { return raw_; }

 private:
  std::ofstream out_;
  InvariantBasis basis_;
  std::vector<cplx> e0_;
  double l0_ = 0.0;
  std::vector<double> max_drift_;
  std::vector<VectorXd> raw_;
};

json complex_list(const std::vector<cplx>& v) {
  json arr = json::array();
  for (const cplx& c : v) arr.push_back({c.real(), c.imag()});
  return arr;
}

double potential_scale(const RegState& st) {
  const auto R = st.separations();
  double v = 0.0;
  for (int a = 0; a < 3; ++a) v += st.params.coupling(a) * R[(a + 1) % 3] * R[(a + 2) % 3];
  return v;
}

void write_summary(const fs::path& path, const json& summary) {
  std::ofstream out(path);
  out << summary.dump(2) << '\n';
}

}  // namespace

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir, std::optional<Mode> mode_override,
                 std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (mode_override) cfg.mode = *mode_override;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    log << "error: cannot create output directory " << out_dir << '\n';
    return kExitInvalid;
  }

  const auto started = std::chrono::steady_clock::now();
  json summary;
  summary["config"] = json::parse(cfg.source);
  summary["mode"] = mode_name(cfg.mode);
  json drift;
  const auto finish = [&](const std::string& status, int code) {
    drift["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    summary["status"] = status;
    summary["drift"] = drift;
    write_summary(out_dir / "summary.json", summary);
    return code;
  };

  RegState st0;
  try {
    if (cfg.bodies) {
      st0 = ingest_bodies(cfg.bodies->positions, cfg.bodies->velocities, cfg.masses);
      if (cfg.h) st0.params.h = *cfg.h;
    } else {
      st0.pairs = *cfg.pairs;
      st0.params = ThreeBodyParams{cfg.masses, 0.0};
      st0.params.h = cfg.h ? *cfg.h : energy_constant(st0.pairs, cfg.masses);
    }
  } catch (const CollisionPoint& e) {
    log << "error: " << e.what() << '\n';
    summary["message"] = e.what();
    return finish("collision", kExitRunFailed);
  }
  summary["h"] = st0.params.h;

  const FlowOptions opts{cfg.drift_guard, cfg.record_every};
  const GramPair g0 = extract_invariants(st0.pairs);
  const bool run_canonical = cfg.mode != Mode::lax;
  const bool run_lax = cfg.mode != Mode::canonical;

  std::optional<TrajectoryWriter> canonical_csv, lax_csv;
  try {
    if (run_canonical) {
      canonical_csv.emplace(out_dir / "trajectory.csv");
    }
    if (run_lax) {
      lax_csv.emplace(out_dir / (run_canonical ? "trajectory_lax.csv" : "trajectory.csv"));
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (run_canonical) {
      const auto traj = canonical_flow(st0, cfg.s_end, cfg.ds, opts, [&](const CanonicalSample& sample) {
        const GramPair g = extract_invariants(sample.state.pairs);
        canonical_csv->row(sample.s, sample.t, g, casimirs(j6() * g.hermitian()));
      });
      const auto& d = traj.diagnostics;
      drift["hamiltonian_abs"] = d.max_hamiltonian_drift;
      drift["hamiltonian_rel"] = d.max_hamiltonian_drift / std::max(potential_scale(st0), 1e-300);
      drift["bilinear_abs"] = d.max_bilinear_drift;
      drift["angular_momentum_abs"] = d.max_angular_momentum_drift;
      drift["configuration_closure"] = d.max_closure;
      drift["min_separation"] = d.min_separation;
      drift["t_end"] = traj.samples.back().t;
      canonical_csv->flush();
    }
    if (run_lax) {
      const auto traj = reduced_flow(g0.hermitian(), st0.params, cfg.s_end, cfg.ds, opts,
                                     [&](const ReducedSample& sample) {
                                       lax_csv->row(sample.s, sample.t, GramPair::from_hermitian(sample.M),
                                                    sample.casimirs);
                                     });
      drift["casimir_rel"] = traj.max_casimir_drift;
      drift["casimir_initial"] = complex_list(traj.samples.front().casimirs);
      drift["trace_identity"] = traj.max_trace_residual;
      drift["hermitian_residual"] = traj.max_hermitian_residual;
      if (!run_canonical) drift["t_end"] = traj.samples.back().t;
      lax_csv->flush();
    } else {
      drift["casimir_rel"] = canonical_csv->casimir_drift_max();
      drift["casimir_initial"] = complex_list(canonical_csv->casimir_initial());
    }
    if (run_canonical && run_lax) {
      const auto& a = canonical_csv->raw_rows();
      const auto& b = lax_csv->raw_rows();
      double dev = 0.0;
      for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
        dev = std::max(dev, (a[k] - b[k]).cwiseAbs().maxCoeff());
      }
      drift["representation_deviation"] = dev;
    }
  } catch (const StepTooLarge& e) {
    if (canonical_csv) canonical_csv->flush();
    if (lax_csv) lax_csv->flush();
    log << "error: " << e.what() << " at s = " << e.s() << '\n';
    summary["message"] = e.what();
    summary["s_failure"] = e.s();
    summary["drift_at_failure"] = e.drift();
    return finish("step_failure", kExitRunFailed);
  } catch (const CollisionPoint& e) {
    if (canonical_csv) canonical_csv->flush();
    if (lax_csv) lax_csv->flush();
    log << "error: " << e.what() << '\n';
    summary["message"] = e.what();
    return finish("collision", kExitRunFailed);
  }
  return finish("ok", kExitOk);
}

}  // namespace ksred::cli
