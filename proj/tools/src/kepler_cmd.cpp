#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include <ksred/errors.hpp>
#include <ksred/kepler.hpp>

#include "ksred_cli/commands.hpp"

namespace ksred::cli {

int cmd_kepler(const KeplerOptions& o, std::ostream& out, std::ostream& log) {
  const KeplerParams params{o.mu, o.mass_product, o.h};
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  if (!(o.h < 0.0)) {
    log << "error: periodic runs need h < 0\n";
    return kExitInvalid;
  }
  if (!(o.ecc >= 0.0 && o.ecc <= 1.0)) {
    log << "error: ecc must lie in [0, 1]\n";
    return kExitInvalid;
  }
  if (o.periods < 1 || o.steps_per_period < 1) {
    log << "error: periods and steps-per-period must be positive\n";
    return kExitInvalid;
  }

  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  std::ofstream csv(o.out_dir / "trajectory.csv");
  if (!csv) {
    log << "error: cannot write " << (o.out_dir / "trajectory.csv") << '\n';
    return kExitInvalid;
  }
  csv << "s,t,X1,X2,X3,X4,detL\n";

  // One physical period is half a period of Q(s).
  const double period_s = 0.5 * fictitious_period(params);
  const double s_end = period_s * o.periods;
  KeplerFlowOptions flow;
  flow.on_sample = [&](const KeplerSample& smp) {
    csv << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", smp.s, smp.t, smp.X.X1, smp.X.X2,
                       smp.X.X3, smp.X.X4, smp.L.determinant());
  };

  nlohmann::json summary;
  summary["s_end"] = s_end;
  summary["kepler_period"] = kepler_period(params);
  try {
    const auto traj =
        kepler_flow(kepler_orbit_state(params, o.ecc), params, s_end, period_s / o.steps_per_period, flow);
    const double t_end = traj.samples.back().t;
    summary["t_end"] = t_end;
    summary["t_span_rel_error"] = std::abs(t_end - o.periods * kepler_period(params)) / (o.periods * kepler_period(params));
    summary["max_det_drift"] = traj.max_det_drift;
    summary["max_form_deviation"] = traj.max_form_deviation;
    summary["max_hamiltonian_drift"] = traj.max_hamiltonian_drift;
  } catch (const StepTooLarge& e) {
    csv.flush();
    log << "error: " << e.what() << " at s = " << e.s() << '\n';
    return kExitRunFailed;
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

}  // namespace ksred::cli
