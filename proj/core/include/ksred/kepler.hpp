#pragma once

// The regularised two-body (Kepler) problem: quadratic invariants X1..X4,
// their u(1,1) Lie-Poisson structure, and the 2x2 Lax pair.
//
// The regularised Hamiltonian is H = |P|^2/(8 mu) - m1 m2 - h |Q|^2. In the
// normalised invariants |Q|^2 = sqrt(2) X1 and |P|^2 = sqrt(2) X2, so the
// gradient with respect to X carries a sqrt(2) on H1 and H2.

#include <Eigen/Core>
#include <Eigen/LU>
#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "ksred/quat_core.hpp"

namespace ksred {

using Mat2 = Eigen::Matrix2d;
using Mat2c = Eigen::Matrix2cd;

struct KeplerParams {
  double mu;            ///< reduced mass, > 0
  double mass_product;  ///< m1 m2 (G = 1), > 0
  double h;             ///< physical energy

  /// Throws std::invalid_argument unless mu > 0 and mass_product > 0.
  void validate() const;
};

struct KeplerInvariants {
  double X1{0.0};  ///< Q^T Q / sqrt(2)
  double X2{0.0};  ///< P^T P / sqrt(2)
  double X3{0.0};  ///< Q^T P
  double X4{0.0};  ///< P^T K Q

  Eigen::Vector4d vector() const { return {X1, X2, X3, X4}; }
  static KeplerInvariants from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

KeplerInvariants kepler_invariants(const Quaternion& Q, const Quaternion& P);

/// |P|^2/(8 mu) - m1 m2 - h |Q|^2 in raw variables.
double kepler_hamiltonian(const Quaternion& Q, const Quaternion& P, const KeplerParams& params);

/// The same Hamiltonian written in X (sqrt(2) X2/(8 mu) - m1 m2 - sqrt(2) h X1).
double kepler_hamiltonian(const KeplerInvariants& X, const KeplerParams& params);

/// (dH/dX1, ..., dH/dX4). Constant, since H is linear in X.
Eigen::Vector4d kepler_gradient(const KeplerParams& params);

/// Poisson structure matrix B with B(a,b) = {X_a, X_b}. Row/column 4 vanish.
Eigen::Matrix4d kepler_poisson_matrix(const KeplerInvariants& X);

/// Standard symplectic 2x2 matrix ((0, 1), (-1, 0)).
Mat2 j2();

struct KeplerLax {
  Mat2 L;     ///< J2 (sqrt2 X1, X3; X3, sqrt2 X2)
  Mat2 Pmat;  ///< (sqrt2 H1, H3; H3, sqrt2 H2) J2
};

KeplerLax kepler_lax(const KeplerInvariants& X, const KeplerParams& params);

/// Reads X1..X3 back from a Lax matrix L = J2 M2.
KeplerInvariants invariants_from_lax(const Mat2& L, double X4);

/// The u(1,1) basis b1..b4 whose commutators reproduce the brackets of X1..X4.
std::array<Mat2c, 4> u11_basis();

/// omega = sqrt(-h / (2 mu)), the oscillator frequency in fictitious time.
double oscillator_frequency(const KeplerParams& params);

/// 2 pi / omega: the period of Q(s). X(s) and the physical orbit repeat after
/// half of it.
double fictitious_period(const KeplerParams& params);

/// 2 pi sqrt(mu a^3 / (m1 m2)) with a = -m1 m2 / (2 h).
double kepler_period(const KeplerParams& params);

/// KS-lifted apocentre state of the bound orbit with the given eccentricity
/// (0 <= ecc <= 1). ecc = 1 is the radial collision orbit. Requires h < 0.
PairState kepler_orbit_state(const KeplerParams& params, double ecc);

struct KeplerSample {
  double s;
  double t;
  KeplerInvariants X;  ///< from the structure-matrix form
  Mat2 L;              ///< from the Lax form
  PairState state;     ///< canonical (Q, P)
};

struct KeplerFlowOptions {
  double det_drift_guard = 1e-6;
  std::size_t record_every = 1;
  std::function<void(const KeplerSample&)> on_sample;
};

struct KeplerTrajectory {
  std::vector<KeplerSample> samples;
  double max_det_drift = 0.0;        ///< relative, see kepler_flow
  double max_form_deviation = 0.0;   ///< structure form vs Lax form, max abs
  double max_canonical_deviation = 0.0;  ///< structure form vs invariants of (Q, P)
  double max_hamiltonian_drift = 0.0;    ///< abs, canonical H
};

/// Integrates the structure form X' = B(X) grad H, the Lax form L' = [P, L]
/// and the canonical equations side by side with RK4. Physical time follows
/// dt/ds = sqrt(2) X1.
///
/// The det L drift is measured relative to max(|det L(0)|, X1^2 + X2^2 + X3^2)
/// so collision orbits (det L = 0) are guarded on the natural scale.
/// Throws StepTooLarge when it exceeds options.det_drift_guard, and
/// std::invalid_argument if ds <= 0 or s_end <= 0.
KeplerTrajectory kepler_flow(const PairState& state0, const KeplerParams& params, double s_end, double ds,
                             const KeplerFlowOptions& options = {});

}  // namespace ksred
