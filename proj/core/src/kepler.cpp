#include "ksred/kepler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ksred/errors.hpp"
#include "ksred/rk4.hpp"

namespace ksred {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

using CanonicalVec = Eigen::Matrix<double, 8, 1>;
using StructureVec = Eigen::Matrix<double, 5, 1>;  // X1..X4, t

CanonicalVec pack(const PairState& s) {
  CanonicalVec v;
  v << s.Q.vector(), s.P.vector();
  return v;
}

PairState unpack(const CanonicalVec& v) {
  return {Quaternion::from_vector(v.head<4>()), Quaternion::from_vector(v.tail<4>())};
}

}  // namespace

void KeplerParams::validate() const {
  if (!(mu > 0.0)) {
    throw std::invalid_argument("KeplerParams: mu must be positive");
  }
  if (!(mass_product > 0.0)) {
    throw std::invalid_argument("KeplerParams: mass_product must be positive");
  }
}

KeplerInvariants kepler_invariants(const Quaternion& Q, const Quaternion& P) {
  return {Q.norm2() / kSqrt2, P.norm2() / kSqrt2, Q.dot(P), -bilinear(Q, P)};
}

double kepler_hamiltonian(const Quaternion& Q, const Quaternion& P, const KeplerParams& params) {
  return P.norm2() / (8.0 * params.mu) - params.mass_product - params.h * Q.norm2();
}

double kepler_hamiltonian(const KeplerInvariants& X, const KeplerParams& params) {
  return kSqrt2 * X.X2 / (8.0 * params.mu) - params.mass_product - params.h * kSqrt2 * X.X1;
}

Eigen::Vector4d kepler_gradient(const KeplerParams& params) {
  return {-kSqrt2 * params.h, kSqrt2 / (8.0 * params.mu), 0.0, 0.0};
}

Eigen::Matrix4d kepler_poisson_matrix(const KeplerInvariants& X) {
  Eigen::Matrix4d B;
  B << 0.0, 2.0 * X.X3, 2.0 * X.X1, 0.0,
       -2.0 * X.X3, 0.0, -2.0 * X.X2, 0.0,
       -2.0 * X.X1, 2.0 * X.X2, 0.0, 0.0,
       0.0, 0.0, 0.0, 0.0;
  return B;
}

Mat2 j2() {
  Mat2 J;
  J << 0.0, 1.0, -1.0, 0.0;
  return J;
}

KeplerLax kepler_lax(const KeplerInvariants& X, const KeplerParams& params) {
  const Eigen::Vector4d H = kepler_gradient(params);
  Mat2 M;
  M << kSqrt2 * X.X1, X.X3, X.X3, kSqrt2 * X.X2;
  Mat2 dM;
  dM << kSqrt2 * H[0], H[2], H[2], kSqrt2 * H[1];
  return {j2() * M, dM * j2()};
}

KeplerInvariants invariants_from_lax(const Mat2& L, double X4) {
  // M = J2^{-1} L = -J2 L
  const Mat2 M = -j2() * L;
  return {M(0, 0) / kSqrt2, M(1, 1) / kSqrt2, 0.5 * (M(0, 1) + M(1, 0)), X4};
}

std::array<Mat2c, 4> u11_basis() {
  using C = std::complex<double>;
  Mat2c b1, b2, b3, b4;
  b1 << 0.0, 0.0, -kSqrt2, 0.0;
  b2 << 0.0, kSqrt2, 0.0, 0.0;
  b3 << 1.0, 0.0, 0.0, -1.0;
  b4 << C(0, -1), 0.0, 0.0, C(0, -1);
  return {b1, b2, b3, b4};
}

double oscillator_frequency(const KeplerParams& params) {
  if (!(params.h < 0.0)) {
    throw std::invalid_argument("oscillator_frequency: requires h < 0");
  }
  return std::sqrt(-params.h / (2.0 * params.mu));
}

double fictitious_period(const KeplerParams& params) { return 2.0 * std::numbers::pi / oscillator_frequency(params); }

double kepler_period(const KeplerParams& params) {
  if (!(params.h < 0.0)) {
    throw std::invalid_argument("kepler_period: requires h < 0");
  }
  const double a = -params.mass_product / (2.0 * params.h);
  return 2.0 * std::numbers::pi * std::sqrt(params.mu * a * a * a / params.mass_product);
}

PairState kepler_orbit_state(const KeplerParams& params, double ecc) {
  params.validate();
  if (!(params.h < 0.0)) {
    throw std::invalid_argument("kepler_orbit_state: bound orbits need h < 0");
  }
  if (!(ecc >= 0.0 && ecc <= 1.0)) {
    throw std::invalid_argument("kepler_orbit_state: eccentricity must lie in [0, 1]");
  }
  const double a = -params.mass_product / (2.0 * params.h);
  const double r_apo = a * (1.0 + ecc);
  const double p2 = 2.0 * params.mu * (params.h + params.mass_product / r_apo);
  const double p = std::sqrt(std::max(0.0, p2));
  return ks_lift(Vec3(r_apo, 0.0, 0.0), Vec3(0.0, p, 0.0));
}

KeplerTrajectory kepler_flow(const PairState& state0, const KeplerParams& params, double s_end, double ds,
                             const KeplerFlowOptions& options) {
  params.validate();
  if (!(ds > 0.0) || !(s_end > 0.0)) {
    throw std::invalid_argument("kepler_flow: ds and s_end must be positive");
  }
  const Eigen::Vector4d grad = kepler_gradient(params);

  const auto canonical_rhs = [&](const CanonicalVec& y) {
    CanonicalVec dy;
    dy.head<4>() = y.tail<4>() / (4.0 * params.mu);
    dy.tail<4>() = 2.0 * params.h * y.head<4>();
    return dy;
  };
  const auto structure_rhs = [&](const StructureVec& y) {
    StructureVec dy;
    const KeplerInvariants X = KeplerInvariants::from_vector(y.head<4>());
    dy.head<4>() = kepler_poisson_matrix(X) * grad;
    dy[4] = kSqrt2 * X.X1;
    return dy;
  };
  const KeplerInvariants X0 = kepler_invariants(state0.Q, state0.P);
  const Mat2 Plax = kepler_lax(X0, params).Pmat;
  const auto lax_rhs = [&](const Mat2& L) { return Mat2(Plax * L - L * Plax); };

  CanonicalVec yc = pack(state0);
  StructureVec yx;
  yx << X0.vector(), 0.0;
  Mat2 L = kepler_lax(X0, params).L;

  const double det0 = L.determinant();
  const double det_scale = std::max(std::abs(det0), X0.X1 * X0.X1 + X0.X2 * X0.X2 + X0.X3 * X0.X3);
  const double H0 = kepler_hamiltonian(state0.Q, state0.P, params);

  KeplerTrajectory traj;
  const std::size_t every = std::max<std::size_t>(options.record_every, 1);
  const auto record = [&](double s) {
    KeplerSample sample{s, yx[4], KeplerInvariants::from_vector(yx.head<4>()), L, unpack(yc)};
    if (options.on_sample) {
      options.on_sample(sample);
    }
    traj.samples.push_back(std::move(sample));
  };
  record(0.0);

  const StepGrid grid(s_end, ds);
  for (std::size_t k = 0; k < grid.count; ++k) {
    const double h = grid.step(k);
    yc = rk4_step(yc, h, canonical_rhs);
    yx = rk4_step(yx, h, structure_rhs);
    L = rk4_step(L, h, lax_rhs);
    const double s = grid.s_after(k);

    const KeplerInvariants Xs = KeplerInvariants::from_vector(yx.head<4>());
    const KeplerInvariants Xl = invariants_from_lax(L, Xs.X4);
    const PairState st = unpack(yc);
    const KeplerInvariants Xc = kepler_invariants(st.Q, st.P);
    traj.max_form_deviation = std::max(traj.max_form_deviation, (Xs.vector() - Xl.vector()).cwiseAbs().maxCoeff());
    traj.max_canonical_deviation =
        std::max(traj.max_canonical_deviation, (Xs.vector() - Xc.vector()).cwiseAbs().maxCoeff());
    traj.max_hamiltonian_drift =
        std::max(traj.max_hamiltonian_drift, std::abs(kepler_hamiltonian(st.Q, st.P, params) - H0));
    const double drift = std::abs(L.determinant() - det0) / det_scale;
    traj.max_det_drift = std::max(traj.max_det_drift, drift);

    const bool last = k + 1 == grid.count;
    if (last || (k + 1) % every == 0 || drift > options.det_drift_guard) {
      record(s);
    }
    if (drift > options.det_drift_guard) {
      throw StepTooLarge("kepler_flow: det L drift exceeded guard", s, drift);
    }
  }
  return traj;
}

}  // namespace ksred
