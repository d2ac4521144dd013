#pragma once

// The KS-regularised three-body problem (Heggie's Hamiltonian) and its
// symmetry-reduced forms.
//
// Pairs are ordered pair 1 <-> bodies (2,3), pair 2 <-> (3,1), pair 3 <-> (1,2);
// with 0-based indices, pair a is opposite body a. R_a = |Q_a|^2 is the pair
// separation and fictitious time s satisfies dt/ds = R_1 R_2 R_3.
//
// Three representations of the same flow are provided:
//   canonical_flow  RK4 on (Q_a, P_a) with Heggie's Hamiltonian,
//   reduced_flow    RK4 on the Hermitian matrix M = G + i Omega in Lax form,
//   structure_flow  RK4 on the 36 normalised invariants with the structure tensor.

#include <Eigen/Core>
#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "ksred/invariant_algebra.hpp"
#include "ksred/quat_core.hpp"

namespace ksred {

struct ThreeBodyParams {
  std::array<double, 3> masses{1.0, 1.0, 1.0};
  double h{0.0};

  /// Reduced mass of pair a: m_b m_c / (m_b + m_c).
  double mu(int pair) const;
  /// m_b m_c for pair a.
  double coupling(int pair) const;
  /// Throws std::invalid_argument unless all masses are positive.
  void validate() const;
};

struct RegState {
  std::array<PairState, 3> pairs;
  ThreeBodyParams params;

  std::array<double, 3> separations() const;  ///< R_a
};

/// Heggie's regularised Hamiltonian with raw quaternion cross terms.
double heggie_hamiltonian(const RegState& state);

struct RegDerivative {
  std::array<Quaternion, 3> dQ;
  std::array<Quaternion, 3> dP;
};

/// dQ/ds = dH/dP, dP/ds = -dH/dQ (analytic).
RegDerivative heggie_rhs(const RegState& state);

/// h with heggie_hamiltonian = 0; equals the physical energy of the
/// configuration. Throws CollisionPoint if any R_a = 0.
double energy_constant(const std::array<PairState, 3>& pairs, const std::array<double, 3>& masses);

/// Kinetic energy in pair momenta:
/// sum_a |p_a|^2 / (2 mu_a) - (p_2.p_3/m_1 + p_3.p_1/m_2 + p_1.p_2/m_3).
double pair_kinetic_energy(const std::array<Vec3, 3>& pair_momenta, const std::array<double, 3>& masses);

/// Pair momenta (p_b - p_c)/3 from centre-of-mass body momenta.
std::array<Vec3, 3> pair_momenta(const std::array<Vec3, 3>& body_momenta);

/// Physical energy from the KS projections of each pair (all R_a > 0).
double physical_energy(const RegState& state);

/// sum_a momentum_map(Q_a, P_a).L
Vec3 total_angular_momentum(const RegState& state);

/// sum_a ks_pos(Q_a); zero for consistent data.
Vec3 configuration_closure(const RegState& state);

/// Shift to the centre-of-mass frame, form pair differences and pair momenta
/// (p_b - p_c)/3 with p_i = m_i v_i, KS-lift every pair and set h so the
/// regularised Hamiltonian vanishes. Throws CollisionPoint on coincident bodies.
RegState ingest_bodies(const std::array<Vec3, 3>& positions, const std::array<Vec3, 3>& velocities,
                       const std::array<double, 3>& masses);

struct FlowOptions {
  double drift_guard = 1e-4;
  std::size_t record_every = 1;
};

struct CanonicalSample {
  double s;
  double t;
  RegState state;
};

struct CanonicalDiagnostics {
  double max_hamiltonian_drift = 0.0;             ///< abs
  std::array<double, 3> max_bilinear_drift{};     ///< abs, per pair
  double max_angular_momentum_drift = 0.0;        ///< abs, Euclidean norm
  double max_closure = 0.0;                       ///< |sum ks_pos(Q_a)|
  double min_separation = 0.0;                    ///< min over steps and pairs of R_a
};

struct CanonicalTrajectory {
  std::vector<CanonicalSample> samples;
  CanonicalDiagnostics diagnostics;
};

/// RK4 on Heggie's canonical equations. Throws StepTooLarge when the
/// Hamiltonian drift exceeds options.drift_guard; samples already passed to
/// on_sample stay valid.
CanonicalTrajectory canonical_flow(const RegState& state0, double s_end, double ds, const FlowOptions& options = {},
                                   const std::function<void(const CanonicalSample&)>& on_sample = {});

/// f_ij = 4 (Q_i * star(P_i)).(Q_j * star(P_j)) in raw invariants:
/// 4 (g_ij g_ji - g_ii g_jj + beta_ij alpha_ij - c_ij c_ji + b_ij a_ij + c_ii c_jj).
/// The last term vanishes on the bilinear constraint. 0-based indices;
/// throws IndexError if i == j or out of range.
double f_pair(const GramPair& g, int i, int j);

/// Heggie's Hamiltonian written in the raw invariants (m = 3).
/// Throws DimensionMismatch otherwise.
double invariant_hamiltonian(const GramPair& g, const ThreeBodyParams& params);

/// Partial derivatives of invariant_hamiltonian. dG(u,v) = dG(v,u) is the
/// derivative with respect to the single variable G(u,v) (u != v) or G(u,u);
/// dOmega(u,v) = -dOmega(v,u) is the derivative with respect to Omega(u,v), u < v.
struct InvariantGradient {
  MatrixXd dG;
  MatrixXd dOmega;
};
InvariantGradient hamiltonian_partials(const GramPair& g, const ThreeBodyParams& params);

/// Hermitian gradient dM: off-diagonal dH/dG(u,v) + i dH/dOmega(u,v),
/// diagonal 2 dH/dG(u,u).
MatrixXcd grad_dM(const GramPair& g, const ThreeBodyParams& params);

/// dH/dx_k in the normalised coordinates of `basis`.
VectorXd coordinate_gradient(const InvariantBasis& basis, const GramPair& g, const ThreeBodyParams& params);

/// [P, L] with P = dM J. Throws DimensionMismatch.
MatrixXcd reduced_rhs(const MatrixXcd& L, const MatrixXcd& dM);

/// dM/ds = J^{-1} [P, J M].
MatrixXcd reduced_velocity(const MatrixXcd& M, const ThreeBodyParams& params);

struct ReducedSample {
  double s;
  double t;
  MatrixXcd M;
  std::vector<std::complex<double>> casimirs;
};

struct ReducedTrajectory {
  std::vector<ReducedSample> samples;
  std::vector<double> max_casimir_drift;  ///< per coefficient, see reduced_flow
  double max_trace_residual = 0.0;        ///< |Tr L + 2i sum c_ii|
  double max_hermitian_residual = 0.0;    ///< |M - M^dagger|_F
};

/// Relative drift of a characteristic coefficient:
/// |e_k(s) - e_k(0)| / max(|e_k(0)|, |L(0)|_F^k).
double casimir_drift(std::complex<double> now, std::complex<double> initial, double l0_norm, int degree);

/// RK4 on M in Lax form. Records the 6 characteristic coefficients at every
/// sample. Throws StepTooLarge when a Casimir drift exceeds options.drift_guard.
ReducedTrajectory reduced_flow(const MatrixXcd& M0, const ThreeBodyParams& params, double s_end, double ds,
                               const FlowOptions& options = {},
                               const std::function<void(const ReducedSample&)>& on_sample = {});

struct StructureSample {
  double s;
  double t;
  VectorXd x;  ///< normalised coordinates
};

/// RK4 on x' = B(x) grad H using the structure tensor of m = 3.
std::vector<StructureSample> structure_flow(const VectorXd& x0, const StructureTensor& tensor,
                                            const ThreeBodyParams& params, double s_end, double ds,
                                            std::size_t record_every = 1);

}  // namespace ksred
