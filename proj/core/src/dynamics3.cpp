#include "ksred/dynamics3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ksred/errors.hpp"
#include "ksred/rk4.hpp"

namespace ksred {

namespace {

using StateVec = Eigen::Matrix<double, 25, 1>;  // Q_a, P_a (24) and t

// Pair a is opposite body a; its bodies are (a+1, a+2) mod 3.
constexpr int next(int a) { return (a + 1) % 3; }
constexpr int prev(int a) { return (a + 2) % 3; }

StateVec pack(const RegState& st, double t) {
  StateVec v;
  for (int a = 0; a < 3; ++a) {
    v.segment<4>(4 * a) = st.pairs[a].Q.vector();
    v.segment<4>(12 + 4 * a) = st.pairs[a].P.vector();
  }
  v[24] = t;
  return v;
}

RegState unpack(const StateVec& v, const ThreeBodyParams& params) {
  RegState st;
  st.params = params;
  for (int a = 0; a < 3; ++a) {
    st.pairs[a].Q = Quaternion::from_vector(v.segment<4>(4 * a));
    st.pairs[a].P = Quaternion::from_vector(v.segment<4>(12 + 4 * a));
  }
  return st;
}

// Index helpers into the 6x6 Gram matrices (m = 3).
constexpr int qi(int i) { return i; }
constexpr int pi_(int i) { return 3 + i; }

void require_m3(const GramPair& g, const char* where) {
  if (g.m != 3 || g.G.rows() != 6 || g.Omega.rows() != 6) {
    throw DimensionMismatch(std::string(where) + ": requires m = 3");
  }
}

// Adds d to the single-variable derivative of the symmetric entry (u,v).
void add_sym(MatrixXd& dG, int u, int v, double d) {
  dG(u, v) += d;
  if (u != v) dG(v, u) += d;
}

// Adds d to the derivative with respect to Omega(u,v), keeping antisymmetry.
void add_skew(MatrixXd& dO, int u, int v, double d) {
  dO(u, v) += d;
  dO(v, u) -= d;
}

}  // namespace

double ThreeBodyParams::mu(int pair) const {
  const double mb = masses[next(pair)], mc = masses[prev(pair)];
  return mb * mc / (mb + mc);
}

double ThreeBodyParams::coupling(int pair) const { return masses[next(pair)] * masses[prev(pair)]; }

void ThreeBodyParams::validate() const {
  for (double m : masses) {
    if (!(m > 0.0)) throw std::invalid_argument("ThreeBodyParams: masses must be positive");
  }
}

std::array<double, 3> RegState::separations() const {
  return {pairs[0].Q.norm2(), pairs[1].Q.norm2(), pairs[2].Q.norm2()};
}

double heggie_hamiltonian(const RegState& st) {
  const auto R = st.separations();
  const auto& p = st.params;
  std::array<Quaternion, 3> W;
  for (int a = 0; a < 3; ++a) W[a] = st.pairs[a].Q * star(st.pairs[a].P);

  double kinetic = 0.0, cross = 0.0, potential = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double others = R[next(a)] * R[prev(a)];
    kinetic += others * st.pairs[a].P.norm2() / p.mu(a);
    cross += R[a] / p.masses[a] * W[next(a)].dot(W[prev(a)]);
    potential += p.coupling(a) * others;
  }
  return kinetic / 8.0 - cross / 4.0 - potential - p.h * R[0] * R[1] * R[2];
}

RegDerivative heggie_rhs(const RegState& st) {
  const auto R = st.separations();
  const auto& p = st.params;
  std::array<Quaternion, 3> W;
  for (int a = 0; a < 3; ++a) W[a] = st.pairs[a].Q * star(st.pairs[a].P);

  RegDerivative d;
  for (int a = 0; a < 3; ++a) {
    const int b = next(a), c = prev(a);
    const Quaternion& Q = st.pairs[a].Q;
    const Quaternion& P = st.pairs[a].P;
    const double others = R[b] * R[c];
    // Partner combination multiplying W_a in the cross terms.
    const Quaternion V = (R[c] / p.masses[c]) * W[b] + (R[b] / p.masses[b]) * W[c];

    d.dQ[a] = (others / (4.0 * p.mu(a))) * P - 0.25 * star(bar(Q) * V);

    const double kin_b = st.pairs[b].P.norm2() / (8.0 * p.mu(b)) - p.coupling(b);
    const double kin_c = st.pairs[c].P.norm2() / (8.0 * p.mu(c)) - p.coupling(c);
    const Quaternion dH_dQ = (2.0 * (R[c] * kin_b + R[b] * kin_c)) * Q -
                             0.25 * ((2.0 / p.masses[a]) * W[b].dot(W[c]) * Q + V * bar(star(P))) -
                             (2.0 * p.h * others) * Q;
    d.dP[a] = -dH_dQ;
  }
  return d;
}

double energy_constant(const std::array<PairState, 3>& pairs, const std::array<double, 3>& masses) {
  RegState st{pairs, ThreeBodyParams{masses, 0.0}};
  const auto R = st.separations();
  const double product = R[0] * R[1] * R[2];
  if (product == 0.0) {
    throw CollisionPoint("energy_constant: a pair separation is zero");
  }
  return heggie_hamiltonian(st) / product;
}

double pair_kinetic_energy(const std::array<Vec3, 3>& pm, const std::array<double, 3>& masses) {
  const ThreeBodyParams p{masses, 0.0};
  double T = 0.0;
  for (int a = 0; a < 3; ++a) {
    T += pm[a].squaredNorm() / (2.0 * p.mu(a)) - pm[next(a)].dot(pm[prev(a)]) / masses[a];
  }
  return T;
}

std::array<Vec3, 3> pair_momenta(const std::array<Vec3, 3>& body) {
  std::array<Vec3, 3> out;
  for (int a = 0; a < 3; ++a) out[a] = (body[next(a)] - body[prev(a)]) / 3.0;
  return out;
}

double physical_energy(const RegState& st) {
  std::array<Vec3, 3> pm;
  double V = 0.0;
  for (int a = 0; a < 3; ++a) {
    const auto& pr = st.pairs[a];
    pm[a] = ks_mom(pr.Q, pr.P);
    V -= st.params.coupling(a) / pr.Q.norm2();
  }
  return pair_kinetic_energy(pm, st.params.masses) + V;
}

Vec3 total_angular_momentum(const RegState& st) {
  Vec3 L = Vec3::Zero();
  for (const auto& pr : st.pairs) L += momentum_map(pr.Q, pr.P).L;
  return L;
}

Vec3 configuration_closure(const RegState& st) {
  Vec3 q = Vec3::Zero();
  for (const auto& pr : st.pairs) q += ks_pos(pr.Q);
  return q;
}

RegState ingest_bodies(const std::array<Vec3, 3>& positions, const std::array<Vec3, 3>& velocities,
                       const std::array<double, 3>& masses) {
  ThreeBodyParams params{masses, 0.0};
  params.validate();
  const double total = masses[0] + masses[1] + masses[2];
  Vec3 com = Vec3::Zero(), vcom = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    com += masses[i] * positions[i];
    vcom += masses[i] * velocities[i];
  }
  com /= total;
  vcom /= total;

  std::array<Vec3, 3> q, momenta;
  for (int i = 0; i < 3; ++i) {
    q[i] = positions[i] - com;
    momenta[i] = masses[i] * (velocities[i] - vcom);
  }
  const auto pm = pair_momenta(momenta);

  RegState st;
  for (int a = 0; a < 3; ++a) {
    const Vec3 qa = q[next(a)] - q[prev(a)];
    if (qa.squaredNorm() == 0.0) {
      throw CollisionPoint("ingest_bodies: bodies " + std::to_string(next(a) + 1) + " and " +
                           std::to_string(prev(a) + 1) + " coincide");
    }
    st.pairs[a] = ks_lift(qa, pm[a]);
  }
  params.h = energy_constant(st.pairs, masses);
  st.params = params;
  return st;
}

CanonicalTrajectory canonical_flow(const RegState& state0, double s_end, double ds, const FlowOptions& options,
                                   const std::function<void(const CanonicalSample&)>& on_sample) {
  state0.params.validate();
  if (!(ds > 0.0) || !(s_end > 0.0)) {
    throw std::invalid_argument("canonical_flow: ds and s_end must be positive");
  }
  const ThreeBodyParams& params = state0.params;
  const auto rhs = [&](const StateVec& y) {
    const RegState st = unpack(y, params);
    const RegDerivative d = heggie_rhs(st);
    StateVec dy;
    for (int a = 0; a < 3; ++a) {
      dy.segment<4>(4 * a) = d.dQ[a].vector();
      dy.segment<4>(12 + 4 * a) = d.dP[a].vector();
    }
    const auto R = st.separations();
    dy[24] = R[0] * R[1] * R[2];
    return dy;
  };

  const double H0 = heggie_hamiltonian(state0);
  std::array<double, 3> c0;
  for (int a = 0; a < 3; ++a) c0[a] = bilinear(state0.pairs[a].Q, state0.pairs[a].P);
  const Vec3 L0 = total_angular_momentum(state0);

  CanonicalTrajectory traj;
  auto& diag = traj.diagnostics;
  const auto R0 = state0.separations();
  diag.min_separation = std::min({R0[0], R0[1], R0[2]});
  diag.max_closure = configuration_closure(state0).norm();

  const std::size_t every = std::max<std::size_t>(options.record_every, 1);
  const auto record = [&](double s, const StateVec& y) {
    CanonicalSample sample{s, y[24], unpack(y, params)};
    if (on_sample) on_sample(sample);
    traj.samples.push_back(std::move(sample));
  };

  StateVec y = pack(state0, 0.0);
  record(0.0, y);
  const StepGrid grid(s_end, ds);
  for (std::size_t k = 0; k < grid.count; ++k) {
    y = rk4_step(y, grid.step(k), rhs);
    const double s = grid.s_after(k);
    const RegState st = unpack(y, params);

    const double drift = std::abs(heggie_hamiltonian(st) - H0);
    diag.max_hamiltonian_drift = std::max(diag.max_hamiltonian_drift, drift);
    for (int a = 0; a < 3; ++a) {
      diag.max_bilinear_drift[a] =
          std::max(diag.max_bilinear_drift[a], std::abs(bilinear(st.pairs[a].Q, st.pairs[a].P) - c0[a]));
    }
    diag.max_angular_momentum_drift =
        std::max(diag.max_angular_momentum_drift, (total_angular_momentum(st) - L0).norm());
    diag.max_closure = std::max(diag.max_closure, configuration_closure(st).norm());
    const auto R = st.separations();
    diag.min_separation = std::min({diag.min_separation, R[0], R[1], R[2]});

    const bool failed = !(drift <= options.drift_guard);
    if (k + 1 == grid.count || (k + 1) % every == 0 || failed) record(s, y);
    if (failed) {
      throw StepTooLarge("canonical_flow: regularised Hamiltonian drift exceeded guard", s, drift);
    }
  }
  return traj;
}

double f_pair(const GramPair& g, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= g.m || j >= g.m) {
    throw IndexError("f_pair: needs two distinct pair indices in [0, m)");
  }
  const int m = g.m;
  const auto alpha = [&](int x, int y) { return g.G(x, y); };
  const auto beta = [&](int x, int y) { return g.G(m + x, m + y); };
  const auto gamma = [&](int x, int y) { return g.G(x, m + y); };
  const auto a = [&](int x, int y) { return g.Omega(x, y); };
  const auto b = [&](int x, int y) { return g.Omega(m + x, m + y); };
  const auto c = [&](int x, int y) { return g.Omega(x, m + y); };
  return 4.0 * (gamma(i, j) * gamma(j, i) - gamma(i, i) * gamma(j, j) + beta(i, j) * alpha(i, j) -
                c(i, j) * c(j, i) + b(i, j) * a(i, j) + c(i, i) * c(j, j));
}

double invariant_hamiltonian(const GramPair& g, const ThreeBodyParams& p) {
  require_m3(g, "invariant_hamiltonian");
  const std::array<double, 3> R{g.G(0, 0), g.G(1, 1), g.G(2, 2)};
  double kinetic = 0.0, cross = 0.0, potential = 0.0;
  for (int a = 0; a < 3; ++a) {
    const int b = next(a), c = prev(a);
    const double others = R[b] * R[c];
    kinetic += others * g.G(pi_(a), pi_(a)) / p.mu(a);
    cross += R[a] / p.masses[a] * f_pair(g, std::min(b, c), std::max(b, c));
    potential += p.coupling(a) * others;
  }
  return kinetic / 8.0 - cross / 16.0 - potential - p.h * R[0] * R[1] * R[2];
}

InvariantGradient hamiltonian_partials(const GramPair& g, const ThreeBodyParams& p) {
  require_m3(g, "hamiltonian_partials");
  InvariantGradient d{MatrixXd::Zero(6, 6), MatrixXd::Zero(6, 6)};
  const std::array<double, 3> R{g.G(0, 0), g.G(1, 1), g.G(2, 2)};
  const auto& G = g.G;
  const auto& O = g.Omega;

  for (int a = 0; a < 3; ++a) {
    const int b = next(a), c = prev(a);
    const double others = R[b] * R[c];
    const double beta_aa = G(pi_(a), pi_(a));

    // kinetic: others * beta_aa / (8 mu_a)
    add_sym(d.dG, pi_(a), pi_(a), others / (8.0 * p.mu(a)));
    const double kin = beta_aa / (8.0 * p.mu(a));
    add_sym(d.dG, qi(b), qi(b), R[c] * kin);
    add_sym(d.dG, qi(c), qi(c), R[b] * kin);

    // potential: -coupling * others
    add_sym(d.dG, qi(b), qi(b), -p.coupling(a) * R[c]);
    add_sym(d.dG, qi(c), qi(c), -p.coupling(a) * R[b]);

    // cross: -(R_a / (16 m_a)) f_ij with i < j the other two pairs
    const int i = std::min(b, c), j = std::max(b, c);
    add_sym(d.dG, qi(a), qi(a), -f_pair(g, i, j) / (16.0 * p.masses[a]));
    const double w = -4.0 * R[a] / (16.0 * p.masses[a]);
    add_sym(d.dG, qi(i), pi_(j), w * G(qi(j), pi_(i)));
    add_sym(d.dG, qi(j), pi_(i), w * G(qi(i), pi_(j)));
    add_sym(d.dG, qi(i), pi_(i), -w * G(qi(j), pi_(j)));
    add_sym(d.dG, qi(j), pi_(j), -w * G(qi(i), pi_(i)));
    add_sym(d.dG, pi_(i), pi_(j), w * G(qi(i), qi(j)));
    add_sym(d.dG, qi(i), qi(j), w * G(pi_(i), pi_(j)));
    add_skew(d.dOmega, qi(i), pi_(j), -w * O(qi(j), pi_(i)));
    add_skew(d.dOmega, qi(j), pi_(i), -w * O(qi(i), pi_(j)));
    add_skew(d.dOmega, pi_(i), pi_(j), w * O(qi(i), qi(j)));
    add_skew(d.dOmega, qi(i), qi(j), w * O(pi_(i), pi_(j)));
    add_skew(d.dOmega, qi(i), pi_(i), w * O(qi(j), pi_(j)));
    add_skew(d.dOmega, qi(j), pi_(j), w * O(qi(i), pi_(i)));
  }
  // -h R_0 R_1 R_2
  for (int a = 0; a < 3; ++a) add_sym(d.dG, qi(a), qi(a), -p.h * R[next(a)] * R[prev(a)]);
  return d;
}

MatrixXcd grad_dM(const GramPair& g, const ThreeBodyParams& params) {
  const InvariantGradient d = hamiltonian_partials(g, params);
  MatrixXcd dM(6, 6);
  dM.real() = d.dG;
  dM.real().diagonal() *= 2.0;
  dM.imag() = d.dOmega;
  return dM;
}

VectorXd coordinate_gradient(const InvariantBasis& basis, const GramPair& g, const ThreeBodyParams& params) {
  const InvariantGradient d = hamiltonian_partials(g, params);
  VectorXd grad(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& e = basis[k];
    if (!e.symmetric) {
      grad[k] = d.dOmega(e.u, e.v);
    } else {
      // diagonal coordinate is G(u,u)/sqrt2
      grad[k] = e.u == e.v ? std::numbers::sqrt2 * d.dG(e.u, e.u) : d.dG(e.u, e.v);
    }
  }
  return grad;
}

MatrixXcd reduced_rhs(const MatrixXcd& L, const MatrixXcd& dM) {
  if (L.rows() != L.cols() || dM.rows() != dM.cols() || L.rows() != dM.rows() || L.rows() % 2 != 0) {
    throw DimensionMismatch("reduced_rhs: L and dM must be 2m x 2m of the same size");
  }
  const MatrixXcd J = j_matrix(static_cast<int>(L.rows() / 2)).cast<std::complex<double>>();
  const MatrixXcd P = dM * J;
  return P * L - L * P;
}

MatrixXcd reduced_velocity(const MatrixXcd& M, const ThreeBodyParams& params) {
  const MatrixXcd J = j_matrix(3).cast<std::complex<double>>();
  const MatrixXcd dM = grad_dM(GramPair::from_hermitian(M), params);
  const MatrixXcd V = -J * reduced_rhs(J * M, dM);
  // exact Hermitian; drop the round-off anti-Hermitian part
  return 0.5 * (V + V.adjoint());
}

double casimir_drift(std::complex<double> now, std::complex<double> initial, double l0_norm, int degree) {
  const double scale = std::max(std::abs(initial), std::pow(l0_norm, degree));
  return scale > 0.0 ? std::abs(now - initial) / scale : std::abs(now - initial);
}

namespace {

struct LaxState {
  MatrixXcd M;
  double t;
  LaxState operator+(const LaxState& o) const { return {M + o.M, t + o.t}; }
  friend LaxState operator*(double a, const LaxState& y) { return {a * y.M, a * y.t}; }
};

std::complex<double> trace_identity_residual(const MatrixXcd& M) {
  // Tr L = -2i sum_a c_aa with L = J M
  const MatrixXcd L = j_matrix(3).cast<std::complex<double>>() * M;
  std::complex<double> sum_c = 0.0;
  for (int a = 0; a < 3; ++a) sum_c += M(a, 3 + a).imag();
  return L.trace() + std::complex<double>(0.0, 2.0) * sum_c;
}

}  // namespace

ReducedTrajectory reduced_flow(const MatrixXcd& M0, const ThreeBodyParams& params, double s_end, double ds,
                               const FlowOptions& options,
                               const std::function<void(const ReducedSample&)>& on_sample) {
  params.validate();
  if (M0.rows() != 6 || M0.cols() != 6) {
    throw DimensionMismatch("reduced_flow: M must be 6 x 6");
  }
  if (!(ds > 0.0) || !(s_end > 0.0)) {
    throw std::invalid_argument("reduced_flow: ds and s_end must be positive");
  }
  const MatrixXcd J = j_matrix(3).cast<std::complex<double>>();

  const auto rhs = [&](const LaxState& y) {
    const double dt = y.M(0, 0).real() * y.M(1, 1).real() * y.M(2, 2).real();
    return LaxState{reduced_velocity(y.M, params), dt};
  };

  const auto e0 = casimirs(J * M0);
  const double l0 = (J * M0).norm();
  ReducedTrajectory traj;
  traj.max_casimir_drift.assign(e0.size(), 0.0);

  const std::size_t every = std::max<std::size_t>(options.record_every, 1);
  const auto record = [&](double s, const LaxState& y, std::vector<std::complex<double>> e) {
    ReducedSample sample{s, y.t, y.M, std::move(e)};
    if (on_sample) on_sample(sample);
    traj.samples.push_back(std::move(sample));
  };

  LaxState y{M0, 0.0};
  traj.max_trace_residual = std::abs(trace_identity_residual(M0));
  traj.max_hermitian_residual = (M0 - M0.adjoint()).norm();
  record(0.0, y, e0);

  const StepGrid grid(s_end, ds);
  for (std::size_t k = 0; k < grid.count; ++k) {
    y = rk4_step(y, grid.step(k), rhs);
    const double s = grid.s_after(k);
    auto e = casimirs(J * y.M);
    double worst = 0.0;
    for (std::size_t d = 0; d < e.size(); ++d) {
      const double drift = casimir_drift(e[d], e0[d], l0, static_cast<int>(d + 1));
      traj.max_casimir_drift[d] = std::max(traj.max_casimir_drift[d], drift);
      worst = std::max(worst, drift);
    }
    traj.max_trace_residual = std::max(traj.max_trace_residual, std::abs(trace_identity_residual(y.M)));
    traj.max_hermitian_residual = std::max(traj.max_hermitian_residual, (y.M - y.M.adjoint()).norm());

    const bool failed = !(worst <= options.drift_guard);
    if (k + 1 == grid.count || (k + 1) % every == 0 || failed) record(s, y, std::move(e));
    if (failed) {
      throw StepTooLarge("reduced_flow: Casimir drift exceeded guard", s, worst);
    }
  }
  return traj;
}

std::vector<StructureSample> structure_flow(const VectorXd& x0, const StructureTensor& tensor,
                                            const ThreeBodyParams& params, double s_end, double ds,
                                            std::size_t record_every) {
  params.validate();
  if (tensor.m() != 3 || static_cast<std::size_t>(x0.size()) != tensor.dimension()) {
    throw DimensionMismatch("structure_flow: requires the m = 3 tensor and 36 coordinates");
  }
  if (!(ds > 0.0) || !(s_end > 0.0)) {
    throw std::invalid_argument("structure_flow: ds and s_end must be positive");
  }
  const InvariantBasis basis(3);
  const Eigen::Index n = x0.size();
  const auto rhs = [&](const VectorXd& y) {
    const VectorXd x = y.head(n);
    const GramPair g = basis.gram_from_coordinates(x);
    VectorXd dy(n + 1);
    dy.head(n) = tensor.lie_poisson_rhs(x, coordinate_gradient(basis, g, params));
    dy[n] = g.G(0, 0) * g.G(1, 1) * g.G(2, 2);
    return dy;
  };

  std::vector<StructureSample> out;
  VectorXd y(n + 1);
  y << x0, 0.0;
  out.push_back({0.0, 0.0, x0});
  const std::size_t every = std::max<std::size_t>(record_every, 1);
  const StepGrid grid(s_end, ds);
  for (std::size_t k = 0; k < grid.count; ++k) {
    y = rk4_step(y, grid.step(k), rhs);
    if (k + 1 == grid.count || (k + 1) % every == 0) {
      out.push_back({grid.s_after(k), y[n], y.head(n)});
    }
  }
  return out;
}

}  // namespace ksred
