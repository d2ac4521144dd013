#include <doctest.h>

#include <ksred/dynamics3.hpp>
#include <ksred/errors.hpp>
#include <ksred/kepler.hpp>

#include "test_support.hpp"

using namespace ksred;
using namespace ksred::testing;

namespace {

RegState random_state(Rng& rng) {
  RegState st;
  for (auto& p : st.pairs) p = {normal_quat(rng), normal_quat(rng)};
  st.params = {{uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0)}, uniform(rng, -2.0, 0.0)};
  return st;
}

RegState ingest(const Bodies& b) { return ingest_bodies(b.q, b.v, b.m); }

const MatrixXcd& j6() {
  static const MatrixXcd J = j_matrix(3).cast<std::complex<double>>();
  return J;
}

}  // namespace

TEST_CASE("params") {
  const ThreeBodyParams p{{1.0, 2.0, 3.0}, -1.0};
  CHECK(p.mu(0) == doctest::Approx(6.0 / 5.0));
  CHECK(p.mu(1) == doctest::Approx(3.0 / 4.0));
  CHECK(p.mu(2) == doctest::Approx(2.0 / 3.0));
  CHECK(p.coupling(2) == doctest::Approx(2.0));
  CHECK_THROWS_AS((ThreeBodyParams{{1.0, 0.0, 1.0}, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("heggie_hamiltonian worked values") {
  RegState st;
  for (auto& p : st.pairs) p = {Quaternion::one(), Quaternion{}};
  st.params = {{1.0, 1.0, 1.0}, -3.0};
  CHECK(heggie_hamiltonian(st) == doctest::Approx(0.0).scale(1.0));
  CHECK(energy_constant(st.pairs, st.params.masses) == doctest::Approx(-3.0));
  const RegDerivative d = heggie_rhs(st);
  for (int a = 0; a < 3; ++a) CHECK(d.dQ[a].norm2() == 0.0);

  std::array<PairState, 3> collided = st.pairs;
  collided[1].Q = Quaternion{};
  CHECK_THROWS_AS(energy_constant(collided, st.params.masses), CollisionPoint);
}

TEST_CASE("heggie_rhs against central differences") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const RegState st = random_state(rng);
    const RegDerivative d = heggie_rhs(st);
    const double e = 1e-6;
    for (int a = 0; a < 3; ++a) {
      for (int k = 0; k < 4; ++k) {
        for (int which = 0; which < 2; ++which) {
          RegState plus = st, minus = st;
          Quaternion& qp = which ? plus.pairs[a].P : plus.pairs[a].Q;
          Quaternion& qm = which ? minus.pairs[a].P : minus.pairs[a].Q;
          Vec4 v = qp.vector();
          v[k] += e;
          qp = Quaternion::from_vector(v);
          v = qm.vector();
          v[k] -= e;
          qm = Quaternion::from_vector(v);
          const double fd = (heggie_hamiltonian(plus) - heggie_hamiltonian(minus)) / (2 * e);
          const double an = which ? d.dQ[a].vector()[k] : -d.dP[a].vector()[k];
          CHECK(rel(fd, an) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("kinetic term of heggie_rhs matches the Kepler module") {
  // With pair 3 the only moving pair, dQ_3/ds = R_1 R_2 P_3 / (4 mu_3) minus cross terms that vanish when P_1 = P_2 = 0.
  Rng rng(32);
  RegState st;
  st.pairs[0] = {normal_quat(rng), Quaternion{}};
  st.pairs[1] = {normal_quat(rng), Quaternion{}};
  st.pairs[2] = {normal_quat(rng), normal_quat(rng)};
  st.params = {{1.0, 1.5, 2.0}, -1.0};
  const double scale = st.pairs[0].Q.norm2() * st.pairs[1].Q.norm2();
  const RegDerivative d = heggie_rhs(st);
  const KeplerParams kp{st.params.mu(2), st.params.coupling(2), st.params.h};
  // Kepler: dQ/ds = P / (4 mu)
  const Vec4 kepler_dq = st.pairs[2].P.vector() / (4.0 * kp.mu);
  CHECK((d.dQ[2].vector() - scale * kepler_dq).norm() < 1e-12 * (1 + kepler_dq.norm() * scale));
}

TEST_CASE("regularised Hamiltonian equals (H - h) R1 R2 R3 on constrained states") {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const Bodies b = triangle_bodies(rng, 0.3);
    RegState st = ingest(b);
    CHECK(heggie_hamiltonian(st) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(st.params.h == doctest::Approx(newton_energy(b)).epsilon(1e-12));
    st.params.h = uniform(rng, -3.0, 0.0);
    const auto R = st.separations();
    CHECK(rel(heggie_hamiltonian(st), (newton_energy(b) - st.params.h) * R[0] * R[1] * R[2]) < 1e-12);
    CHECK(physical_energy(st) == doctest::Approx(newton_energy(b)).epsilon(1e-12));
  }
}

TEST_CASE("ingest_bodies") {
  SUBCASE("kinetic identity worked example") {
    const std::array<Vec3, 3> p{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3::Zero()};
    CHECK(pair_kinetic_energy(pair_momenta(p), {1.0, 1.0, 1.0}) == doctest::Approx(1.0));
  }
  SUBCASE("invariants of the ingested state") {
    Rng rng(34);
    const Bodies b = triangle_bodies(rng, 0.2);
    const RegState st = ingest(b);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(bilinear(st.pairs[a].Q, st.pairs[a].P)) < 1e-14);
    CHECK(configuration_closure(st).norm() < 1e-14);
    CHECK((total_angular_momentum(st) - newton_angular_momentum(b)).norm() < 1e-13);
    // pair 1 is q_2 - q_3
    CHECK((ks_pos(st.pairs[0].Q) - (b.q[1] - b.q[2])).norm() < 1e-14);
  }
  SUBCASE("translation and boost invariance") {
    Rng rng(35);
    Bodies b = triangle_bodies(rng, 0.2);
    const RegState st0 = ingest(b);
    for (int i = 0; i < 3; ++i) {
      b.q[i] += Vec3(3, -2, 1);
      b.v[i] += Vec3(0.5, 0.1, -0.2);
    }
    const RegState st1 = ingest(b);
    CHECK(st1.params.h == doctest::Approx(st0.params.h).epsilon(1e-12));
    for (int a = 0; a < 3; ++a) {
      CHECK((st1.pairs[a].Q - st0.pairs[a].Q).norm2() < 1e-26);
      CHECK((st1.pairs[a].P - st0.pairs[a].P).norm2() < 1e-24);
    }
  }
  SUBCASE("two-body reduction uses (p_i - p_j)/2") {
    const std::array<double, 2> m{1.0, 1.0};
    const Vec3 p1(0.3, 0.2, 0.0);
    const Vec3 pt = (p1 - (-p1)) / 2.0;
    CHECK(pt.squaredNorm() / (2 * (m[0] * m[1] / (m[0] + m[1]))) ==
          doctest::Approx(p1.squaredNorm() / (2 * m[0]) + p1.squaredNorm() / (2 * m[1])));
  }
  CHECK_THROWS_AS(ingest_bodies({Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)}, {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()},
                                {1.0, 1.0, 1.0}),
                  CollisionPoint);
}

TEST_CASE("f_pair") {
  Rng rng(36);
  const RegState st = random_state(rng);
  const GramPair g = extract_invariants(st.pairs);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const Quaternion Wi = st.pairs[i].Q * star(st.pairs[i].P), Wj = st.pairs[j].Q * star(st.pairs[j].P);
      CHECK(rel(f_pair(g, i, j), 4.0 * Wi.dot(Wj)) < 1e-12);
      CHECK(f_pair(g, i, j) == f_pair(g, j, i));
    }
  }
  CHECK_THROWS_AS(f_pair(g, 1, 1), IndexError);
  CHECK_THROWS_AS(f_pair(g, 0, 3), IndexError);
  RegState rest = st;
  for (auto& p : rest.pairs) p.P = Quaternion{};
  CHECK(f_pair(extract_invariants(rest.pairs), 0, 1) == 0.0);
}

TEST_CASE("invariant Hamiltonian") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const RegState st = random_state(rng);
    CHECK(rel(invariant_hamiltonian(extract_invariants(st.pairs), st.params), heggie_hamiltonian(st)) < 1e-10);
  }
  SUBCASE("gauge independence") {
    const RegState st = random_state(rng);
    const GroupElement g = group_element(normal3(rng), 0.4);
    const auto moved = apply_action(g, st.pairs);
    RegState st2 = st;
    std::copy(moved.begin(), moved.end(), st2.pairs.begin());
    CHECK(rel(heggie_hamiltonian(st2), heggie_hamiltonian(st)) < 1e-12);
  }
  CHECK_THROWS_AS(invariant_hamiltonian(GramPair{1, MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)}, ThreeBodyParams{}),
                  DimensionMismatch);
}

TEST_CASE("gradient conventions") {
  Rng rng(38);
  const RegState st = random_state(rng);
  const GramPair g = extract_invariants(st.pairs);
  const MatrixXcd dM = grad_dM(g, st.params);
  CHECK((dM - dM.adjoint()).norm() < 1e-14);

  SUBCASE("directional derivative <dM, dX> = 1/2 Tr(dM^dagger dX)") {
    MatrixXd S = normal_matrix(rng, 6), A = normal_matrix(rng, 6);
    S = 0.5 * (S + S.transpose()).eval();
    A = 0.5 * (A - A.transpose()).eval();
    const double e = 1e-6;
    const GramPair plus{3, g.G + e * S, g.Omega + e * A}, minus{3, g.G - e * S, g.Omega - e * A};
    const double fd =
        (invariant_hamiltonian(plus, st.params) - invariant_hamiltonian(minus, st.params)) / (2 * e);
    MatrixXcd dX(6, 6);
    dX.real() = S;
    dX.imag() = A;
    const double pairing = 0.5 * (dM.adjoint() * dX).trace().real();
    CHECK(rel(fd, pairing) < 1e-6);
  }
  SUBCASE("all-P = 0 state: beta_aa derivative is R_b R_c / (8 mu_a)") {
    RegState rest = st;
    for (auto& p : rest.pairs) p.P = Quaternion{};
    const GramPair gr = extract_invariants(rest.pairs);
    const InvariantGradient d = hamiltonian_partials(gr, rest.params);
    for (int a = 0; a < 3; ++a) {
      const double expected = gr.G((a + 1) % 3, (a + 1) % 3) * gr.G((a + 2) % 3, (a + 2) % 3) / (8 * rest.params.mu(a));
      CHECK(d.dG(3 + a, 3 + a) == doctest::Approx(expected));
    }
  }
  SUBCASE("diagonal of dM is twice the partial") {
    RegState rest;
    for (auto& p : rest.pairs) p = {Quaternion::one(), Quaternion{}};
    rest.pairs[0].Q = Quaternion{1.5, 0, 0, 0};
    rest.params = {{1.0, 1.0, 1.0}, 0.0};
    // with all P = 0 and unit R_2, R_3, dH/dG(0,0) = -(k_2 R_3 + k_3 R_2) - h R_2 R_3 = -2
    const MatrixXcd d = grad_dM(extract_invariants(rest.pairs), rest.params);
    CHECK(d(0, 0).real() == doctest::Approx(-4.0));
  }
}

TEST_CASE("reduced flow equations") {
  Rng rng(39);
  SUBCASE("dM = 0 gives zero") {
    const MatrixXcd L = MatrixXcd::Random(6, 6);
    CHECK(reduced_rhs(L, MatrixXcd::Zero(6, 6)).norm() == 0.0);
    CHECK_THROWS_AS(reduced_rhs(MatrixXcd::Zero(6, 6), MatrixXcd::Zero(4, 4)), DimensionMismatch);
  }
  SUBCASE("chain rule: Lax velocity is the push-forward of heggie_rhs") {
    for (int trial = 0; trial < 20; ++trial) {
      const RegState st = random_state(rng);
      const auto [dG, dW] = gram_push_forward(st, heggie_rhs(st));
      const MatrixXcd V = reduced_velocity(extract_invariants(st.pairs).hermitian(), st.params);
      CHECK((V.real() - dG).norm() < 1e-10 * (1 + dG.norm()));
      CHECK((V.imag() - dW).norm() < 1e-10 * (1 + dW.norm()));
    }
  }
  SUBCASE("Lie-Poisson contraction equals the Lax form") {
    const InvariantBasis basis(3);
    const StructureTensor t(basis);
    const RegState st = random_state(rng);
    const GramPair g = extract_invariants(st.pairs);
    const VectorXd x = basis.coordinates(g);
    const VectorXd lp = t.lie_poisson_rhs(x, coordinate_gradient(basis, g, st.params));
    const VectorXd lax = basis.coordinates(GramPair::from_hermitian(reduced_velocity(g.hermitian(), st.params)));
    CHECK((lp - lax).norm() < 1e-12 * (1 + lax.norm()));
  }
  SUBCASE("embedded Kepler pair reproduces the Kepler structure equations") {
    // pairs 1 and 2 frozen at rest with unit separation; pair 3 sees R_1 R_2 = 1
    RegState st;
    st.pairs[0] = {Quaternion::one(), Quaternion{}};
    st.pairs[1] = {Quaternion::one(), Quaternion{}};
    st.pairs[2] = {normal_quat(rng), normal_quat(rng)};
    st.params = {{1.0, 1.0, 1.0}, -0.7};
    const MatrixXcd V = reduced_velocity(extract_invariants(st.pairs).hermitian(), st.params);
    // the frozen pairs shift the effective energy by k_1 R_2 + k_2 R_1
    const KeplerParams kp{st.params.mu(2), st.params.coupling(2),
                          st.params.h + st.params.coupling(0) + st.params.coupling(1)};
    const KeplerInvariants X = kepler_invariants(st.pairs[2].Q, st.pairs[2].P);
    const Eigen::Vector4d dX = kepler_poisson_matrix(X) * kepler_gradient(kp);
    CHECK(rel(V(2, 2).real() / std::numbers::sqrt2, dX[0]) < 1e-12);
    CHECK(rel(V(5, 5).real() / std::numbers::sqrt2, dX[1]) < 1e-12);
    CHECK(rel(V(2, 5).real(), dX[2]) < 1e-12);
  }
}

TEST_CASE("canonical and reduced flows") {
  Rng rng(40);
  const RegState st = ingest(triangle_bodies(rng));
  const double s_end = 1.0, ds = 1e-3;
  const auto can = canonical_flow(st, s_end, ds, {1e-4, 100});
  const auto& d = can.diagnostics;
  CHECK(d.max_hamiltonian_drift < 1e-10);
  for (double b : d.max_bilinear_drift) CHECK(b < 1e-10);
  CHECK(d.max_angular_momentum_drift < 1e-9);
  CHECK(can.samples.size() == 11);
  for (std::size_t k = 1; k < can.samples.size(); ++k) CHECK(can.samples[k].t > can.samples[k - 1].t);

  const GramPair g0 = extract_invariants(st.pairs);
  const auto red = reduced_flow(g0.hermitian(), st.params, s_end, ds, {1e-4, 100});
  REQUIRE(red.samples.size() == can.samples.size());
  for (std::size_t k = 0; k < red.samples.size(); ++k) {
    const MatrixXcd Mc = extract_invariants(can.samples[k].state.pairs).hermitian();
    CHECK((red.samples[k].M - Mc).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(red.samples[k].t == doctest::Approx(can.samples[k].t).epsilon(1e-8));
  }
  for (double e : red.max_casimir_drift) CHECK(e < 1e-9);
  CHECK(red.max_trace_residual < 1e-12);
  CHECK(red.max_hermitian_residual < 1e-12);

  const InvariantBasis basis(3);
  const auto str = structure_flow(basis.coordinates(g0), StructureTensor(basis), st.params, s_end, ds, 100);
  REQUIRE(str.size() == can.samples.size());
  CHECK((basis.gram_from_coordinates(str.back().x).hermitian() - red.samples.back().M).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("flow guards and argument checks") {
  Rng rng(41);
  const RegState st = ingest(triangle_bodies(rng));
  std::size_t seen = 0;
  CHECK_THROWS_AS(canonical_flow(st, 10.0, 0.5, {1e-12, 1}, [&](const CanonicalSample&) { ++seen; }), StepTooLarge);
  CHECK(seen >= 2);
  try {
    canonical_flow(st, 10.0, 0.5, {1e-12, 1});
  } catch (const StepTooLarge& e) {
    CHECK(e.s() == doctest::Approx(0.5));
    CHECK(e.drift() > 1e-12);
  }
  CHECK_THROWS_AS(canonical_flow(st, 1.0, -1.0), std::invalid_argument);
  const MatrixXcd M0 = extract_invariants(st.pairs).hermitian();
  CHECK_THROWS_AS(reduced_flow(M0, st.params, 10.0, 0.5, {1e-14, 1}), StepTooLarge);
  CHECK_THROWS_AS(reduced_flow(MatrixXcd::Zero(4, 4), st.params, 1.0, 0.1), DimensionMismatch);
}

TEST_CASE("characteristic coefficients on physical states") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    RegState st = ingest(triangle_bodies(rng, 0.3));
    const GramPair g = extract_invariants(st.pairs);
    const auto e = casimirs(j6() * g.hermitian());
    const double L2 = total_angular_momentum(st).squaredNorm();
    // rank 2: only e_1 and e_2 survive
    for (int k = 2; k < 6; ++k) CHECK(std::abs(e[k]) < 1e-10 * std::pow(1 + g.hermitian().norm(), k + 1));
    CHECK(std::abs(e[0]) < 1e-13);
    CHECK(std::abs(e[1] - 4.0 * L2) < 1e-10 * (1 + L2));

    // with nonzero c_ii: e_2 = 4 |L|^2 - (sum c_ii)^2 and Tr L = -2i sum c_ii
    for (int a = 0; a < 3; ++a) {
      st.pairs[a].P = st.pairs[a].P + uniform(rng, -0.5, 0.5) * Quaternion::from_vector(k_matrix() * st.pairs[a].Q.vector());
    }
    const GramPair g2 = extract_invariants(st.pairs);
    const auto e2 = casimirs(j6() * g2.hermitian());
    double tau = 0.0;
    for (int a = 0; a < 3; ++a) tau += g2.Omega(a, 3 + a);
    const double L2b = total_angular_momentum(st).squaredNorm();
    CHECK(std::abs(e2[1] - (4.0 * L2b - tau * tau)) < 1e-10 * (1 + L2b + tau * tau));
    CHECK(std::abs(e2[0] - std::complex<double>(0.0, -2.0 * tau)) < 1e-12);
  }
}
