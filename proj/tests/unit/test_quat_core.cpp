#include <doctest.h>

#include <ksred/errors.hpp>
#include <ksred/quat_core.hpp>

#include "test_support.hpp"

using namespace ksred;
using namespace ksred::testing;

TEST_CASE("hamilton product matches the left-multiplication matrix") {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const Quaternion a = normal_quat(rng), b = normal_quat(rng);
    CHECK((qmul(a, b).vector() - product_oracle(a, b).vector()).norm() < 1e-14 * (1.0 + a.norm2() * b.norm2()));
  }
  static_assert(Quaternion::i() * Quaternion::j() == Quaternion::k());
  static_assert(Quaternion::j() * Quaternion::k() == Quaternion::i());
  static_assert(Quaternion::k() * Quaternion::k() == Quaternion(-1, 0, 0, 0));
}

TEST_CASE("involutions") {
  const Quaternion q{1, 2, 3, 4};
  CHECK(star(q) == Quaternion(1, 2, 3, -4));
  CHECK(bar(q) == Quaternion(1, -2, -3, -4));
  CHECK(star(star(q)) == q);
  Rng rng(2);
  const Quaternion a = normal_quat(rng), b = normal_quat(rng);
  // both are anti-automorphisms
  CHECK((bar(a * b) - bar(b) * bar(a)).norm2() < 1e-28);
  CHECK((star(a * b) - star(b) * star(a)).norm2() < 1e-28);
}

TEST_CASE("ks_pos of the basis quaternions") {
  CHECK(ks_pos(Quaternion::one()).isApprox(Vec3(1, 0, 0)));
  CHECK(ks_pos(Quaternion::i()).isApprox(Vec3(-1, 0, 0)));
  CHECK(ks_pos(Quaternion::j()).isApprox(Vec3(-1, 0, 0)));
  CHECK(ks_pos(Quaternion::k()).isApprox(Vec3(1, 0, 0)));
  // Q * star(Q) has no k-part
  Rng rng(3);
  const Quaternion Q = normal_quat(rng);
  CHECK(std::abs((Q * star(Q)).z) < 1e-15);
}

TEST_CASE("bilinear is the k-part of Q * star(P)") {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const Quaternion Q = normal_quat(rng), P = normal_quat(rng);
    CHECK(bilinear(Q, P) == doctest::Approx((Q * star(P)).z).epsilon(1e-13));
    CHECK(bilinear(Q, P) == doctest::Approx(Q.vector().dot(k_matrix() * P.vector())).epsilon(1e-13));
  }
  CHECK((k_matrix() * k_matrix() + Mat4::Identity()).norm() == 0.0);
  CHECK((k_matrix().transpose() + k_matrix()).norm() == 0.0);
}

TEST_CASE("ks_lift on the axes") {
  SUBCASE("positive axis lands in chart A") {
    const PairState s = ks_lift(Vec3(1, 0, 0), Vec3(0, 1, 0));
    CHECK(s.Q == Quaternion(1, 0, 0, 0));
    CHECK(ks_mom(s.Q, s.P).isApprox(Vec3(0, 1, 0)));
  }
  SUBCASE("negative axis uses the second chart") {
    const PairState s = ks_lift(Vec3(-1, 0, 0), Vec3(0, 0, 0));
    CHECK(s.Q == Quaternion(0, 1, 0, 0));
    CHECK(ks_pos(s.Q).isApprox(Vec3(-1, 0, 0)));
  }
  CHECK_THROWS_AS(ks_lift(Vec3::Zero(), Vec3(1, 0, 0)), CollisionPoint);
  CHECK_THROWS_AS(ks_mom(Quaternion{}, Quaternion::one()), CollisionPoint);
}

TEST_CASE("ks_lift round trip and constraint") {
  Rng rng(5);
  for (int k = 0; k < 500; ++k) {
    const Vec3 q = log_uniform_vector(rng, 0.01, 10.0), p = normal3(rng);
    const PairState s = ks_lift(q, p);
    CHECK((ks_pos(s.Q) - q).norm() <= 1e-14 * q.norm());
    CHECK((ks_mom(s.Q, s.P) - p).norm() <= 1e-14 * p.norm());
    CHECK(std::abs(bilinear(s.Q, s.P)) <= 4.0 * 2.3e-16 * std::sqrt(s.Q.norm2() * s.P.norm2()));
    // |P|^2 = 4 R |p|^2 on the constraint
    CHECK(s.P.norm2() == doctest::Approx(4.0 * q.norm() * p.squaredNorm()).epsilon(1e-13));
  }
}

TEST_CASE("second momentum formula differs from Q * star(P) / (2|Q|^2)") {
  // 1/2 star(P) * bar(Q)^{-1} disagrees in sign at Q = i, p = (0, 0, 1)
  const PairState s = ks_lift(ks_pos(Quaternion::i()), Vec3(0, 0, 1));
  CHECK(s.Q == Quaternion::i());
  const Quaternion barQ_inv = Quaternion::i();  // bar(i)^{-1} = i
  const Quaternion alt = 0.5 * (star(s.P) * barQ_inv);
  CHECK(im3(alt).isApprox(Vec3(0, 0, -1)));
  CHECK(ks_mom(s.Q, s.P).isApprox(Vec3(0, 0, 1)));
}

TEST_CASE("momentum map") {
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const Vec3 q = normal3(rng), p = normal3(rng);
    const PairState s = ks_lift(q, p);
    const MomentumMap mm = momentum_map(s.Q, s.P);
    CHECK((mm.L - q.cross(p)).norm() < 1e-13);
    CHECK(std::abs(mm.L_tau) < 1e-13);
  }
}

TEST_CASE("isoclinic generators") {
  Rng rng(7);
  const Vec3 a = normal3(rng), b = normal3(rng);
  const Mat4 A = isoclinic(a);
  CHECK((A * k_matrix() - k_matrix() * A).norm() < 1e-14);
  CHECK((A * A + a.squaredNorm() * Mat4::Identity()).norm() < 1e-13);
  CHECK((A * isoclinic(b) - isoclinic(b) * A - 2.0 * isoclinic(a.cross(b))).norm() < 1e-13);
  CHECK((hat(a) * b - a.cross(b)).norm() < 1e-15);
}

TEST_CASE("group element and equivariance") {
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const Vec3 a = normal3(rng);
    const double tau = uniform(rng, -3.0, 3.0);
    const GroupElement g = group_element(a, tau);

    Eigen::MatrixXd gen(4, 4);
    gen = isoclinic(a);
    Eigen::MatrixXd kt = tau * k_matrix();
    const Eigen::MatrixXd S_ref = expm_series(gen) * expm_series(kt);
    CHECK((g.S - S_ref).norm() < 1e-12);
    CHECK((g.S.transpose() * g.S - Mat4::Identity()).norm() < 1e-13);

    const Eigen::MatrixXd R_ref = expm_series(Eigen::MatrixXd(2.0 * hat(a)));
    CHECK((g.rotation() - R_ref).norm() < 1e-12);

    const Quaternion Q = normal_quat(rng), P = normal_quat(rng);
    const Quaternion SQ = transform(g.S, Q), SP = transform(g.S, P);
    CHECK((ks_pos(SQ) - g.rotation() * ks_pos(Q)).norm() < 1e-12 * Q.norm2());
    CHECK((ks_mom(SQ, SP) - g.rotation() * ks_mom(Q, P)).norm() < 1e-12 * (1.0 + P.norm2()));
    CHECK(bilinear(SQ, SP) == doctest::Approx(bilinear(Q, P)).epsilon(1e-12));
  }
  const GroupElement id = group_element(Vec3::Zero(), 0.0);
  CHECK((id.S - Mat4::Identity()).norm() == 0.0);
  CHECK((id.rotation() - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("apply_action acts diagonally") {
  Rng rng(9);
  std::vector<PairState> pairs(3);
  for (auto& p : pairs) p = {normal_quat(rng), normal_quat(rng)};
  const GroupElement g = group_element(normal3(rng), 0.7);
  const auto moved = apply_action(g, pairs);
  REQUIRE(moved.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK((moved[k].Q.vector() - g.S * pairs[k].Q.vector()).norm() < 1e-15 * (1 + pairs[k].Q.norm2()) + 1e-15);
    CHECK(moved[k].Q.dot(moved[k].P) == doctest::Approx(pairs[k].Q.dot(pairs[k].P)).epsilon(1e-12));
  }
}
