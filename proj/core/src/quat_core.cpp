#include "ksred/quat_core.hpp"

#include <cmath>

#include "ksred/errors.hpp"

namespace ksred {

const Mat4& k_matrix() {
  static const Mat4 K = [] {
    Mat4 m;
    m << 0, 0, 0, -1,
         0, 0, 1, 0,
         0, -1, 0, 0,
         1, 0, 0, 0;
    return m;
  }();
  return K;
}

Vec3 ks_pos(const Quaternion& Q) { return im3(Q * star(Q)); }

Vec3 ks_mom(const Quaternion& Q, const Quaternion& P) {
  const double r = Q.norm2();
  if (r == 0.0) {
    throw CollisionPoint("ks_mom: Q is the zero quaternion");
  }
  return im3(Q * star(P)) / (2.0 * r);
}

PairState ks_lift(const Vec3& q, const Vec3& p) {
  const double r = q.norm();
  if (r == 0.0) {
    throw CollisionPoint("ks_lift: q is the zero vector");
  }
  Quaternion Q;
  if (q[0] >= 0.0) {
    const double w = std::sqrt(0.5 * (r + q[0]));
    Q = {w, q[1] / (2.0 * w), q[2] / (2.0 * w), 0.0};
  } else {
    const double x = std::sqrt(0.5 * (r - q[0]));
    Q = {q[1] / (2.0 * x), x, 0.0, q[2] / (2.0 * x)};
  }
  const Quaternion P = star(2.0 * (bar(Q) * embed(p)));
  return {Q, P};
}

MomentumMap momentum_map(const Quaternion& Q, const Quaternion& P) {
  const Quaternion l = 0.5 * (Q * bar(P) * Quaternion::k());
  return {im3(l), bilinear(Q, P)};
}

Mat3 hat(const Vec3& a) {
  Mat3 m;
  m << 0, -a[2], a[1],
       a[2], 0, -a[0],
       -a[1], a[0], 0;
  return m;
}

Mat4 isoclinic(const Vec3& a) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat(a);
  m.topRightCorner<3, 1>() = -a;
  m.bottomLeftCorner<1, 3>() = a.transpose();
  return m;
}

namespace {

// sin(x)/x without cancellation near zero
double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

}  // namespace

Mat3 GroupElement::rotation() const {
  const double angle = 2.0 * a.norm();
  const Mat3 A = hat(a);
  // exp(2 hat(a)) by Rodrigues; (1 - cos t)/t^2 written as sinc(t/2)^2 / 2
  const double half = sinc(0.5 * angle);
  return Mat3::Identity() + 2.0 * sinc(angle) * A + 2.0 * half * half * A * A;
}

GroupElement group_element(const Vec3& a, double tau) {
  const double omega = a.norm();
  const Mat4 left = std::cos(omega) * Mat4::Identity() + sinc(omega) * isoclinic(a);
  const Mat4 right = std::cos(tau) * Mat4::Identity() + std::sin(tau) * k_matrix();
  return {left * right, a, tau};
}

std::vector<PairState> apply_action(const GroupElement& g, std::span<const PairState> state) {
  std::vector<PairState> out;
  out.reserve(state.size());
  for (const auto& pair : state) {
    out.push_back({transform(g.S, pair.Q), transform(g.S, pair.P)});
  }
  return out;
}

}  // namespace ksred
