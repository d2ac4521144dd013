#pragma once

// Quaternion arithmetic and the Kustaanheimo-Stiefel (KS) squaring map.
//
// Quaternions are written Q = w + i x + j y + k z. The KS map sends Q to the
// k-free quaternion Q * star(Q), whose (real, i, j) parts are identified with
// a vector in R^3. The symmetry group G = SU(2) x SO(2) acts on R^4 by
// S = exp(Isoc(a)) exp(K tau); it projects to the rotation exp(2 hat(a)) of R^3.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>
#include <vector>

namespace ksred {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct Quaternion {
  double w{0.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr Quaternion() = default;
  constexpr Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static constexpr Quaternion one() { return {1.0, 0.0, 0.0, 0.0}; }
  static constexpr Quaternion i() { return {0.0, 1.0, 0.0, 0.0}; }
  static constexpr Quaternion j() { return {0.0, 0.0, 1.0, 0.0}; }
  static constexpr Quaternion k() { return {0.0, 0.0, 0.0, 1.0}; }

  static Quaternion from_vector(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
  Vec4 vector() const { return {w, x, y, z}; }

  /// w^2 + x^2 + y^2 + z^2
  constexpr double norm2() const { return w * w + x * x + y * y + z * z; }
  constexpr double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

  constexpr Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  constexpr Quaternion operator-(const Quaternion& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
  constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }
  constexpr Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
  friend constexpr Quaternion operator*(double s, const Quaternion& q) { return q * s; }
  constexpr bool operator==(const Quaternion&) const = default;
};

/// Hamilton product a * b.
constexpr Quaternion qmul(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) { return qmul(a, b); }

enum class Involution { star, bar };

/// star flips the k-component; bar is quaternionic conjugation.
constexpr Quaternion involute(const Quaternion& q, Involution kind) {
  return kind == Involution::star ? Quaternion{q.w, q.x, q.y, -q.z} : Quaternion{q.w, -q.x, -q.y, -q.z};
}
constexpr Quaternion star(const Quaternion& q) { return involute(q, Involution::star); }
constexpr Quaternion bar(const Quaternion& q) { return involute(q, Involution::bar); }

/// (real, i, j) parts of a quaternion; the Im map used throughout.
inline Vec3 im3(const Quaternion& q) { return {q.w, q.x, q.y}; }
/// Embeds a 3-vector as the k-free quaternion (v0, v1, v2, 0).
inline Quaternion embed(const Vec3& v) { return {v[0], v[1], v[2], 0.0}; }

/// The antisymmetric matrix K of the bilinear relation; K^T = -K, K^2 = -I.
const Mat4& k_matrix();

/// q = Q * star(Q), returned as its (real, i, j) parts. |q| = norm2(Q).
Vec3 ks_pos(const Quaternion& Q);

/// p = Q * star(P) / (2 norm2(Q)), (real, i, j) parts.
/// Throws CollisionPoint if Q = 0.
Vec3 ks_mom(const Quaternion& Q, const Quaternion& P);

/// Q^T K P. Equals the k-component of Q * star(P).
constexpr double bilinear(const Quaternion& Q, const Quaternion& P) {
  return -Q.w * P.z + Q.x * P.y - Q.y * P.x + Q.z * P.w;
}

struct PairState {
  Quaternion Q;
  Quaternion P;
};

/// Inverse of (ks_pos, ks_mom) on the bilinear constraint.
///
/// Gauge: for q0 >= 0 the k-component of Q is zero and Q.w > 0; otherwise the
/// j-component is zero and Q.x > 0. Both charts are well conditioned on their
/// half-space. The momentum is P = star(2 bar(Q) * p), which makes Q^T K P = 0.
/// Throws CollisionPoint if q = 0.
PairState ks_lift(const Vec3& q, const Vec3& p);

struct MomentumMap {
  Vec3 L;        ///< Im(1/2 Q * bar(P) * k)
  double L_tau;  ///< Q^T K P
};

/// Momentum map of the G-action. On the bilinear constraint L = q x p.
MomentumMap momentum_map(const Quaternion& Q, const Quaternion& P);

/// Hat map R^3 -> so(3).
Mat3 hat(const Vec3& a);

/// Left-isoclinic generator Isoc(hat(a)) = [[hat(a), -a], [a^T, 0]].
Mat4 isoclinic(const Vec3& a);

struct GroupElement {
  Mat4 S;
  Vec3 a;
  double tau;

  /// The SO(3) rotation that S projects to under the KS map: exp(2 hat(a)).
  Mat3 rotation() const;
};

/// S = exp(Isoc(hat(a))) exp(K tau) via the closed forms
/// cos|a| I + sin|a|/|a| Isoc(hat(a)) and cos(tau) I + sin(tau) K.
GroupElement group_element(const Vec3& a, double tau);

inline Quaternion transform(const Mat4& S, const Quaternion& q) { return Quaternion::from_vector(S * q.vector()); }

/// Diagonal action (Q_i, P_i) -> (S Q_i, S P_i) on every pair.
std::vector<PairState> apply_action(const GroupElement& g, std::span<const PairState> state);

}  // namespace ksred
