#pragma once

// Quadratic invariants of m KS pairs and their Lie algebra.
//
// Order the phase-space vectors as (Q_1..Q_m, P_1..P_m) and index them with
// u, v in [0, 2m). The raw invariants are the Gram matrix G(u,v) = U.V and the
// K-product matrix Omega(u,v) = U^T K V. A real 2m x 2m matrix W labels the
// invariant
//
//     phi_W(X) = 1/2 X^T ([W]_sym (x) I4 + [W]_skew (x) K) X
//              = 1/2 <[W]_sym, G> + 1/2 <[W]_skew, Omega>,
//
// and canonical Poisson brackets act as {phi_A, phi_B} = phi_[A,B]_m. The map
// h(W) = J (W_sym + i W_skew) is a Lie algebra isomorphism onto u(m,m).
//
// The normalised basis (4m^2 elements) is, in order:
//   alpha (Q.Q): diagonals then i<j;  beta (P.P): same;  gamma_ij = Q_i.P_j;
//   a_ij = Q_i^T K Q_j (i<j);  b_ij = P_i^T K P_j (i<j);  c_ij = Q_i^T K P_j.
// Diagonal alpha/beta carry the factor 1/sqrt(2). Every basis matrix W_k has
// |W_k|_F^2 = 2, i.e. unit norm for <A,B> = Tr(A^dagger B)/2 on u(m,m).

#include <Eigen/Core>
#include <Eigen/QR>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "ksred/quat_core.hpp"

namespace ksred {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GramPair {
  int m{0};
  MatrixXd G;      ///< symmetric, raw dot products
  MatrixXd Omega;  ///< antisymmetric, raw K-products

  /// M = G + i Omega.
  MatrixXcd hermitian() const;
  static GramPair from_hermitian(const MatrixXcd& M);
};

GramPair extract_invariants(std::span<const PairState> state);

/// J_{2m} = ((0, I_m), (-I_m, 0)).
MatrixXd j_matrix(int m);

MatrixXd sym_part(const MatrixXd& W);
MatrixXd skew_part(const MatrixXd& W);

/// [A, B]_m = 2 [A~ J B~ - A^ J B^]_sym + 2 [A^ J B~ + A~ J B^]_skew, with ~ and
/// ^ the symmetric and antisymmetric parts. Throws DimensionMismatch.
MatrixXd bracket_m(const MatrixXd& A, const MatrixXd& B);

/// The 8m x 8m symmetric matrix of phi_W.
MatrixXd invariant_form(const MatrixXd& W);

/// Exact canonical Poisson bracket of X^T Mq X and X^T Nq X, returned as the
/// symmetric matrix of the resulting quadratic form: 2 (Mq J Nq - Nq J Mq) with
/// J = J_{2m} (x) I4. Throws DimensionMismatch on shape errors.
MatrixXd canonical_quadratic_bracket(const MatrixXd& Mq, const MatrixXd& Nq);

/// h(A) = J_{2m} (A_sym + i A_skew).
MatrixXcd to_u(const MatrixXd& A);

/// |(H Z)^dagger + H Z|_F with H = i J_{2m}; zero iff Z is in u(m,m).
double u_membership_residual(const MatrixXcd& Z);

enum class InvariantKind { alpha, beta, gamma, a, b, c };

struct BasisElement {
  InvariantKind kind;
  int i;  ///< 0-based pair index
  int j;
  int u;  ///< row in the 2m ordering
  int v;  ///< column, u <= v (u < v for the K-type)
  bool symmetric;
  MatrixXd W;

  std::string label() const;  ///< e.g. "alpha_1_1", 1-based
};

class InvariantBasis {
 public:
  explicit InvariantBasis(int m);

  int m() const noexcept { return m_; }
  std::size_t size() const noexcept { return elements_.size(); }
  const BasisElement& operator[](std::size_t k) const { return elements_[k]; }
  const std::vector<BasisElement>& elements() const noexcept { return elements_; }

  /// Throws IndexError if no such element.
  std::size_t index_of(InvariantKind kind, int i, int j) const;

  /// Normalised coordinates x_k = phi_{W_k}.
  VectorXd coordinates(const GramPair& g) const;
  /// Raw values (no 1/sqrt2 on the diagonals), same order.
  VectorXd raw_values(const GramPair& g) const;
  GramPair gram_from_coordinates(const VectorXd& x) const;

  /// Expansion of an arbitrary W in the basis (exact: the basis spans Mat(2m)).
  VectorXd expand(const MatrixXd& W) const;

  /// Number of G-type (alpha, beta, gamma) elements: m(2m+1).
  std::size_t symmetric_count() const noexcept { return sym_count_; }

 private:
  int m_;
  std::size_t sym_count_;
  std::vector<BasisElement> elements_;
};

/// Sparse structure constants: {x_i, x_j} = sum_k c(k,i,j) x_k.
class StructureTensor {
 public:
  struct Term {
    int index;
    double coeff;
  };

  explicit StructureTensor(const InvariantBasis& basis);

  int m() const noexcept { return m_; }
  std::size_t dimension() const noexcept { return n_; }
  double coefficient(std::size_t k, std::size_t i, std::size_t j) const;
  const std::vector<Term>& bracket(std::size_t i, std::size_t j) const { return table_[i * n_ + j]; }

  /// B(i,j) = {x_i, x_j}.
  MatrixXd poisson_matrix(const VectorXd& x) const;
  /// x_k' = sum_j {x_k, x_j} dH/dx_j.
  VectorXd lie_poisson_rhs(const VectorXd& x, const VectorXd& grad) const;

  double antisymmetry_residual() const;
  /// max over i<j<l and k of |cyclic sum of c c|.
  double jacobi_residual() const;
  /// Largest residual of expanding [W_i, W_j]_m in the basis.
  double expansion_residual() const noexcept { return expansion_residual_; }

 private:
  int m_;
  std::size_t n_;
  std::vector<std::vector<Term>> table_;
  double expansion_residual_ = 0.0;
};

StructureTensor structure_tensor(int m);

/// Signed characteristic coefficients e_1..e_n of L, defined by
/// det(lambda I - L) = sum_k (-1)^k e_k lambda^(n-k). e_1 = Tr L, e_n = det L.
std::vector<std::complex<double>> casimirs(const MatrixXcd& L);

struct SpanDecomposition {
  VectorXd coefficients;
  double residual;  ///< |form - sum_k c_k F_k|_F
};

/// Least-squares expansion of an 8m x 8m form over the 4m^2 invariant forms.
class SpanCertifier {
 public:
  explicit SpanCertifier(int m);
  SpanDecomposition decompose(const MatrixXd& form) const;
  const InvariantBasis& basis() const noexcept { return basis_; }

 private:
  InvariantBasis basis_;
  MatrixXd columns_;
  Eigen::ColPivHouseholderQR<MatrixXd> qr_;
};

SpanDecomposition decompose_in_span(const MatrixXd& form, int m);

}  // namespace ksred
