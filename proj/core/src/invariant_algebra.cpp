#include "ksred/invariant_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ksred/errors.hpp"

namespace ksred {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
// Entries of [W_i, W_j]_m are sums of products of 0, +-1 and +-sqrt2; anything
// smaller than this is round-off.
constexpr double kZeroCoeff = 1e-13;

void require_square_even(const MatrixXd& A, const char* where) {
  if (A.rows() != A.cols() || A.rows() == 0 || A.rows() % 2 != 0) {
    throw DimensionMismatch(std::string(where) + ": expected a non-empty 2m x 2m matrix");
  }
}

Vec4 component(std::span<const PairState> state, int u) {
  const int m = static_cast<int>(state.size());
  return u < m ? state[u].Q.vector() : state[u - m].P.vector();
}

// Kronecker product A (x) B for a 4x4 B.
MatrixXd kron4(const MatrixXd& A, const Mat4& B) {
  MatrixXd out(A.rows() * 4, A.cols() * 4);
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      out.block<4, 4>(4 * r, 4 * c) = A(r, c) * B;
    }
  }
  return out;
}

const char* kind_name(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::alpha: return "alpha";
    case InvariantKind::beta: return "beta";
    case InvariantKind::gamma: return "gamma";
    case InvariantKind::a: return "a";
    case InvariantKind::b: return "b";
    case InvariantKind::c: return "c";
  }
  return "?";
}

}  // namespace

MatrixXcd GramPair::hermitian() const {
  MatrixXcd M(G.rows(), G.cols());
  M.real() = G;
  M.imag() = Omega;
  return M;
}

GramPair GramPair::from_hermitian(const MatrixXcd& M) {
  if (M.rows() != M.cols() || M.rows() % 2 != 0) {
    throw DimensionMismatch("GramPair::from_hermitian: expected a 2m x 2m matrix");
  }
  return {static_cast<int>(M.rows() / 2), M.real(), M.imag()};
}

GramPair extract_invariants(std::span<const PairState> state) {
  const int m = static_cast<int>(state.size());
  const Mat4& K = k_matrix();
  GramPair g{m, MatrixXd::Zero(2 * m, 2 * m), MatrixXd::Zero(2 * m, 2 * m)};
  for (int u = 0; u < 2 * m; ++u) {
    const Vec4 U = component(state, u);
    for (int v = u; v < 2 * m; ++v) {
      const Vec4 V = component(state, v);
      g.G(u, v) = g.G(v, u) = U.dot(V);
      if (v != u) {
        g.Omega(u, v) = U.dot(K * V);
        g.Omega(v, u) = -g.Omega(u, v);
      }
    }
  }
  return g;
}

MatrixXd j_matrix(int m) {
  MatrixXd J = MatrixXd::Zero(2 * m, 2 * m);
  J.topRightCorner(m, m).setIdentity();
  J.bottomLeftCorner(m, m) = -MatrixXd::Identity(m, m);
  return J;
}

MatrixXd sym_part(const MatrixXd& W) { return 0.5 * (W + W.transpose()); }
MatrixXd skew_part(const MatrixXd& W) { return 0.5 * (W - W.transpose()); }

MatrixXd bracket_m(const MatrixXd& A, const MatrixXd& B) {
  require_square_even(A, "bracket_m");
  require_square_even(B, "bracket_m");
  if (A.rows() != B.rows()) {
    throw DimensionMismatch("bracket_m: operands have different m");
  }
  const MatrixXd J = j_matrix(static_cast<int>(A.rows() / 2));
  const MatrixXd As = sym_part(A), Ak = skew_part(A);
  const MatrixXd Bs = sym_part(B), Bk = skew_part(B);
  return 2.0 * sym_part(As * J * Bs - Ak * J * Bk) + 2.0 * skew_part(Ak * J * Bs + As * J * Bk);
}

MatrixXd invariant_form(const MatrixXd& W) {
  require_square_even(W, "invariant_form");
  return 0.5 * (kron4(sym_part(W), Mat4::Identity()) + kron4(skew_part(W), k_matrix()));
}

MatrixXd canonical_quadratic_bracket(const MatrixXd& Mq, const MatrixXd& Nq) {
  if (Mq.rows() != Mq.cols() || Nq.rows() != Nq.cols() || Mq.rows() != Nq.rows() || Mq.rows() % 8 != 0 ||
      Mq.rows() == 0) {
    throw DimensionMismatch("canonical_quadratic_bracket: expected two 8m x 8m matrices");
  }
  const MatrixXd J = kron4(j_matrix(static_cast<int>(Mq.rows() / 8)), Mat4::Identity());
  return 2.0 * (Mq * J * Nq - Nq * J * Mq);
}

MatrixXcd to_u(const MatrixXd& A) {
  require_square_even(A, "to_u");
  MatrixXcd Z(A.rows(), A.cols());
  Z.real() = sym_part(A);
  Z.imag() = skew_part(A);
  return j_matrix(static_cast<int>(A.rows() / 2)).cast<std::complex<double>>() * Z;
}

double u_membership_residual(const MatrixXcd& Z) {
  const MatrixXcd H = std::complex<double>(0.0, 1.0) * j_matrix(static_cast<int>(Z.rows() / 2)).cast<std::complex<double>>();
  const MatrixXcd HZ = H * Z;
  return (HZ.adjoint() + HZ).norm();
}

std::string BasisElement::label() const {
  return std::string(kind_name(kind)) + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

InvariantBasis::InvariantBasis(int m) : m_(m), sym_count_(0) {
  if (m < 1) {
    throw std::invalid_argument("InvariantBasis: m must be at least 1");
  }
  const int n = 2 * m;
  const auto add = [&](InvariantKind kind, int i, int j, int u, int v, bool symmetric) {
    MatrixXd W = MatrixXd::Zero(n, n);
    if (symmetric && u == v) {
      W(u, u) = kSqrt2;
    } else if (symmetric) {
      W(u, v) = W(v, u) = 1.0;
    } else {
      W(u, v) = 1.0;
      W(v, u) = -1.0;
    }
    elements_.push_back({kind, i, j, u, v, symmetric, std::move(W)});
  };
  // Q.Q and P.P blocks: diagonals first, then i < j
  const auto add_block = [&](InvariantKind kind, int offset, bool symmetric) {
    if (symmetric) {
      for (int i = 0; i < m; ++i) add(kind, i, i, offset + i, offset + i, true);
    }
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) add(kind, i, j, offset + i, offset + j, symmetric);
    }
  };
  add_block(InvariantKind::alpha, 0, true);
  add_block(InvariantKind::beta, m, true);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) add(InvariantKind::gamma, i, j, i, m + j, true);
  }
  sym_count_ = elements_.size();
  add_block(InvariantKind::a, 0, false);
  add_block(InvariantKind::b, m, false);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) add(InvariantKind::c, i, j, i, m + j, false);
  }
}

std::size_t InvariantBasis::index_of(InvariantKind kind, int i, int j) const {
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const auto& e = elements_[k];
    if (e.kind == kind && e.i == i && e.j == j) return k;
  }
  throw IndexError("InvariantBasis::index_of: no element " + std::string(kind_name(kind)) + "_" +
                   std::to_string(i + 1) + "_" + std::to_string(j + 1));
}

VectorXd InvariantBasis::coordinates(const GramPair& g) const {
  VectorXd x(size());
  for (std::size_t k = 0; k < size(); ++k) {
    const auto& e = elements_[k];
    if (!e.symmetric) {
      x[k] = g.Omega(e.u, e.v);
    } else {
      x[k] = e.u == e.v ? g.G(e.u, e.u) / kSqrt2 : g.G(e.u, e.v);
    }
  }
  return x;
}

VectorXd InvariantBasis::raw_values(const GramPair& g) const {
  VectorXd x(size());
  for (std::size_t k = 0; k < size(); ++k) {
    const auto& e = elements_[k];
    x[k] = e.symmetric ? g.G(e.u, e.v) : g.Omega(e.u, e.v);
  }
  return x;
}

GramPair InvariantBasis::gram_from_coordinates(const VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != size()) {
    throw DimensionMismatch("gram_from_coordinates: wrong coordinate count");
  }
  const int n = 2 * m_;
  GramPair g{m_, MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  for (std::size_t k = 0; k < size(); ++k) {
    const auto& e = elements_[k];
    if (!e.symmetric) {
      g.Omega(e.u, e.v) = x[k];
      g.Omega(e.v, e.u) = -x[k];
    } else if (e.u == e.v) {
      g.G(e.u, e.u) = kSqrt2 * x[k];
    } else {
      g.G(e.u, e.v) = g.G(e.v, e.u) = x[k];
    }
  }
  return g;
}

VectorXd InvariantBasis::expand(const MatrixXd& W) const {
  if (W.rows() != 2 * m_ || W.cols() != 2 * m_) {
    throw DimensionMismatch("InvariantBasis::expand: wrong matrix size");
  }
  // The basis is orthogonal in the Frobenius product with |W_k|^2 = 2.
  VectorXd c(size());
  for (std::size_t k = 0; k < size(); ++k) {
    c[k] = 0.5 * elements_[k].W.cwiseProduct(W).sum();
  }
  return c;
}

StructureTensor::StructureTensor(const InvariantBasis& basis)
    : m_(basis.m()), n_(basis.size()), table_(basis.size() * basis.size()) {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      const MatrixXd V = bracket_m(basis[i].W, basis[j].W);
      const VectorXd c = basis.expand(V);
      MatrixXd rebuilt = MatrixXd::Zero(V.rows(), V.cols());
      for (std::size_t k = 0; k < n_; ++k) {
        if (std::abs(c[k]) > kZeroCoeff) {
          table_[i * n_ + j].push_back({static_cast<int>(k), c[k]});
          table_[j * n_ + i].push_back({static_cast<int>(k), -c[k]});
          rebuilt += c[k] * basis[k].W;
        }
      }
      expansion_residual_ = std::max(expansion_residual_, (rebuilt - V).norm());
    }
  }
}

double StructureTensor::coefficient(std::size_t k, std::size_t i, std::size_t j) const {
  for (const auto& t : bracket(i, j)) {
    if (static_cast<std::size_t>(t.index) == k) return t.coeff;
  }
  return 0.0;
}

MatrixXd StructureTensor::poisson_matrix(const VectorXd& x) const {
  MatrixXd B = MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      double s = 0.0;
      for (const auto& t : bracket(i, j)) s += t.coeff * x[t.index];
      B(i, j) = s;
    }
  }
  return B;
}

VectorXd StructureTensor::lie_poisson_rhs(const VectorXd& x, const VectorXd& grad) const {
  VectorXd dx = VectorXd::Zero(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const auto& terms = bracket(k, j);
      if (terms.empty() || grad[j] == 0.0) continue;
      double bkj = 0.0;
      for (const auto& t : terms) bkj += t.coeff * x[t.index];
      s += bkj * grad[j];
    }
    dx[k] = s;
  }
  return dx;
}

double StructureTensor::antisymmetry_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      for (const auto& t : bracket(i, j)) {
        worst = std::max(worst, std::abs(t.coeff + coefficient(t.index, j, i)));
      }
    }
  }
  return worst;
}

double StructureTensor::jacobi_residual() const {
  // {{x_i, x_j}, x_l} + {{x_j, x_l}, x_i} + {{x_l, x_i}, x_j} expanded in the basis
  std::vector<double> acc(n_, 0.0);
  std::vector<int> touched;
  touched.reserve(64);
  const auto nested = [&](std::size_t a, std::size_t b, std::size_t c) {
    for (const auto& t : bracket(a, b)) {
      for (const auto& u : bracket(static_cast<std::size_t>(t.index), c)) {
        if (acc[u.index] == 0.0) touched.push_back(u.index);
        acc[u.index] += t.coeff * u.coeff;
      }
    }
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      for (std::size_t l = j + 1; l < n_; ++l) {
        nested(i, j, l);
        nested(j, l, i);
        nested(l, i, j);
        for (int k : touched) {
          worst = std::max(worst, std::abs(acc[k]));
          acc[k] = 0.0;
        }
        touched.clear();
      }
    }
  }
  return worst;
}

StructureTensor structure_tensor(int m) { return StructureTensor(InvariantBasis(m)); }

std::vector<std::complex<double>> casimirs(const MatrixXcd& L) {
  using C = std::complex<double>;
  if (L.rows() != L.cols()) {
    throw DimensionMismatch("casimirs: L must be square");
  }
  const Eigen::Index n = L.rows();
  // Faddeev-LeVerrier: p(lambda) = sum_j c_j lambda^j, c_n = 1
  std::vector<C> c(n + 1, C(0.0));
  c[n] = 1.0;
  MatrixXcd Mk = MatrixXcd::Zero(n, n);
  const MatrixXcd I = MatrixXcd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    Mk = L * Mk + c[n - k + 1] * I;
    c[n - k] = -(L * Mk).trace() / static_cast<double>(k);
  }
  std::vector<C> e(n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    e[k - 1] = (k % 2 == 0 ? 1.0 : -1.0) * c[n - k];
  }
  return e;
}

SpanCertifier::SpanCertifier(int m) : basis_(m) {
  const Eigen::Index dim = 8 * m;
  columns_.resize(dim * dim, static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    const MatrixXd F = invariant_form(basis_[k].W);
    columns_.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const VectorXd>(F.data(), F.size());
  }
  qr_.compute(columns_);
}

SpanDecomposition SpanCertifier::decompose(const MatrixXd& form) const {
  const Eigen::Index dim = 8 * basis_.m();
  if (form.rows() != dim || form.cols() != dim) {
    throw DimensionMismatch("decompose_in_span: form has the wrong size for this m");
  }
  const Eigen::Map<const VectorXd> rhs(form.data(), form.size());
  VectorXd coeffs = qr_.solve(rhs);
  const double residual = (columns_ * coeffs - rhs).norm();
  return {std::move(coeffs), residual};
}

SpanDecomposition decompose_in_span(const MatrixXd& form, int m) { return SpanCertifier(m).decompose(form); }

}  // namespace ksred
