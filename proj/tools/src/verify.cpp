#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/QR>
#include <json.hpp>

#include <ksred/dynamics3.hpp>
#include <ksred/kepler.hpp>

#include "ksred_cli/commands.hpp"

namespace ksred::cli {

namespace {

using Rng = std::mt19937_64;

// Per-trial generator derived from the master seed.
Rng trial_rng(std::uint64_t seed, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial)};
  return Rng(seq);
}

std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

double normal(Rng& rng) { return std::normal_distribution<double>()(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
Vec3 normal3(Rng& rng) { return {normal(rng), normal(rng), normal(rng)}; }
Quaternion normal_quat(Rng& rng) { return {normal(rng), normal(rng), normal(rng), normal(rng)}; }

MatrixXd normal_matrix(Rng& rng, int n) {
  MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
  return A;
}

// Bounded three-body configuration near an equilateral triangle.
RegState bounded_state(Rng& rng) {
  std::array<Vec3, 3> pos, vel;
  for (int i = 0; i < 3; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / 3.0;
    pos[i] = Vec3(std::cos(angle), std::sin(angle), 0.0) + 0.1 * normal3(rng);
    vel[i] = 0.5 * Vec3(-std::sin(angle), std::cos(angle), 0.0) + 0.05 * normal3(rng);
  }
  const std::array<double, 3> masses{uniform(rng, 0.8, 1.2), uniform(rng, 0.8, 1.2), uniform(rng, 0.8, 1.2)};
  return ingest_bodies(pos, vel, masses);
}

RegState random_state(Rng& rng) {
  RegState st;
  for (auto& p : st.pairs) p = {normal_quat(rng), normal_quat(rng)};
  st.params = {{uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0)}, uniform(rng, -2.0, 0.0)};
  return st;
}

class Collector {
 public:
  Collector(const VerifyOptions& options, std::vector<PropertyResult>& out) : options_(options), out_(out) {}

  /// Runs `trial` for every seeded trial and keeps the worst residual.
  void trials(const std::string& name, double threshold, int count, const std::function<double(Rng&)>& trial) {
    double worst = 0.0;
    for (int k = 0; k < count; ++k) {
      Rng rng = trial_rng(options_.seed ^ name_hash(name), k);
      const double r = trial(rng);
      worst = std::isnan(r) || std::isnan(worst) ? std::numeric_limits<double>::quiet_NaN() : std::max(worst, r);
    }
    add(name, worst, threshold);
  }

  void add(const std::string& name, double worst, double threshold) {
    const double limit = options_.tol.value_or(threshold);
    out_.push_back({name, worst, limit, worst <= limit});
  }

  int count() const { return options_.trials; }

 private:
  const VerifyOptions& options_;
  std::vector<PropertyResult>& out_;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Canonical bracket of functions with analytic gradients (f_Q, f_P).
struct Grad {
  Vec4 q, p;
};
double poisson(const Grad& f, const Grad& g) { return f.q.dot(g.p) - f.p.dot(g.q); }

std::array<Grad, 4> kepler_gradients(const Quaternion& Q, const Quaternion& P) {
  const Vec4 q = Q.vector(), p = P.vector();
  const Mat4& K = k_matrix();
  const double r2 = std::numbers::sqrt2;
  return {Grad{r2 * q, Vec4::Zero()}, Grad{Vec4::Zero(), r2 * p}, Grad{p, q}, Grad{-(K * p), K * q}};
}

void ks_suite(Collector& c) {
  c.trials("ks_roundtrip_rel", 1e-14, c.count(), [](Rng& rng) {
    const Vec3 q = normal3(rng).normalized() * std::exp(uniform(rng, std::log(0.01), std::log(10.0)));
    const Vec3 p = normal3(rng);
    const PairState s = ks_lift(q, p);
    return std::max((ks_pos(s.Q) - q).norm() / q.norm(), (ks_mom(s.Q, s.P) - p).norm() / p.norm());
  });
  c.trials("ks_lift_bilinear_rel", 4.0 * std::numeric_limits<double>::epsilon(), c.count(), [](Rng& rng) {
    const Vec3 q = normal3(rng).normalized() * std::exp(uniform(rng, std::log(0.01), std::log(10.0)));
    const PairState s = ks_lift(q, normal3(rng));
    return std::abs(bilinear(s.Q, s.P)) / std::sqrt(s.Q.norm2() * s.P.norm2());
  });
  c.trials("ks_norm_rel", 1e-15, c.count(), [](Rng& rng) {
    const Quaternion Q = normal_quat(rng);
    return std::abs(ks_pos(Q).norm() - Q.norm2()) / Q.norm2();
  });
  c.trials("momentum_map_cross_product", 1e-13, c.count(), [](Rng& rng) {
    const Vec3 q = normal3(rng), p = normal3(rng);
    const PairState s = ks_lift(q, p);
    return (momentum_map(s.Q, s.P).L - q.cross(p)).cwiseAbs().maxCoeff();
  });
  c.trials("isoclinic_commutator", 1e-12, c.count(), [](Rng& rng) {
    const Vec3 a = normal3(rng), b = normal3(rng);
    const Mat4 A = isoclinic(a), B = isoclinic(b);
    return (A * B - B * A - 2.0 * isoclinic(a.cross(b))).cwiseAbs().maxCoeff();
  });
  c.trials("equivariance", 1e-12, c.count(), [](Rng& rng) {
    const GroupElement g = group_element(normal3(rng), uniform(rng, -std::numbers::pi, std::numbers::pi));
    const Quaternion Q = normal_quat(rng);
    const double scale = Q.norm2();
    return (ks_pos(transform(g.S, Q)) - g.rotation() * ks_pos(Q)).cwiseAbs().maxCoeff() / scale;
  });
}

void kepler_suite(Collector& c) {
  // {X_a, X_b} = sum_c n_abc X_c with the table entries below.
  Eigen::Matrix<double, 16, 4> expected = Eigen::Matrix<double, 16, 4>::Zero();
  const auto set = [&](int a, int b, int k, double v) {
    expected(4 * a + b, k) = v;
    expected(4 * b + a, k) = -v;
  };
  set(0, 1, 2, 2.0);
  set(0, 2, 0, 2.0);
  set(1, 2, 1, -2.0);

  // Fit bracket coefficients on random points, then round.
  Rng rng = trial_rng(0x6b65706c, 0);
  Eigen::MatrixXd X(12, 4);
  std::vector<std::array<Grad, 4>> grads;
  for (int r = 0; r < 12; ++r) {
    const Quaternion Q = normal_quat(rng), P = normal_quat(rng);
    X.row(r) = kepler_invariants(Q, P).vector().transpose();
    grads.push_back(kepler_gradients(Q, P));
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  double table_error = 0.0, rounding = 0.0;
  Eigen::Matrix<double, 16, 4> fitted;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      VectorXd values(12);
      for (int r = 0; r < 12; ++r) values[r] = poisson(grads[r][a], grads[r][b]);
      const VectorXd n = qr.solve(values);
      for (int k = 0; k < 4; ++k) {
        rounding = std::max(rounding, std::abs(n[k] - std::round(n[k])));
        table_error = std::max(table_error, std::abs(std::round(n[k]) - expected(4 * a + b, k)));
        fitted(4 * a + b, k) = n[k];
      }
    }
  }
  c.add("bracket_table_rounding", rounding, 1e-9);
  c.add("bracket_table_match", table_error, 0.0);
  c.add("x4_central", fitted.block(12, 0, 4, 4).cwiseAbs().maxCoeff(), 1e-9);

  // [b_a, b_b] = sum_k n_abk b_k for the u(1,1) basis.
  const auto basis = u11_basis();
  double u11 = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const Mat2c comm = basis[a] * basis[b] - basis[b] * basis[a];
      Mat2c combo = Mat2c::Zero();
      for (int k = 0; k < 4; ++k) combo += expected(4 * a + b, k) * basis[k];
      u11 = std::max(u11, (comm - combo).cwiseAbs().maxCoeff());
    }
  }
  c.add("u11_structure_constants", u11, 1e-12);

  const int trials = std::max(1, std::min(c.count(), 20));
  c.trials("fictitious_period_return", 1e-8, trials, [](Rng& rng) {
    const KeplerParams params{uniform(rng, 0.2, 2.0), uniform(rng, 0.5, 2.0), -uniform(rng, 0.2, 2.0)};
    const PairState s0 = kepler_orbit_state(params, uniform(rng, 0.0, 0.95));
    const double T = fictitious_period(params);
    const auto traj = kepler_flow(s0, params, T, T / 4000.0);
    const PairState& s1 = traj.samples.back().state;
    const double scale = std::sqrt(s0.Q.norm2() + s0.P.norm2());
    return std::sqrt((s1.Q - s0.Q).norm2() + (s1.P - s0.P).norm2()) / scale;
  });
  c.trials("physical_period_rel", 1e-6, trials, [](Rng& rng) {
    const KeplerParams params{uniform(rng, 0.2, 2.0), uniform(rng, 0.5, 2.0), -uniform(rng, 0.2, 2.0)};
    const PairState s0 = kepler_orbit_state(params, uniform(rng, 0.0, 0.95));
    const double half = 0.5 * fictitious_period(params);
    const auto traj = kepler_flow(s0, params, half, half / 2000.0);
    return std::abs(traj.samples.back().t - kepler_period(params)) / kepler_period(params);
  });
  {
    const KeplerParams params{0.5, 1.0, -0.5};
    const double half = 0.5 * fictitious_period(params);
    const auto traj = kepler_flow(kepler_orbit_state(params, 1.0), params, half, half / 4000.0);
    double min_x1 = traj.samples.front().X.X1;
    for (const auto& s : traj.samples) min_x1 = std::min(min_x1, s.X.X1);
    c.add("collision_orbit_hamiltonian_drift", traj.max_hamiltonian_drift, 1e-8);
    c.add("collision_orbit_reaches_origin", min_x1, 1e-6);
  }
  c.trials("det_lax_identity", 1e-12, c.count(), [](Rng& rng) {
    const Vec3 q = normal3(rng), p = normal3(rng);
    const PairState s = ks_lift(q, p);
    const KeplerInvariants X = kepler_invariants(s.Q, s.P);
    const double det = kepler_lax(X, {1.0, 1.0, -1.0}).L.determinant();
    const double ang = 4.0 * q.cross(p).squaredNorm();
    const double scale = std::max(1.0, 4.0 * q.squaredNorm() * p.squaredNorm());
    return std::max(std::abs(det - (2.0 * X.X1 * X.X2 - X.X3 * X.X3)), std::abs(det - ang)) / scale;
  });
}

void algebra_suite(Collector& c, int m) {
  const InvariantBasis basis(m);
  const StructureTensor tensor(basis);
  c.add("basis_dimension", std::abs(static_cast<double>(basis.size()) - 4.0 * m * m), 0.0);
  c.add("closure_residual", tensor.expansion_residual(), 1e-12);
  c.add("antisymmetry", tensor.antisymmetry_residual(), 1e-12);
  c.add("jacobi", tensor.jacobi_residual(), 1e-12);
  c.trials("canonical_bracket_homomorphism", 1e-12, c.count(), [m](Rng& rng) {
    const MatrixXd A = normal_matrix(rng, 2 * m), B = normal_matrix(rng, 2 * m);
    const MatrixXd lhs = canonical_quadratic_bracket(invariant_form(A), invariant_form(B));
    const MatrixXd rhs = invariant_form(bracket_m(A, B));
    return (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
  });
  if (m == 3) {
    const auto coef = [&](InvariantKind ka, int ia, int ja, InvariantKind kb, int ib, int jb, InvariantKind kc, int ic,
                          int jc) {
      return tensor.coefficient(basis.index_of(kc, ic, jc), basis.index_of(ka, ia, ja), basis.index_of(kb, ib, jb));
    };
    using K = InvariantKind;
    c.add("spot_alpha11_beta11", std::abs(coef(K::alpha, 0, 0, K::beta, 0, 0, K::gamma, 0, 0) - 2.0), 1e-12);
    c.add("spot_alpha11_c31",
          std::abs(coef(K::alpha, 0, 0, K::c, 2, 0, K::a, 0, 2) + std::numbers::sqrt2), 1e-12);
  }
}

void iso_suite(Collector& c, int m) {
  c.trials("isomorphism_residual", 1e-12, c.count(), [m](Rng& rng) {
    const MatrixXd A = normal_matrix(rng, 2 * m), B = normal_matrix(rng, 2 * m);
    const MatrixXcd hA = to_u(A), hB = to_u(B);
    const MatrixXcd comm = hA * hB - hB * hA;
    return (to_u(bracket_m(A, B)) - comm).norm() / std::max(1.0, comm.norm());
  });
  c.trials("u_membership", 1e-14, c.count(),
           [m](Rng& rng) { return u_membership_residual(to_u(normal_matrix(rng, 2 * m))); });
  const InvariantBasis basis(m);
  const int n = 2 * m;
  MatrixXd images(2 * n * n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const MatrixXcd Z = to_u(basis[k].W);
    for (int i = 0; i < n * n; ++i) {
      images(i, k) = Z.data()[i].real();
      images(n * n + i, k) = Z.data()[i].imag();
    }
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(images);
  qr.setThreshold(1e-10);
  c.add("h_rank_deficiency", std::abs(static_cast<double>(qr.rank()) - 4.0 * m * m), 0.0);
}

// d/ds of the raw Gram data along heggie_rhs.
GramPair gram_velocity(const RegState& st) {
  const RegDerivative d = heggie_rhs(st);
  std::array<Vec4, 6> U, dU;
  for (int a = 0; a < 3; ++a) {
    U[a] = st.pairs[a].Q.vector();
    U[3 + a] = st.pairs[a].P.vector();
    dU[a] = d.dQ[a].vector();
    dU[3 + a] = d.dP[a].vector();
  }
  const Mat4& K = k_matrix();
  GramPair v{3, MatrixXd(6, 6), MatrixXd(6, 6)};
  for (int u = 0; u < 6; ++u) {
    for (int w = 0; w < 6; ++w) {
      v.G(u, w) = dU[u].dot(U[w]) + U[u].dot(dU[w]);
      v.Omega(u, w) = dU[u].dot(K * U[w]) + U[u].dot(K * dU[w]);
    }
  }
  return v;
}

void dynamics_suite(Collector& c) {
  c.trials("hamiltonian_equivalence", 1e-10, c.count(), [](Rng& rng) {
    const RegState st = random_state(rng);
    return rel(invariant_hamiltonian(extract_invariants(st.pairs), st.params), heggie_hamiltonian(st));
  });
  c.trials("f_pair_oracle", 1e-12, c.count(), [](Rng& rng) {
    const RegState st = random_state(rng);
    const GramPair g = extract_invariants(st.pairs);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const Quaternion Wi = st.pairs[i].Q * star(st.pairs[i].P);
        const Quaternion Wj = st.pairs[j].Q * star(st.pairs[j].P);
        worst = std::max(worst, rel(f_pair(g, i, j), 4.0 * Wi.dot(Wj)));
      }
    }
    return worst;
  });
  c.trials("regularised_vs_physical", 1e-12, c.count(), [](Rng& rng) {
    RegState st = bounded_state(rng);
    st.params.h = uniform(rng, -2.0, 0.0);
    const auto R = st.separations();
    const double expected = (physical_energy(st) - st.params.h) * R[0] * R[1] * R[2];
    return rel(heggie_hamiltonian(st), expected);
  });
  c.trials("rhs_finite_difference", 1e-6, std::min(c.count(), 20), [](Rng& rng) {
    const RegState st = random_state(rng);
    const RegDerivative d = heggie_rhs(st);
    const double e = 1e-6;
    double worst = 0.0;
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
          const double fd = (heggie_hamiltonian(plus) - heggie_hamiltonian(minus)) / (2.0 * e);
          const double an = which ? d.dQ[a].vector()[k] : -d.dP[a].vector()[k];
          worst = std::max(worst, rel(fd, an));
        }
      }
    }
    return worst;
  });
  c.trials("lax_chain_rule", 1e-10, c.count(), [](Rng& rng) {
    const RegState st = random_state(rng);
    const MatrixXcd lax = reduced_velocity(extract_invariants(st.pairs).hermitian(), st.params);
    const MatrixXcd push = gram_velocity(st).hermitian();
    return (lax - push).norm() / std::max(1.0, push.norm());
  });
  {
    const InvariantBasis basis(3);
    const StructureTensor tensor(basis);
    c.trials("lie_poisson_equals_lax", 1e-12, c.count(), [&](Rng& rng) {
      const RegState st = random_state(rng);
      const GramPair g = extract_invariants(st.pairs);
      const VectorXd x = basis.coordinates(g);
      const VectorXd lp = tensor.lie_poisson_rhs(x, coordinate_gradient(basis, g, st.params));
      const VectorXd lax = basis.coordinates(GramPair::from_hermitian(reduced_velocity(g.hermitian(), st.params)));
      return (lp - lax).cwiseAbs().maxCoeff() / std::max(1.0, lax.cwiseAbs().maxCoeff());
    });
  }
  c.trials("kinetic_identity", 1e-12, c.count(), [](Rng& rng) {
    const std::array<double, 3> masses{uniform(rng, 0.1, 3.0), uniform(rng, 0.1, 3.0), uniform(rng, 0.1, 3.0)};
    std::array<Vec3, 3> p{normal3(rng), normal3(rng), Vec3::Zero()};
    p[2] = -p[0] - p[1];
    double T = 0.0;
    for (int i = 0; i < 3; ++i) T += p[i].squaredNorm() / (2.0 * masses[i]);
    return rel(pair_kinetic_energy(pair_momenta(p), masses), T);
  });
  {
    Rng rng = trial_rng(0x666c6f77, 0);
    const auto traj = canonical_flow(bounded_state(rng), 1.0, 1e-3);
    const auto& d = traj.diagnostics;
    c.add("flow_bilinear_drift", *std::max_element(d.max_bilinear_drift.begin(), d.max_bilinear_drift.end()), 1e-10);
    c.add("flow_angular_momentum_drift", d.max_angular_momentum_drift, 1e-9);
  }
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
}

std::string SuiteReport::to_json() const {
  nlohmann::json j;
  j["suite"] = options.suite;
  j["m"] = options.m;
  j["trials"] = options.trials;
  j["seed"] = options.seed;
  if (options.tol) j["tol"] = *options.tol;
  j["passed"] = passed();
  nlohmann::json props = nlohmann::json::array();
  for (const auto& p : properties) {
    props.push_back({{"name", p.name}, {"passed", p.passed}, {"worst", p.worst}, {"threshold", p.threshold}});
  }
  j["properties"] = props;
  return j.dump(2);
}

SuiteReport run_suite(const VerifyOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be positive");
  SuiteReport report{options, {}};
  Collector c(options, report.properties);
  const auto require_m = [&] {
    if (options.m != 1 && options.m != 3 && options.m != 6) {
      throw std::invalid_argument("m must be 1, 3 or 6");
    }
  };
  if (options.suite == "ks") {
    ks_suite(c);
  } else if (options.suite == "kepler") {
    kepler_suite(c);
  } else if (options.suite == "algebra") {
    require_m();
    algebra_suite(c, options.m);
  } else if (options.suite == "iso") {
    require_m();
    iso_suite(c, options.m);
  } else if (options.suite == "dynamics") {
    dynamics_suite(c);
  } else {
    throw std::invalid_argument("unknown suite '" + options.suite + "'");
  }
  return report;
}

int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& log) {
  SuiteReport report;
  try {
    report = run_suite(options);
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  out << report.to_json() << '\n';
  for (const auto& p : report.properties) {
    if (!p.passed) log << "FAIL " << p.name << ": " << p.worst << " > " << p.threshold << '\n';
  }
  return report.passed() ? kExitOk : kExitPropertyFailed;
}

}  // namespace ksred::cli
