#include "nhsim/model.hpp"

#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace nhsim {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::out_of_domain: return "OutOfDomain";
    case ErrorCode::degenerate_constraint: return "DegenerateConstraint";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::invalid_parameter: return "InvalidParameter";
    case ErrorCode::quadrature_underflow: return "QuadratureUnderflow";
    case ErrorCode::zero_velocity: return "ZeroVelocity";
    case ErrorCode::anchor_violation: return "AnchorViolation";
    case ErrorCode::singular_gram: return "SingularGram";
    case ErrorCode::left_sublevel: return "LeftSublevel";
    case ErrorCode::step_too_large: return "StepTooLarge";
    case ErrorCode::pivot_inconsistent: return "PivotInconsistent";
    case ErrorCode::grid_mismatch: return "GridMismatch";
    case ErrorCode::too_few_nodes: return "TooFewNodes";
    case ErrorCode::rank_deficient: return "RankDeficient";
    case ErrorCode::invalid_alpha: return "InvalidAlpha";
    case ErrorCode::malformed_file: return "MalformedFile";
  }
  return "Unknown";
}

Mat FieldSample::A() const {
  const int nn = n();
  Mat block(nn, nn);
  for (int j = 0; j < nn; ++j) block.col(j) = a.col(pivot[j]);
  return block;
}

Mat FieldSample::Q() const {
  const int nn = n();
  const int mm = m();
  Mat block(nn, mm - nn);
  for (int j = nn; j < mm; ++j) block.col(j - nn) = a.col(pivot[j]);
  return block;
}

Mat FieldSample::B() const { return -A().inverse() * Q(); }

namespace {

Tensor3 central_difference_matrix(const std::function<Mat(const Vec&)>& field,
                                  const Vec& x, double h) {
  const int m = static_cast<int>(x.size());
  Tensor3 out(m);
  Vec xp = x, xm = x;
  for (int l = 0; l < m; ++l) {
    xp[l] = x[l] + h;
    xm[l] = x[l] - h;
    out[l] = (field(xp) - field(xm)) / (2.0 * h);
    xp[l] = x[l];
    xm[l] = x[l];
  }
  return out;
}

Vec central_difference_gradient(const std::function<double(const Vec&)>& field,
                                const Vec& x, double h) {
  const int m = static_cast<int>(x.size());
  Vec out(m);
  Vec xp = x, xm = x;
  for (int l = 0; l < m; ++l) {
    xp[l] = x[l] + h;
    xm[l] = x[l] - h;
    out[l] = (field(xp) - field(xm)) / (2.0 * h);
    xp[l] = x[l];
    xm[l] = x[l];
  }
  return out;
}

}  // namespace

FieldSample evaluate(const MechanicalSystem& system, const Vec& x) {
  if (x.size() != system.m) {
    throw SimError(ErrorCode::invalid_parameter, "point dimension mismatch");
  }
  if (!system.domain.contains_interior(x)) {
    std::ostringstream msg;
    msg << "point outside the open domain interior";
    throw SimError(ErrorCode::out_of_domain, msg.str());
  }

  FieldSample s;
  s.x = x;
  s.G = system.metric(x);
  s.V = system.potential(x);
  s.a = system.constraint(x);

  if (system.derivative_mode == DerivativeMode::analytic) {
    s.dG = system.metric_derivative(x);
    s.gradV = system.potential_gradient(x);
    s.da = system.constraint_derivative(x);
  } else {
    s.dG = central_difference_matrix(system.metric, x, system.h_fd);
    s.gradV = central_difference_gradient(system.potential, x, system.h_fd);
    s.da = central_difference_matrix(system.constraint, x, system.h_fd);
  }

  // Column-pivoted QR of a(x): the pivot order ranks columns by how much they
  // contribute to a well-conditioned leading block.
  Eigen::ColPivHouseholderQR<Mat> qr(s.a);
  const auto& perm = qr.colsPermutation().indices();
  s.pivot.resize(system.m);
  for (int j = 0; j < system.m; ++j) s.pivot[j] = perm[j];

  double det = 1.0;
  const Mat& R = qr.matrixR();
  for (int k = 0; k < system.n; ++k) det *= R(k, k);
  s.detA = std::abs(det);
  if (!(s.detA >= 1e-12)) {
    throw SimError(ErrorCode::degenerate_constraint,
                   "constraint matrix has no invertible n x n block");
  }
  return s;
}

double kinetic_energy(const Mat& G, const Vec& v) {
  if (!all_finite(G) || !all_finite(v)) {
    throw SimError(ErrorCode::non_finite_input, "NaN/Inf in kinetic energy input");
  }
  return 0.5 * v.dot(G * v);
}

double energy(const MechanicalSystem& system, const Vec& x, const Vec& v) {
  if (!system.domain.contains_interior(x)) {
    throw SimError(ErrorCode::out_of_domain, "energy evaluation outside domain");
  }
  return kinetic_energy(system.metric(x), v) + system.potential(x);
}

Vec constraint_residual(const MechanicalSystem& system, const Vec& x, const Vec& v) {
  if (!system.domain.contains_interior(x)) {
    throw SimError(ErrorCode::out_of_domain, "constraint evaluation outside domain");
  }
  return system.constraint(x) * v;
}

// ---------------------------------------------------------------------------
// Polynomial fields
// ---------------------------------------------------------------------------

Polynomial::Polynomial(int dim, std::vector<Monomial> terms)
    : dim_(dim), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.powers.size()) != dim_) {
      throw SimError(ErrorCode::invalid_parameter, "monomial arity mismatch");
    }
  }
}

Polynomial Polynomial::constant(int dim, double c) {
  if (c == 0.0) return Polynomial(dim, {});
  return Polynomial(dim, {Monomial{std::vector<int>(dim, 0), c}});
}

double Polynomial::value(const Vec& x) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double term = t.coeff;
    for (int i = 0; i < dim_; ++i) {
      for (int p = 0; p < t.powers[i]; ++p) term *= x[i];
    }
    sum += term;
  }
  return sum;
}

Polynomial Polynomial::derivative(int l) const {
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.powers[l] == 0) continue;
    Monomial d = t;
    d.coeff *= t.powers[l];
    d.powers[l] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(dim_, std::move(out));
}

MechanicalSystem build_polynomial_system(const PolynomialSystemSpec& spec) {
  if (spec.m <= 0 || spec.n <= 0 || spec.n >= spec.m) {
    throw SimError(ErrorCode::invalid_parameter, "require 0 < n < m");
  }
  if (static_cast<int>(spec.metric.size()) != spec.m ||
      static_cast<int>(spec.constraint.size()) != spec.n) {
    throw SimError(ErrorCode::invalid_parameter, "field table shape mismatch");
  }

  const int m = spec.m;
  const int n = spec.n;
  auto metric = spec.metric;
  auto constraint = spec.constraint;
  auto potential = spec.potential;

  // Precompute derivative tables once; evaluators close over them.
  std::vector<std::vector<std::vector<Polynomial>>> dmetric(m);
  std::vector<std::vector<std::vector<Polynomial>>> dconstraint(m);
  std::vector<Polynomial> dpotential(m);
  for (int l = 0; l < m; ++l) {
    dmetric[l].assign(m, std::vector<Polynomial>(m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) dmetric[l][i][j] = metric[i][j].derivative(l);
    dconstraint[l].assign(n, std::vector<Polynomial>(m));
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < m; ++j)
        dconstraint[l][k][j] = constraint[k][j].derivative(l);
    dpotential[l] = potential.derivative(l);
  }

  MechanicalSystem sys;
  sys.m = m;
  sys.n = n;
  sys.domain = spec.domain;
  sys.h = spec.h;
  sys.derivative_mode = spec.derivative_mode;
  sys.h_fd = spec.h_fd;
  sys.name = spec.name;

  sys.metric = [metric, m](const Vec& x) {
    Mat G(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) G(i, j) = metric[i][j].value(x);
    return G;
  };
  sys.potential = [potential](const Vec& x) { return potential.value(x); };
  sys.constraint = [constraint, n, m](const Vec& x) {
    Mat a(n, m);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < m; ++j) a(k, j) = constraint[k][j].value(x);
    return a;
  };
  sys.metric_derivative = [dmetric, m](const Vec& x) {
    Tensor3 dG(m, Mat(m, m));
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) dG[l](i, j) = dmetric[l][i][j].value(x);
    return dG;
  };
  sys.potential_gradient = [dpotential, m](const Vec& x) {
    Vec g(m);
    for (int l = 0; l < m; ++l) g[l] = dpotential[l].value(x);
    return g;
  };
  sys.constraint_derivative = [dconstraint, n, m](const Vec& x) {
    Tensor3 da(m, Mat(n, m));
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < m; ++j) da[l](k, j) = dconstraint[l][k][j].value(x);
    return da;
  };

  // Ellipticity constants estimated on a sample grid; refined bounds are
  // delivered by the property tests.
  sys.c1 = 0.0;
  sys.c2 = 0.0;
  return sys;
}

}  // namespace nhsim
