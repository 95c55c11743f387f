#ifndef NHSIM_MODEL_HPP
#define NHSIM_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nhsim/types.hpp"

namespace nhsim {

enum class DerivativeMode {
  analytic,            // field evaluators supply their own derivatives
  central_difference,  // derivatives by central differences with step h_fd
};

/// All field values and derivatives at a single configuration point, with the
/// column pivot that makes the leading n-by-n constraint block invertible.
struct FieldSample {
  Vec x;
  Mat G;        // m x m metric
  Tensor3 dG;   // dG[l] = dG/dx^l
  double V = 0.0;
  Vec gradV;
  Mat a;        // n x m constraint matrix
  Tensor3 da;   // da[l] = da/dx^l
  std::vector<int> pivot;  // permutation of 0..m-1; first n entries index the A block
  double detA = 0.0;       // |det| of the pivoted n x n block

  int m() const { return static_cast<int>(G.rows()); }
  int n() const { return static_cast<int>(a.rows()); }

  /// Pivoted n x n constraint block.
  Mat A() const;
  /// Remaining n x (m-n) block in pivot order.
  Mat Q() const;
  /// B = -A^{-1} Q, the kernel parametrization used for admissible directions.
  Mat B() const;
};

/// A mechanical system on a box domain: Riemann metric G, potential V and
/// velocity constraints a(x) xdot = 0, with an energy cap h bounding the
/// reachable sublevel set D_h = { V < h }.
///
/// Evaluators must be pure functions of x; a system can be shared read-only
/// across concurrent trajectory computations.
struct MechanicalSystem {
  int m = 0;  // configuration dimension
  int n = 0;  // number of constraints, n < m
  Box domain;
  double h = 0.0;  // energy cap

  DerivativeMode derivative_mode = DerivativeMode::analytic;
  double h_fd = 1e-6;

  // Value evaluators (required).
  std::function<Mat(const Vec&)> metric;         // x -> G(x)
  std::function<double(const Vec&)> potential;   // x -> V(x)
  std::function<Mat(const Vec&)> constraint;     // x -> a(x)

  // Analytic derivative evaluators (required when derivative_mode == analytic).
  std::function<Tensor3(const Vec&)> metric_derivative;
  std::function<Vec(const Vec&)> potential_gradient;
  std::function<Tensor3(const Vec&)> constraint_derivative;

  // Ellipticity constants c1 ||xi||^2 <= xi^T G xi <= c2 ||xi||^2, recorded by
  // the builder and checked by sampling.
  double c1 = 0.0;
  double c2 = 0.0;

  std::string name;
};

/// Evaluates all fields and derivatives at x. The constraint pivot is chosen
/// by column-pivoted QR, which greedily maximizes the conditioning of the
/// leading block.
///
/// Throws OutOfDomain if x is not in the open domain interior and
/// DegenerateConstraint if no column choice gives |det A| >= 1e-12.
FieldSample evaluate(const MechanicalSystem& system, const Vec& x);

/// T = 1/2 v^T G v. Throws NonFiniteInput on NaN/Inf entries.
double kinetic_energy(const Mat& G, const Vec& v);

/// H = T + V at (x, v).
double energy(const MechanicalSystem& system, const Vec& x, const Vec& v);

/// a(x) v; vanishes along admissible motions.
Vec constraint_residual(const MechanicalSystem& system, const Vec& x, const Vec& v);

// ---------------------------------------------------------------------------
// Polynomial fields: the configurable system kind. Each entry of a field is a
// multivariate polynomial given as a list of (exponents, coefficient) terms.
// ---------------------------------------------------------------------------

struct Monomial {
  std::vector<int> powers;  // one exponent per coordinate
  double coeff = 0.0;
};

class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int dim, std::vector<Monomial> terms);

  static Polynomial constant(int dim, double c);

  double value(const Vec& x) const;
  /// Partial derivative d/dx^l as a polynomial.
  Polynomial derivative(int l) const;

  int dim() const { return dim_; }
  const std::vector<Monomial>& terms() const { return terms_; }

 private:
  int dim_ = 0;
  std::vector<Monomial> terms_;
};

/// Specification of a polynomial-field system; `build_polynomial_system` turns
/// it into evaluators with analytic derivatives.
struct PolynomialSystemSpec {
  int m = 0;
  int n = 0;
  Box domain;
  double h = 0.0;
  std::vector<std::vector<Polynomial>> metric;      // m x m, symmetric
  Polynomial potential;
  std::vector<std::vector<Polynomial>> constraint;  // n x m
  DerivativeMode derivative_mode = DerivativeMode::analytic;
  double h_fd = 1e-6;
  std::string name = "polynomial";
};

MechanicalSystem build_polynomial_system(const PolynomialSystemSpec& spec);

}  // namespace nhsim

#endif  // NHSIM_MODEL_HPP
