#include "nhsim/sleigh.hpp"

#include <cmath>

namespace nhsim {

void bump_phi(double s, double delta, double& phi, double& dphi, double& ddphi) {
  const double r = std::abs(s);
  if (r <= delta) {
    phi = 1.0;
    dphi = 0.0;
    ddphi = 0.0;
    return;
  }
  if (r >= 2.0 * delta) {
    phi = 0.0;
    dphi = 0.0;
    ddphi = 0.0;
    return;
  }
  // Glue region: u = (|s| - delta)/delta in (0, 1), phi = exp(1 - 1/(1 - u^2)).
  const double u = (r - delta) / delta;
  const double w = 1.0 - u * u;
  const double val = std::exp(1.0 - 1.0 / w);
  const double dval_du = val * (-2.0 * u / (w * w));
  const double d2val_du2 =
      val * (4.0 * u * u / (w * w * w * w) - 2.0 / (w * w) - 8.0 * u * u / (w * w * w));
  const double sign = (s >= 0.0) ? 1.0 : -1.0;
  phi = val;
  dphi = dval_du * sign / delta;
  ddphi = d2val_du2 / (delta * delta);
}

double surface_center(int k, double lo, double hi) {
  // Calkin-Wilf: q_1 = 1, q_{j+1} = 1 / (2 floor(q_j) - q_j + 1) enumerates the
  // positive rationals without repetition. Iterating in exact integer
  // arithmetic (q = a/b) keeps the enumeration stable for large k; the map
  // q -> q/(1+q) then lands in (0, 1).
  long long a = 1, b = 1;
  for (int j = 1; j < k; ++j) {
    const long long next_b = 2 * (a / b) * b - a + b;
    a = b;
    b = next_b;
  }
  const double t = static_cast<double>(a) / static_cast<double>(a + b);
  return lo + t * (hi - lo);
}

namespace {

// One series term u(s) = phi(s) w(s), w(s) = s^4 cos(1/s), with u(0) = 0 taken
// in the limit sense. Returns (u, u', u'').
void surface_term(double s, double delta, double& u, double& du, double& ddu) {
  if (std::abs(s) < 1e-14) {
    u = 0.0;
    du = 0.0;
    ddu = 0.0;
    return;
  }
  double phi, dphi, ddphi;
  bump_phi(s, delta, phi, dphi, ddphi);
  if (phi == 0.0 && dphi == 0.0 && ddphi == 0.0) {
    u = 0.0;
    du = 0.0;
    ddu = 0.0;
    return;
  }
  const double c = std::cos(1.0 / s);
  const double si = std::sin(1.0 / s);
  const double s2 = s * s;
  const double w = s2 * s2 * c;
  const double dw = 4.0 * s2 * s * c + s2 * si;
  const double ddw = 12.0 * s2 * c + 6.0 * s * si - c;
  u = phi * w;
  du = dphi * w + phi * dw;
  ddu = ddphi * w + 2.0 * dphi * dw + phi * ddw;
}

}  // namespace

SurfaceSample sleigh_surface(const Eigen::Vector2d& p, int K, double delta,
                             double center_lo, double center_hi) {
  if (K < 0 || delta <= 0.0) {
    throw SimError(ErrorCode::invalid_parameter, "require K >= 0 and delta > 0");
  }
  SurfaceSample out;
  double scale = 1.0;
  for (int k = 1; k <= K; ++k) {
    scale *= 0.5;
    const double xk = surface_center(k, center_lo, center_hi);
    double u, du, ddu;
    surface_term(p[0] - xk, delta, u, du, ddu);
    out.f += scale * u;
    out.grad[0] += scale * du;
    out.hess(0, 0) += scale * ddu;
  }
  return out;
}

SurfaceSample sleigh_surface(const Eigen::Vector2d& p, int K, double delta) {
  return sleigh_surface(p, K, delta, kSurfaceCenterLo, kSurfaceCenterHi);
}

MechanicalSystem build_sleigh_system(double mass, double inertia, int K,
                                     double delta, double h) {
  if (mass <= 0.0 || inertia <= 0.0) {
    throw SimError(ErrorCode::invalid_parameter, "mass and inertia must be positive");
  }
  if (K < 0 || delta <= 0.0) {
    throw SimError(ErrorCode::invalid_parameter, "require K >= 0 and delta > 0");
  }

  MechanicalSystem sys;
  sys.m = 3;
  sys.n = 1;
  sys.domain.lo = Vec(3);
  sys.domain.hi = Vec(3);
  sys.domain.lo << -8.0, -8.0, -16.0;
  sys.domain.hi << 8.0, 8.0, 16.0;
  sys.h = h;
  sys.derivative_mode = DerivativeMode::analytic;
  sys.name = (K == 0) ? "sleigh-flat" : "sleigh-rough";

  auto surface = [K, delta](const Vec& q) {
    return sleigh_surface(Eigen::Vector2d(q[0], q[1]), K, delta);
  };

  // Metric induced by z = f(x, y):
  //   T = m/2 [(1 + fx^2) xd^2 + 2 fx fy xd yd + (1 + fy^2) yd^2] + J/2 thd^2.
  sys.metric = [surface, mass, inertia](const Vec& q) {
    const SurfaceSample s = surface(q);
    const double fx = s.grad[0];
    const double fy = s.grad[1];
    Mat G = Mat::Zero(3, 3);
    G(0, 0) = mass * (1.0 + fx * fx);
    G(0, 1) = G(1, 0) = mass * fx * fy;
    G(1, 1) = mass * (1.0 + fy * fy);
    G(2, 2) = inertia;
    return G;
  };
  sys.metric_derivative = [surface, mass](const Vec& q) {
    const SurfaceSample s = surface(q);
    const double fx = s.grad[0];
    const double fy = s.grad[1];
    Tensor3 dG(3, Mat::Zero(3, 3));
    // d/dx and d/dy; the theta direction leaves the metric unchanged.
    const double fxx = s.hess(0, 0), fxy = s.hess(0, 1), fyy = s.hess(1, 1);
    dG[0](0, 0) = 2.0 * mass * fx * fxx;
    dG[0](0, 1) = dG[0](1, 0) = mass * (fxx * fy + fx * fxy);
    dG[0](1, 1) = 2.0 * mass * fy * fxy;
    dG[1](0, 0) = 2.0 * mass * fx * fxy;
    dG[1](0, 1) = dG[1](1, 0) = mass * (fxy * fy + fx * fyy);
    dG[1](1, 1) = 2.0 * mass * fy * fyy;
    return dG;
  };

  sys.potential = [](const Vec&) { return 0.0; };
  sys.potential_gradient = [](const Vec&) { return Vec::Zero(3).eval(); };

  sys.constraint = [](const Vec& q) {
    Mat a(1, 3);
    a << std::sin(q[2]), -std::cos(q[2]), 0.0;
    return a;
  };
  sys.constraint_derivative = [](const Vec& q) {
    Tensor3 da(3, Mat::Zero(1, 3));
    da[2](0, 0) = std::cos(q[2]);
    da[2](0, 1) = std::sin(q[2]);
    return da;
  };

  // Eigenvalues of the planar block are m and m (1 + fx^2 + fy^2).
  const double fmax = 1.0 + 0.25;  // |f'| stays well below 0.5 for delta <= 1
  sys.c1 = std::min(mass, inertia);
  sys.c2 = std::max(mass * (1.0 + fmax * fmax), inertia);
  return sys;
}

}  // namespace nhsim
