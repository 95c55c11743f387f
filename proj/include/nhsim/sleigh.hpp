#ifndef NHSIM_SLEIGH_HPP
#define NHSIM_SLEIGH_HPP

#include "nhsim/model.hpp"
#include "nhsim/types.hpp"

namespace nhsim {

/// Value, gradient and Hessian of the support surface z = f(x, y).
struct SurfaceSample {
  double f = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

/// Smooth bump: 1 on [-delta, delta], supported in (-2 delta, 2 delta),
/// glued by the standard exponential profile. Returns (phi, phi', phi'').
void bump_phi(double s, double delta, double& phi, double& dphi, double& ddphi);

/// k-th rational center (1-based) of the rough surface: the Calkin-Wilf
/// enumeration of positive rationals mapped into (lo, hi) via q -> q/(1+q).
double surface_center(int k, double lo, double hi);

/// Default interval holding the rational centers of the built-in surface.
inline constexpr double kSurfaceCenterLo = -2.0;
inline constexpr double kSurfaceCenterHi = 2.0;

/// K-term truncation of the rough surface
///   f(x, y) = sum_k 2^{-k} phi(x - x_k) (x - x_k)^4 cos(1/(x - x_k))
/// together with first and second derivatives. Each term extends smoothly by 0
/// at its center; the series does not depend on y.
SurfaceSample sleigh_surface(const Eigen::Vector2d& p, int K, double delta);
SurfaceSample sleigh_surface(const Eigen::Vector2d& p, int K, double delta,
                             double center_lo, double center_hi);

/// Chaplygin sleigh on the surface z = f(x, y): configuration (x, y, theta),
/// knife-edge constraint sin(theta) xdot - cos(theta) ydot = 0, metric induced
/// by the surface embedding. K = 0 gives the flat (smooth) sleigh; K >= 1
/// makes the metric Lipschitz with discontinuous derivative.
///
/// Throws InvalidParameter on non-positive mass or inertia.
MechanicalSystem build_sleigh_system(double mass, double inertia, int K,
                                     double delta, double h);

}  // namespace nhsim

#endif  // NHSIM_SLEIGH_HPP
