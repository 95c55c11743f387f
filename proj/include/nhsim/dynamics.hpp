#ifndef NHSIM_DYNAMICS_HPP
#define NHSIM_DYNAMICS_HPP

#include <vector>

#include "nhsim/model.hpp"
#include "nhsim/types.hpp"

namespace nhsim {

/// Sampled solution on a uniform time grid t_j = j dt, j = 0..N.
struct Trajectory {
  double dt = 0.0;
  double h_prime = 0.0;  // initial energy, conserved along exact solutions
  std::vector<Vec> x;
  std::vector<Vec> v;
  std::vector<Vec> acc;
  std::vector<double> energy;
  std::vector<Vec> cres;  // a(x_j) v_j

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  double tau() const { return dt * static_cast<double>(size() - 1); }
  double time(std::size_t j) const { return dt * static_cast<double>(j); }
  int m() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
  int n() const { return cres.empty() ? 0 : static_cast<int>(cres.front().size()); }

  double max_constraint_residual() const;
};

struct IntegrateOptions {
  bool stabilize = true;  // project velocity onto ker a(x) after each step
};

/// Non-multiplier terms of the equations of motion, collected so that
/// G(x) xdd = a(x)^T lambda + F along solutions:
///   F_j = 1/2 v^T (dG/dx^j) v - dV/dx^j - sum_l v^l (dG/dx^l v)_j.
Vec generalized_force(const FieldSample& s, const Vec& v);

/// Lagrange multipliers from differentiating a(x) xdot = 0 in time:
///   (a G^{-1} a^T) lambda = -(v^l da/dx^l) v - a G^{-1} F.
/// Throws SingularGram when the Gram matrix conditioning exceeds 1e12.
Vec compute_multipliers(const FieldSample& s, const Vec& v);

/// Resolved second-order field xdd = G^{-1}(a^T lambda + F).
Vec acceleration(const FieldSample& s, const Vec& v);

/// G-orthogonal projection of v onto ker a(x):
///   v' = v - G^{-1} a^T (a G^{-1} a^T)^{-1} a v.
/// Minimizes the G-distance to v among constraint-compatible velocities.
Vec project_velocity(const FieldSample& s, const Vec& v);

/// Classical fixed-step RK4 on (xdot, vdot) = (v, acceleration), with optional
/// per-step velocity projection. Requires a(x0) v0 = 0 within 1e-10,
/// H(x0, v0) < h, and dt dividing tau.
///
/// Throws LeftSublevel if the path exits D_h or the domain, StepTooLarge if a
/// single step drifts the energy by more than 1e-3 |h'|, and propagates
/// SingularGram from the multiplier solve.
Trajectory integrate(const MechanicalSystem& system, const Vec& x0, const Vec& v0,
                     double tau, double dt, const IntegrateOptions& opts = {});

/// max_j |H_j - h'|.
double energy_drift(const Trajectory& traj);

}  // namespace nhsim

#endif  // NHSIM_DYNAMICS_HPP
