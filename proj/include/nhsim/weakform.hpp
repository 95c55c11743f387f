// Test functions, the integral-identity residual, and least-squares recovery
// of the multiplier track from a trajectory.
#ifndef NHSIM_WEAKFORM_HPP
#define NHSIM_WEAKFORM_HPP

#include <functional>
#include <vector>

#include "nhsim/dynamics.hpp"
#include "nhsim/model.hpp"
#include "nhsim/types.hpp"

namespace nhsim {

// Test function sampled on a trajectory's time grid.  `values[j]` is psi(t_j),
// `derivs[j]` its time derivative.  `admissible` records whether
// a(x(t_j)) psi(t_j) = 0 holds by construction.
struct TestFunction {
  std::vector<Vec> values;
  std::vector<Vec> derivs;
  bool admissible = false;

  std::size_t size() const { return values.size(); }
  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
};

// Multiplier samples per trajectory node plus norm/fit diagnostics.
struct MultiplierTrack {
  std::vector<Vec> gamma;    // one R^n sample per grid node
  double l2_norm = 0.0;      // composite-trapezoid L2 norm of the samples
  double fit_residual = 0.0; // least-squares residual, normalized by (1+||rhs||)

  double max_deviation_from(const std::vector<Vec>& reference) const;
};

// Composite quadrature over equally spaced samples: Simpson when the node
// count is odd (exact for cubics), trapezoid otherwise.
// Throws TooFewNodes for fewer than 3 samples.
double quadrature(const std::vector<double>& samples, double dt);

// The per-node weights realizing `quadrature` as a dot product.
std::vector<double> quadrature_weights(std::size_t count, double dt);

// Builds an admissible test function from m-n free coefficient functions
// psi_hat (each vanishing at t = 0).  The constrained components are
// recovered per node from psi_tilde = -A^{-1} Q psi_hat using the pivot
// permutation of the first node; derivative samples come from 4th-order
// finite differences.  Throws PivotInconsistent when the initial pivot block
// degenerates further along the path, TooFewNodes for fewer than 5 nodes.
TestFunction admissible_test(const MechanicalSystem& system, const Trajectory& traj,
                             const std::vector<std::function<double(double)>>& psi_hat);

// Monomial-times-unit-vector test function psi(t) = (t/tau)^degree e_direction
// with exact derivative samples.  Not admissible in general.
TestFunction polynomial_test(const Trajectory& traj, int degree, int direction);

// Signed value of the integral functional
//   F(psi) = Int [ dL/dx . psi + (G v) . psi' ] dt  -  (G v)(tau) . psi(tau)
// evaluated by composite quadrature along the trajectory.  psi(0) = 0 is
// required; the test function need not be admissible.
double weak_functional(const MechanicalSystem& system, const Trajectory& traj,
                       const TestFunction& psi);

// |F(psi)| / (1 + ||psi||_{H^1}) for an admissible test function; the
// scale-free violation of the defining integral identity.
double weak_residual(const MechanicalSystem& system, const Trajectory& traj,
                     const TestFunction& psi);

// Recovers the multiplier track gamma from F(psi) = -Int gamma^T a(x) psi dt
// tested against the family {(t/tau)^p e_r : p = 1..basis_size, r = 1..m}.
// gamma is represented on a coarse piecewise-linear grid of basis_size nodes
// and solved by rank-revealing least squares; the sign convention makes the
// result agree with compute_multipliers on smooth systems.
// Throws RankDeficient when the assembled system loses column rank.
MultiplierTrack reconstruct_multipliers(const MechanicalSystem& system,
                                        const Trajectory& traj, int basis_size);

}  // namespace nhsim

#endif  // NHSIM_WEAKFORM_HPP
