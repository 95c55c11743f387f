#ifndef NHSIM_MOLLIFY_HPP
#define NHSIM_MOLLIFY_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "nhsim/model.hpp"
#include "nhsim/types.hpp"

namespace nhsim {

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Convolution of a matrix-valued field with the standard compactly supported
/// bump of radius epsilon, discretized by tensor-product Gauss-Legendre
/// quadrature. The discrete kernel weights are normalized to unit mass, so
/// constants are reproduced exactly. Derivatives are taken on the kernel:
/// d(f * rho) = f * d(rho).
///
/// Fields are extended beyond the clamp box (when given) by nearest-point
/// clamping, so the smoothed field is defined on the whole box.
class MollifiedField {
 public:
  MollifiedField(std::function<Mat(const Vec&)> field, int dim, double epsilon,
                 int quad_points, std::optional<Box> clamp_box = std::nullopt);

  Mat value(const Vec& x) const;
  /// Per-axis derivatives of the smoothed field.
  Tensor3 derivative(const Vec& x) const;

  double epsilon() const { return epsilon_; }
  /// Relative deviation of the raw quadrature kernel mass from the dense
  /// radial reference; a quadrature-quality diagnostic.
  double kernel_mass_deviation() const { return mass_deviation_; }

 private:
  std::function<Mat(const Vec&)> field_;
  int dim_;
  double epsilon_;
  std::optional<Box> clamp_box_;
  std::vector<Vec> offsets_;              // y_i = epsilon * z_i
  std::vector<double> value_weights_;     // sum to 1
  std::vector<Vec> derivative_weights_;   // per node, one entry per axis
  double mass_deviation_ = 0.0;

  Vec sample_point(const Vec& x, std::size_t i) const;
};

/// Smoothing of one scalar/matrix evaluator, the building block used by
/// mollify_system. Throws QuadratureUnderflow when the kernel mass cannot be
/// normalized (all nodes outside the support or numerically vanished).
MollifiedField mollify_field(std::function<Mat(const Vec&)> field, int dim,
                             double epsilon, int quad_points,
                             std::optional<Box> clamp_box = std::nullopt);

/// Constant correction b with (a_star_x0 + b) v = 0 exactly: all columns zero
/// except j* = argmax |v^j|, where b^k_{j*} = -(a_star_x0 v)^k / v^{j*}.
/// Throws ZeroVelocity when ||v|| = 0.
Mat anchor_correction(const Mat& a_star_x0, const Vec& v);

/// A mechanical system whose metric and constraint fields are smoothed at
/// radius epsilon, with the anchor correction applied so the initial velocity
/// stays admissible for the smoothed constraint. The potential is left alone.
struct MollifiedSystem {
  MechanicalSystem system;
  double epsilon = 0.0;
  Vec anchor_x0;
  Vec anchor_v;
  Mat b;  // n x m anchor correction, zero when ||v|| = 0
  double kernel_mass_deviation = 0.0;
};

/// Builds the smoothed approximant. Requires a(x0) v = 0 on the base system
/// within 1e-8 (AnchorViolation otherwise) and x0 in the energy sublevel set.
MollifiedSystem mollify_system(const MechanicalSystem& base, double epsilon,
                               const Vec& x0, const Vec& v, int quad_points = 9);

/// Default geometric schedule eps_k = eps0 / 2^k with eps0 = diameter/10.
std::vector<double> default_eps_schedule(const Box& domain, int stages);

// ---------------------------------------------------------------------------
// Sampled diagnostics backing the mollify report.
// ---------------------------------------------------------------------------

/// Tensor sample grid of interior points (cell centers), capped per axis.
std::vector<Vec> sample_grid(const Box& box, int per_axis);

/// max over the grid of the largest absolute entry difference between the
/// smoothed and the raw field.
double sup_field_deviation(const MollifiedField& smoothed,
                           const std::function<Mat(const Vec&)>& raw,
                           const std::vector<Vec>& grid);

/// max over the grid, axes and entries of |d(smoothed field)|.
double sup_field_derivative(const MollifiedField& smoothed,
                            const std::vector<Vec>& grid);

/// Largest sampled difference quotient |F(x + h e_l) - F(x)| / h of the raw
/// field, over the grid, axes and the given steps (clamped to the box).
double difference_quotient_bound(const std::function<Mat(const Vec&)>& raw,
                                 const Box& box, const std::vector<Vec>& grid,
                                 const std::vector<double>& steps);

struct MollifyStageReport {
  double epsilon = 0.0;
  double metric_deviation = 0.0;
  double constraint_deviation = 0.0;
  double metric_derivative_bound = 0.0;
  double constraint_derivative_bound = 0.0;
  double anchor_correction_norm = 0.0;
  double kernel_mass_deviation = 0.0;
};

MollifyStageReport measure_mollify_stage(const MechanicalSystem& base,
                                         const MollifiedSystem& stage,
                                         int grid_per_axis, int quad_points = 9);

}  // namespace nhsim

#endif  // NHSIM_MOLLIFY_HPP
