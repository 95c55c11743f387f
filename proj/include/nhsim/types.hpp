#ifndef NHSIM_TYPES_HPP
#define NHSIM_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace nhsim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Third-order array of field derivatives: tensor[l](i,j) = d field(i,j) / d x^l.
using Tensor3 = std::vector<Mat>;

enum class ErrorCode {
  out_of_domain,
  degenerate_constraint,
  non_finite_input,
  invalid_parameter,
  quadrature_underflow,
  zero_velocity,
  anchor_violation,
  singular_gram,
  left_sublevel,
  step_too_large,
  pivot_inconsistent,
  grid_mismatch,
  too_few_nodes,
  rank_deficient,
  invalid_alpha,
  malformed_file,
};

const char* error_code_name(ErrorCode code);

/// Domain error carrying a machine-readable code alongside the message.
class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Axis-aligned box in R^m. Field evaluation is restricted to the open interior;
/// mollification clamps sample points back onto the box.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains_interior(const Vec& x) const {
    for (int i = 0; i < dim(); ++i) {
      if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
    }
    return true;
  }

  Vec clamp(const Vec& x) const {
    Vec y = x;
    for (int i = 0; i < dim(); ++i) {
      y[i] = std::min(std::max(y[i], lo[i]), hi[i]);
    }
    return y;
  }

  double diameter() const { return (hi - lo).norm(); }
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace nhsim

#endif  // NHSIM_TYPES_HPP
