// Distances between trajectories of the smoothing sequence and the
// epsilon-schedule study with its Cauchy-decay verdict.
#ifndef NHSIM_CONVERGENCE_HPP
#define NHSIM_CONVERGENCE_HPP

#include <optional>
#include <string>
#include <vector>

#include "nhsim/dynamics.hpp"
#include "nhsim/mollify.hpp"
#include "nhsim/model.hpp"

namespace nhsim {

// Outcome of one smoothing stage.  On failure `ok` is false and the error
// fields say why; diagnostics of other stages are unaffected.
struct StageOutcome {
  double epsilon = 0.0;
  bool ok = false;
  std::string error_code;
  std::string error_message;
  double max_acceleration = 0.0;      // K-hat: max_j ||acc_j||
  double energy_drift = 0.0;
  double constraint_residual = 0.0;   // max_j ||a(x_j) v_j||_inf
  double anchor_residual = 0.0;       // ||a_eps(x0) v0||_inf after correction
  double anchor_correction_norm = 0.0;
  std::optional<Trajectory> trajectory;
};

struct ConvergenceReport {
  std::vector<double> epsilons;
  std::vector<StageOutcome> stages;
  // Consecutive-pair distances; entry i compares stages i and i+1 and is NaN
  // when either stage failed.
  std::vector<double> c0;
  std::vector<double> c1;
  std::vector<double> c1alpha;
  double alpha = 0.0;
  std::uint64_t holder_pair_seed = 0;  // seed of the pair subsample, if any
  bool verdict = false;
};

struct StudyOptions {
  IntegrateOptions integrate;
  int quad_points = 9;
  bool keep_trajectories = true;
};

// max_j ||x1_j - x2_j||.  Throws GridMismatch unless grids coincide.
double c0_distance(const Trajectory& t1, const Trajectory& t2);

// c0 distance plus max_j ||v1_j - v2_j||.
double c1_distance(const Trajectory& t1, const Trajectory& t2);

// c1 distance plus the discrete Holder seminorm of the velocity difference,
//   max_{j<k} ||dv_j - dv_k|| / |t_j - t_k|^alpha,
// over all pairs for up to 2000 nodes and a seeded stratified subsample of
// 1e6 pairs otherwise.  Throws InvalidAlpha unless 0 < alpha < 1.
double c1alpha_distance(const Trajectory& t1, const Trajectory& t2, double alpha);

// Runs the smoothing schedule: per epsilon, mollify, integrate, and record
// diagnostics; stage errors are recorded rather than propagated.  Verdict is
// true iff every stage succeeded, consecutive C1 distances decay (each at
// most 1.1x the previous, with an absolute 1e-12 floor for ties) and the
// max-acceleration bound is uniform across stages (spread <= 2x).
ConvergenceReport convergence_study(const MechanicalSystem& system, const Vec& x0,
                                    const Vec& v0, double tau, double dt,
                                    const std::vector<double>& eps_schedule,
                                    double alpha, const StudyOptions& opts = {});

}  // namespace nhsim

#endif  // NHSIM_CONVERGENCE_HPP
