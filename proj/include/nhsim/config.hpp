// JSON run configuration shared by every command-line command.
#ifndef NHSIM_CONFIG_HPP
#define NHSIM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhsim/model.hpp"

namespace nhsim {

struct Tolerances {
  double energy_tol = 1e-8;
  double constraint_tol = 1e-10;
  double residual_tol = 1e-8;
};

// Fully-resolved run configuration.  `resolved` holds the JSON with all
// defaults filled in, so reports can echo the exact inputs of a run.
struct RunConfig {
  MechanicalSystem system;
  Vec x0;
  Vec v0;
  double tau = 1.0;
  double dt = 1e-3;
  std::vector<double> eps_schedule;  // singleton when only `epsilon` is given
  double alpha = 0.5;
  int basis_size = 4;
  int quad_points = 9;
  bool stabilize = true;
  Tolerances tol;
  int test_degree = 4;
  int test_count = 10;
  std::uint64_t seed = 20230815;
  int grid_per_axis = 12;
  std::string trajectory_path;  // optional input for verify/reconstruct

  nlohmann::json resolved;
};

// Parses and validates a configuration.  Throws InvalidParameter on schema or
// invariant violations (tau/dt not commensurate, dimension mismatches,
// non-decreasing epsilon schedules, unknown system kinds).
RunConfig parse_config(const nlohmann::json& j);

// Reads the file and delegates to parse_config.  Throws MalformedFile when the
// file is missing or not JSON.
RunConfig load_config(const std::string& path);

}  // namespace nhsim

#endif  // NHSIM_CONFIG_HPP
