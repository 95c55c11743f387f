// Command-line front end: simulate / verify / converge / reconstruct /
// sleigh-demo over a JSON run configuration.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <vector>

#include "nhsim/config.hpp"
#include "nhsim/convergence.hpp"
#include "nhsim/csvio.hpp"
#include "nhsim/dynamics.hpp"
#include "nhsim/mollify.hpp"
#include "nhsim/sleigh.hpp"
#include "nhsim/weakform.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nhsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIntegration = 3;
constexpr int kExitMalformed = 4;
constexpr int kExitRankDeficient = 5;

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string trajectory_path;  // overrides the config key
  bool project_initial_velocity = false;
  int stages = 0;  // 0 = keep the configured schedule
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int emit_error(const CliOptions& opts, const std::string& code,
               const std::string& message, int exit_code) {
  json err{{"error", {{"code", code}, {"message", message}}}};
  std::cerr << err.dump(2) << '\n';
  std::error_code ignored;
  fs::create_directories(opts.out_dir, ignored);
  write_json(fs::path(opts.out_dir) / "error.json", err);
  return exit_code;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_file:
    case ErrorCode::grid_mismatch:
    case ErrorCode::too_few_nodes:
      return kExitMalformed;
    case ErrorCode::rank_deficient:
      return kExitRankDeficient;
    default:
      return kExitIntegration;
  }
}

double nan_to_null_safe(double v) { return v; }

json number_or_null(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return nan_to_null_safe(v);
}

// Initial-data gate shared by simulate and converge.  Violations are
// configuration errors (exit 2), not integration failures.
void validate_initial_data(RunConfig& cfg, bool project) {
  if (!cfg.system.domain.contains_interior(cfg.x0)) {
    throw SimError(ErrorCode::out_of_domain, "x0 outside the domain");
  }
  if (project) {
    const FieldSample s = evaluate(cfg.system, cfg.x0);
    cfg.v0 = project_velocity(s, cfg.v0);
  }
  const double residual =
      (cfg.system.constraint(cfg.x0) * cfg.v0).lpNorm<Eigen::Infinity>();
  if (residual > 1e-10 * std::max(1.0, cfg.v0.norm())) {
    std::ostringstream msg;
    msg << "anchor violated: ||a(x0) v0|| = " << residual
        << " (pass --project-initial-velocity to project v0)";
    throw SimError(ErrorCode::anchor_violation, msg.str());
  }
  if (!(energy(cfg.system, cfg.x0, cfg.v0) < cfg.system.h)) {
    throw SimError(ErrorCode::left_sublevel, "initial energy not below h");
  }
}

int cmd_simulate(const CliOptions& opts, RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  IntegrateOptions iopts;
  iopts.stabilize = cfg.stabilize;
  Trajectory traj;
  try {
    traj = integrate(cfg.system, cfg.x0, cfg.v0, cfg.tau, cfg.dt, iopts);
  } catch (const SimError& err) {
    return emit_error(opts, error_code_name(err.code()), err.what(),
                      exit_code_for(err.code()));
  }
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  const double drift = energy_drift(traj);
  const double cres = traj.max_constraint_residual();
  const bool energy_ok = drift <= cfg.tol.energy_tol;
  const bool constraint_ok = cres <= cfg.tol.constraint_tol;

  fs::create_directories(opts.out_dir);
  write_trajectory_csv((fs::path(opts.out_dir) / "trajectory.csv").string(), traj);
  json summary{{"command", "simulate"},
               {"h_prime", traj.h_prime},
               {"energy_drift", drift},
               {"max_constraint_residual", cres},
               {"nodes", traj.size()},
               {"runtime_seconds", runtime},
               {"energy_within_tolerance", energy_ok},
               {"constraint_within_tolerance", constraint_ok},
               {"config", cfg.resolved}};
  write_json(fs::path(opts.out_dir) / "summary.json", summary);
  std::cout << summary.dump(2) << '\n';

  if (!energy_ok || !constraint_ok) {
    return emit_error(opts, "ToleranceExceeded",
                      "run completed but diagnostics exceed configured tolerances",
                      kExitIntegration);
  }
  return kExitOk;
}

int cmd_verify(const CliOptions& opts, RunConfig& cfg) {
  const std::string path =
      !opts.trajectory_path.empty() ? opts.trajectory_path : cfg.trajectory_path;
  if (path.empty()) {
    return emit_error(opts, "InvalidParameter",
                      "verify needs a trajectory (config key or --trajectory)",
                      kExitConfig);
  }
  try {
    const Trajectory traj = read_trajectory_csv(path);
    if (traj.m() != cfg.system.m || traj.n() != cfg.system.n) {
      throw SimError(ErrorCode::grid_mismatch,
                     "trajectory dimensions do not match the configured system");
    }

    // Seeded random admissible test family: free coefficients are polynomials
    // with coefficients in [-1, 1], degrees 1..test_degree.
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    const double tau = traj.tau();
    std::vector<double> residuals;
    for (int t = 0; t < cfg.test_count; ++t) {
      std::vector<std::function<double(double)>> psi_hat;
      for (int q = 0; q < cfg.system.m - cfg.system.n; ++q) {
        std::vector<double> c(static_cast<std::size_t>(cfg.test_degree));
        for (auto& ck : c) ck = coeff(rng);
        psi_hat.emplace_back([c, tau](double time) {
          double u = time / tau, acc = 0.0, up = 1.0;
          for (double ck : c) {
            up *= u;
            acc += ck * up;
          }
          return acc;
        });
      }
      const TestFunction psi = admissible_test(cfg.system, traj, psi_hat);
      residuals.push_back(weak_residual(cfg.system, traj, psi));
    }
    double max_res = 0.0, mean_res = 0.0;
    for (double r : residuals) {
      max_res = std::max(max_res, r);
      mean_res += r;
    }
    mean_res /= static_cast<double>(residuals.size());

    fs::create_directories(opts.out_dir);
    json report{{"command", "verify"},
                {"trajectory", path},
                {"residuals", residuals},
                {"max_residual", max_res},
                {"mean_residual", mean_res},
                {"residual_tolerance", cfg.tol.residual_tol},
                {"test_family",
                 {{"kind", "random polynomial free coefficients"},
                  {"count", cfg.test_count},
                  {"degree", cfg.test_degree},
                  {"seed", cfg.seed}}},
                {"config", cfg.resolved}};
    write_json(fs::path(opts.out_dir) / "verify-report.json", report);
    std::cout << report.dump(2) << '\n';

    if (max_res > cfg.tol.residual_tol) {
      return emit_error(opts, "ToleranceExceeded",
                        "max weak residual exceeds residual_tol", kExitIntegration);
    }
    return kExitOk;
  } catch (const SimError& err) {
    return emit_error(opts, error_code_name(err.code()), err.what(),
                      exit_code_for(err.code()));
  }
}

int cmd_converge(const CliOptions& opts, RunConfig& cfg) {
  std::vector<double> schedule = cfg.eps_schedule;
  if (opts.stages > 0 && static_cast<std::size_t>(opts.stages) < schedule.size()) {
    schedule.resize(static_cast<std::size_t>(opts.stages));
  }
  try {
    StudyOptions sopts;
    sopts.integrate.stabilize = cfg.stabilize;
    sopts.quad_points = cfg.quad_points;
    const ConvergenceReport report = convergence_study(
        cfg.system, cfg.x0, cfg.v0, cfg.tau, cfg.dt, schedule, cfg.alpha, sopts);

    json stages = json::array();
    for (const StageOutcome& s : report.stages) {
      json stage{{"epsilon", s.epsilon}, {"ok", s.ok}};
      if (s.ok) {
        stage["max_acceleration"] = s.max_acceleration;
        stage["energy_drift"] = s.energy_drift;
        stage["constraint_residual"] = s.constraint_residual;
        stage["anchor_residual"] = s.anchor_residual;
        stage["anchor_correction_norm"] = s.anchor_correction_norm;
      } else {
        stage["error_code"] = s.error_code;
        stage["error_message"] = s.error_message;
      }
      stages.push_back(stage);
    }
    json distances0 = json::array(), distances1 = json::array(),
         distances1a = json::array();
    for (std::size_t i = 0; i + 1 < report.stages.size(); ++i) {
      distances0.push_back(number_or_null(report.c0[i]));
      distances1.push_back(number_or_null(report.c1[i]));
      distances1a.push_back(number_or_null(report.c1alpha[i]));
    }

    // Field-level smoothing diagnostics per stage.
    json mstages = json::array();
    for (double eps : schedule) {
      try {
        MollifiedSystem ms =
            mollify_system(cfg.system, eps, cfg.x0, cfg.v0, cfg.quad_points);
        const MollifyStageReport mr = measure_mollify_stage(
            cfg.system, ms, cfg.grid_per_axis, cfg.quad_points);
        mstages.push_back({{"epsilon", mr.epsilon},
                           {"metric_deviation", mr.metric_deviation},
                           {"constraint_deviation", mr.constraint_deviation},
                           {"metric_derivative_bound", mr.metric_derivative_bound},
                           {"constraint_derivative_bound",
                            mr.constraint_derivative_bound},
                           {"anchor_correction_norm", mr.anchor_correction_norm},
                           {"kernel_mass_deviation", mr.kernel_mass_deviation}});
      } catch (const SimError& err) {
        mstages.push_back({{"epsilon", eps},
                           {"error_code", error_code_name(err.code())},
                           {"error_message", err.what()}});
      }
    }

    fs::create_directories(opts.out_dir);
    json out{{"command", "converge"},
             {"epsilons", schedule},
             {"alpha", report.alpha},
             {"stages", stages},
             {"c0", distances0},
             {"c1", distances1},
             {"c1alpha", distances1a},
             {"verdict", report.verdict},
             {"holder_pair_seed", report.holder_pair_seed},
             {"config", cfg.resolved}};
    write_json(fs::path(opts.out_dir) / "convergence-report.json", out);
    json mreport{{"command", "converge"},
                 {"grid_per_axis", cfg.grid_per_axis},
                 {"stages", mstages},
                 {"config", cfg.resolved}};
    write_json(fs::path(opts.out_dir) / "mollify-report.json", mreport);
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  } catch (const SimError& err) {
    return emit_error(opts, error_code_name(err.code()), err.what(),
                      exit_code_for(err.code()));
  }
}

int cmd_reconstruct(const CliOptions& opts, RunConfig& cfg) {
  const std::string path =
      !opts.trajectory_path.empty() ? opts.trajectory_path : cfg.trajectory_path;
  if (path.empty()) {
    return emit_error(opts, "InvalidParameter",
                      "reconstruct needs a trajectory (config key or --trajectory)",
                      kExitConfig);
  }
  try {
    const Trajectory traj = read_trajectory_csv(path);
    if (traj.m() != cfg.system.m || traj.n() != cfg.system.n) {
      throw SimError(ErrorCode::grid_mismatch,
                     "trajectory dimensions do not match the configured system");
    }
    const MultiplierTrack track =
        reconstruct_multipliers(cfg.system, traj, cfg.basis_size);

    fs::create_directories(opts.out_dir);
    write_multiplier_csv((fs::path(opts.out_dir) / "gamma.csv").string(), traj,
                         track);
    json report{{"command", "reconstruct"},
                {"trajectory", path},
                {"basis_size", cfg.basis_size},
                {"fit_residual", track.fit_residual},
                {"l2_norm", track.l2_norm},
                {"config", cfg.resolved}};
    write_json(fs::path(opts.out_dir) / "reconstruct-report.json", report);
    std::cout << report.dump(2) << '\n';
    return kExitOk;
  } catch (const SimError& err) {
    return emit_error(opts, error_code_name(err.code()), err.what(),
                      exit_code_for(err.code()));
  }
}

// Flat sleigh against its closed form: theta(t) = theta0 + omega t, the
// contact point moving on a circle of radius s/omega.
int cmd_sleigh_demo(const CliOptions& opts) {
  const double omega = 1.0, speed = 1.0, tau = 2.0 * M_PI;
  // Nominal step 1e-3, snapped so that dt divides tau exactly.
  const double dt = tau / std::round(tau / 1e-3);
  MechanicalSystem sleigh = build_sleigh_system(1.0, 1.0, 0, 0.3, 1e6);
  Vec x0 = Vec::Zero(3);
  Vec v0(3);
  v0 << speed, 0.0, omega;

  try {
    const Trajectory traj = integrate(sleigh, x0, v0, tau, dt, {});
    double max_err = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
      const double t = traj.time(j);
      Vec ref(3);
      ref << (speed / omega) * std::sin(omega * t),
          (speed / omega) * (1.0 - std::cos(omega * t)), omega * t;
      max_err = std::max(max_err, (traj.x[j] - ref).norm());
    }
    fs::create_directories(opts.out_dir);
    write_trajectory_csv((fs::path(opts.out_dir) / "trajectory.csv").string(),
                         traj);
    json summary{{"command", "sleigh-demo"},
                 {"omega", omega},
                 {"speed", speed},
                 {"tau", tau},
                 {"dt", dt},
                 {"circle_radius", speed / omega},
                 {"max_position_error", max_err},
                 {"energy_drift", energy_drift(traj)},
                 {"max_constraint_residual", traj.max_constraint_residual()}};
    write_json(fs::path(opts.out_dir) / "summary.json", summary);
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
  } catch (const SimError& err) {
    return emit_error(opts, error_code_name(err.code()), err.what(),
                      exit_code_for(err.code()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification toolkit for nonholonomic systems "
               "with rough constraint and metric fields"};
  app.require_subcommand(1);

  CliOptions opts;
  const auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", opts.config_path, "JSON run configuration");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory (default '.')");
    return cmd;
  };

  auto* simulate = add_common(app.add_subcommand("simulate", "integrate a trajectory"), true);
  simulate->add_flag("--project-initial-velocity", opts.project_initial_velocity,
                     "project v0 onto the constraint kernel before integrating");
  auto* verify = add_common(
      app.add_subcommand("verify", "weak-form residuals of a stored trajectory"), true);
  verify->add_option("--trajectory", opts.trajectory_path, "trajectory CSV path");
  auto* converge = add_common(
      app.add_subcommand("converge", "run the smoothing-schedule study"), true);
  converge->add_option("--stages", opts.stages,
                       "truncate the epsilon schedule to its first n stages");
  auto* reconstruct = add_common(
      app.add_subcommand("reconstruct", "least-squares multiplier recovery"), true);
  reconstruct->add_option("--trajectory", opts.trajectory_path, "trajectory CSV path");
  auto* demo = add_common(
      app.add_subcommand("sleigh-demo", "flat sleigh vs its closed form"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (demo->parsed()) return cmd_sleigh_demo(opts);

  RunConfig cfg;
  try {
    cfg = load_config(opts.config_path);
    if (simulate->parsed() || converge->parsed()) {
      validate_initial_data(cfg, opts.project_initial_velocity);
    }
  } catch (const SimError& err) {
    return emit_error(opts, error_code_name(err.code()), err.what(), kExitConfig);
  } catch (const std::exception& err) {
    return emit_error(opts, "InvalidParameter", err.what(), kExitConfig);
  }

  if (simulate->parsed()) return cmd_simulate(opts, cfg);
  if (verify->parsed()) return cmd_verify(opts, cfg);
  if (converge->parsed()) return cmd_converge(opts, cfg);
  if (reconstruct->parsed()) return cmd_reconstruct(opts, cfg);
  return kExitConfig;
}
