#include "nhsim/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace nhsim {

double Trajectory::max_constraint_residual() const {
  double worst = 0.0;
  for (const auto& r : cres) worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
  return worst;
}

Vec generalized_force(const FieldSample& s, const Vec& v) {
  const int m = s.m();
  Vec F(m);
  Mat dGdt = Mat::Zero(m, m);  // sum_l v^l dG/dx^l
  for (int l = 0; l < m; ++l) dGdt += v[l] * s.dG[l];
  const Vec convective = dGdt * v;
  for (int j = 0; j < m; ++j) {
    F[j] = 0.5 * v.dot(s.dG[j] * v) - s.gradV[j] - convective[j];
  }
  return F;
}

namespace {

struct GramSolve {
  Eigen::LLT<Mat> metric_llt;   // factor of G
  Mat Ginv_at;                  // G^{-1} a^T
  Eigen::LLT<Mat> gram_llt;     // factor of a G^{-1} a^T
};

GramSolve factor_gram(const FieldSample& s) {
  GramSolve out;
  out.metric_llt.compute(s.G);
  if (out.metric_llt.info() != Eigen::Success) {
    throw SimError(ErrorCode::singular_gram, "metric is not positive definite");
  }
  out.Ginv_at = out.metric_llt.solve(s.a.transpose());
  Mat gram = s.a * out.Ginv_at;
  gram = 0.5 * (gram + gram.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    std::ostringstream msg;
    msg << "constraint Gram matrix is numerically singular (cond ~ "
        << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) << ")";
    throw SimError(ErrorCode::singular_gram, msg.str());
  }
  out.gram_llt.compute(gram);
  return out;
}

}  // namespace

Vec compute_multipliers(const FieldSample& s, const Vec& v) {
  const int m = s.m();
  GramSolve gs = factor_gram(s);
  Mat dadt = Mat::Zero(s.n(), m);  // sum_l v^l da/dx^l
  for (int l = 0; l < m; ++l) dadt += v[l] * s.da[l];
  const Vec F = generalized_force(s, v);
  const Vec rhs = -(dadt * v) - s.a * gs.metric_llt.solve(F);
  return gs.gram_llt.solve(rhs);
}

Vec acceleration(const FieldSample& s, const Vec& v) {
  GramSolve gs = factor_gram(s);
  Mat dadt = Mat::Zero(s.n(), s.m());
  for (int l = 0; l < s.m(); ++l) dadt += v[l] * s.da[l];
  const Vec F = generalized_force(s, v);
  const Vec rhs = -(dadt * v) - s.a * gs.metric_llt.solve(F);
  const Vec lambda = gs.gram_llt.solve(rhs);
  return gs.metric_llt.solve(s.a.transpose() * lambda + F);
}

Vec project_velocity(const FieldSample& s, const Vec& v) {
  GramSolve gs = factor_gram(s);
  return v - gs.Ginv_at * gs.gram_llt.solve(s.a * v);
}

Trajectory integrate(const MechanicalSystem& system, const Vec& x0, const Vec& v0,
                     double tau, double dt, const IntegrateOptions& opts) {
  if (!(tau > 0.0) || !(dt > 0.0)) {
    throw SimError(ErrorCode::invalid_parameter, "require tau > 0 and dt > 0");
  }
  const double steps_real = tau / dt;
  const long long N = std::llround(steps_real);
  if (N < 1 || std::abs(static_cast<double>(N) * dt - tau) > 1e-6 * tau) {
    throw SimError(ErrorCode::invalid_parameter, "dt must divide tau");
  }

  const Vec cres0 = constraint_residual(system, x0, v0);
  if (cres0.lpNorm<Eigen::Infinity>() > 1e-10) {
    std::ostringstream msg;
    msg << "anchor violated: ||a(x0) v0|| = " << cres0.lpNorm<Eigen::Infinity>();
    throw SimError(ErrorCode::anchor_violation, msg.str());
  }
  const double h_prime = energy(system, x0, v0);
  if (!(h_prime < system.h)) {
    throw SimError(ErrorCode::left_sublevel,
                   "initial energy reaches the cap h; no sublevel room");
  }

  auto check_sublevel = [&](const Vec& x) {
    if (!system.domain.contains_interior(x) || !(system.potential(x) < system.h)) {
      throw SimError(ErrorCode::left_sublevel, "trajectory left the energy sublevel set");
    }
  };

  auto accel_at = [&](const Vec& x, const Vec& v) {
    check_sublevel(x);
    const FieldSample s = evaluate(system, x);
    return acceleration(s, v);
  };

  Trajectory traj;
  traj.dt = dt;
  traj.h_prime = h_prime;
  traj.x.reserve(N + 1);
  traj.v.reserve(N + 1);
  traj.acc.reserve(N + 1);
  traj.energy.reserve(N + 1);
  traj.cres.reserve(N + 1);

  Vec x = x0;
  Vec v = v0;

  auto record = [&](const Vec& xn, const Vec& vn) {
    const FieldSample s = evaluate(system, xn);
    traj.x.push_back(xn);
    traj.v.push_back(vn);
    traj.acc.push_back(acceleration(s, vn));
    traj.energy.push_back(kinetic_energy(s.G, vn) + s.V);
    traj.cres.push_back(s.a * vn);
  };

  check_sublevel(x0);
  record(x, v);

  const double step_drift_cap = 1e-3 * std::abs(h_prime);
  double energy_before = h_prime;

  for (long long j = 0; j < N; ++j) {
    const Vec k1x = v;
    const Vec k1v = accel_at(x, v);
    const Vec k2x = v + 0.5 * dt * k1v;
    const Vec k2v = accel_at(x + 0.5 * dt * k1x, k2x);
    const Vec k3x = v + 0.5 * dt * k2v;
    const Vec k3v = accel_at(x + 0.5 * dt * k2x, k3x);
    const Vec k4x = v + dt * k3v;
    const Vec k4v = accel_at(x + dt * k3x, k4x);

    x += (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

    check_sublevel(x);
    const FieldSample s = evaluate(system, x);
    if (opts.stabilize) {
      v = project_velocity(s, v);
    }
    const double energy_now = kinetic_energy(s.G, v) + s.V;
    if (std::abs(energy_now - energy_before) > step_drift_cap) {
      std::ostringstream msg;
      msg << "energy drift " << std::abs(energy_now - energy_before) << " in one step at t="
          << (static_cast<double>(j) + 1.0) * dt << "; reduce dt";
      throw SimError(ErrorCode::step_too_large, msg.str());
    }
    energy_before = energy_now;

    traj.x.push_back(x);
    traj.v.push_back(v);
    traj.acc.push_back(acceleration(s, v));
    traj.energy.push_back(energy_now);
    traj.cres.push_back(s.a * v);
  }

  return traj;
}

double energy_drift(const Trajectory& traj) {
  if (traj.size() == 0) {
    throw SimError(ErrorCode::too_few_nodes, "empty trajectory");
  }
  double worst = 0.0;
  for (double e : traj.energy) worst = std::max(worst, std::abs(e - traj.h_prime));
  return worst;
}

}  // namespace nhsim
