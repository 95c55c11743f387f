#include "nhsim/weakform.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace nhsim {

double MultiplierTrack::max_deviation_from(const std::vector<Vec>& reference) const {
  if (reference.size() != gamma.size()) {
    throw SimError(ErrorCode::grid_mismatch, "multiplier reference grid differs");
  }
  double dev = 0.0;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    dev = std::max(dev, (gamma[j] - reference[j]).lpNorm<Eigen::Infinity>());
  }
  return dev;
}

std::vector<double> quadrature_weights(std::size_t count, double dt) {
  if (count < 3) {
    throw SimError(ErrorCode::too_few_nodes, "quadrature needs at least 3 nodes");
  }
  std::vector<double> w(count);
  if (count % 2 == 1) {
    // Composite Simpson.
    w.front() = dt / 3.0;
    w.back() = dt / 3.0;
    for (std::size_t j = 1; j + 1 < count; ++j) {
      w[j] = (j % 2 == 1) ? 4.0 * dt / 3.0 : 2.0 * dt / 3.0;
    }
  } else {
    // Even node count: composite trapezoid.
    w.front() = 0.5 * dt;
    w.back() = 0.5 * dt;
    for (std::size_t j = 1; j + 1 < count; ++j) w[j] = dt;
  }
  return w;
}

double quadrature(const std::vector<double>& samples, double dt) {
  const auto w = quadrature_weights(samples.size(), dt);
  double acc = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) acc += w[j] * samples[j];
  return acc;
}

namespace {

// 4th-order finite-difference derivative of vector-valued samples on a
// uniform grid; one-sided stencils at the two nodes nearest each end.
std::vector<Vec> fd_derivative(const std::vector<Vec>& f, double dt) {
  const std::size_t N = f.size();
  std::vector<Vec> d(N);
  const double s = 1.0 / (12.0 * dt);
  d[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
  d[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
  for (std::size_t j = 2; j + 2 < N; ++j) {
    d[j] = s * (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]);
  }
  d[N - 2] = s * (3.0 * f[N - 1] + 10.0 * f[N - 2] - 18.0 * f[N - 3] +
                  6.0 * f[N - 4] - f[N - 5]);
  d[N - 1] = s * (25.0 * f[N - 1] - 48.0 * f[N - 2] + 36.0 * f[N - 3] -
                  16.0 * f[N - 4] + 3.0 * f[N - 5]);
  return d;
}

// dL/dx at a sampled state: (dL/dx)_l = 1/2 v^T (dG/dx^l) v - dV/dx^l.
Vec lagrangian_x_gradient(const FieldSample& s, const Vec& v) {
  Vec g(s.x.size());
  for (int l = 0; l < s.x.size(); ++l) {
    g[l] = 0.5 * v.dot(s.dG[static_cast<std::size_t>(l)] * v) - s.gradV[l];
  }
  return g;
}

}  // namespace

TestFunction admissible_test(const MechanicalSystem& system, const Trajectory& traj,
                             const std::vector<std::function<double(double)>>& psi_hat) {
  const int m = system.m, n = system.n;
  if (static_cast<int>(psi_hat.size()) != m - n) {
    throw SimError(ErrorCode::invalid_parameter,
                   "need exactly m-n free coefficient functions");
  }
  if (traj.size() < 5) {
    throw SimError(ErrorCode::too_few_nodes,
                   "admissible test construction needs at least 5 nodes");
  }
  for (const auto& f : psi_hat) {
    if (std::abs(f(0.0)) > 1e-12) {
      throw SimError(ErrorCode::invalid_parameter,
                     "free coefficient functions must vanish at t = 0");
    }
  }

  // The pivot permutation of the first node is reused along the whole path;
  // stitching across pivot changes is not attempted.
  const FieldSample s0 = evaluate(system, traj.x.front());
  const std::vector<int>& pivot = s0.pivot;

  TestFunction psi;
  psi.values.resize(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const Mat a = system.constraint(traj.x[j]);
    Mat A(n, n), Q(n, m - n);
    for (int k = 0; k < n; ++k) A.col(k) = a.col(pivot[static_cast<std::size_t>(k)]);
    for (int q = 0; q < m - n; ++q) {
      Q.col(q) = a.col(pivot[static_cast<std::size_t>(n + q)]);
    }

    Eigen::ColPivHouseholderQR<Mat> qr(A);
    const Vec rdiag = qr.matrixR().diagonal().cwiseAbs();
    if (rdiag.minCoeff() <= 1e-10 * std::max(1.0, rdiag.maxCoeff())) {
      std::ostringstream msg;
      msg << "pivot block of node 0 degenerates at node " << j;
      throw SimError(ErrorCode::pivot_inconsistent, msg.str());
    }

    const double t = traj.time(j);
    Vec hat(m - n);
    for (int q = 0; q < m - n; ++q) hat[q] = psi_hat[static_cast<std::size_t>(q)](t);
    const Vec tilde = -qr.solve(Q * hat);

    Vec value = Vec::Zero(m);
    for (int k = 0; k < n; ++k) value[pivot[static_cast<std::size_t>(k)]] = tilde[k];
    for (int q = 0; q < m - n; ++q) {
      value[pivot[static_cast<std::size_t>(n + q)]] = hat[q];
    }
    psi.values[j] = value;
  }
  psi.derivs = fd_derivative(psi.values, traj.dt);
  psi.admissible = true;
  return psi;
}

TestFunction polynomial_test(const Trajectory& traj, int degree, int direction) {
  if (degree < 1) {
    throw SimError(ErrorCode::invalid_parameter,
                   "test degree must be >= 1 so that psi(0) = 0");
  }
  if (traj.empty()) {
    throw SimError(ErrorCode::too_few_nodes, "empty trajectory");
  }
  const int m = traj.m();
  if (direction < 0 || direction >= m) {
    throw SimError(ErrorCode::invalid_parameter, "test direction out of range");
  }
  const double tau = traj.tau();
  TestFunction psi;
  psi.values.resize(traj.size());
  psi.derivs.resize(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const double u = traj.time(j) / tau;
    Vec val = Vec::Zero(m), der = Vec::Zero(m);
    val[direction] = std::pow(u, degree);
    der[direction] = degree * std::pow(u, degree - 1) / tau;
    psi.values[j] = val;
    psi.derivs[j] = der;
  }
  psi.admissible = false;
  return psi;
}

double weak_functional(const MechanicalSystem& system, const Trajectory& traj,
                       const TestFunction& psi) {
  if (psi.size() != traj.size() || psi.dim() != traj.m()) {
    throw SimError(ErrorCode::grid_mismatch,
                   "test function and trajectory grids differ");
  }
  double scale = 0.0;
  for (const Vec& p : psi.values) scale = std::max(scale, p.lpNorm<Eigen::Infinity>());
  if (psi.values.front().lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, scale)) {
    throw SimError(ErrorCode::invalid_parameter, "test function must vanish at t = 0");
  }

  const auto w = quadrature_weights(traj.size(), traj.dt);
  double acc = 0.0;
  Vec p_momentum_last;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const FieldSample s = evaluate(system, traj.x[j]);
    const Vec dLdx = lagrangian_x_gradient(s, traj.v[j]);
    const Vec momentum = s.G * traj.v[j];
    acc += w[j] * (dLdx.dot(psi.values[j]) + momentum.dot(psi.derivs[j]));
    if (j + 1 == traj.size()) p_momentum_last = momentum;
  }
  return acc - p_momentum_last.dot(psi.values.back());
}

double weak_residual(const MechanicalSystem& system, const Trajectory& traj,
                     const TestFunction& psi) {
  if (!psi.admissible) {
    throw SimError(ErrorCode::invalid_parameter,
                   "weak residual is defined for admissible test functions");
  }
  const double F = weak_functional(system, traj, psi);
  std::vector<double> v2(psi.size()), d2(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    v2[j] = psi.values[j].squaredNorm();
    d2[j] = psi.derivs[j].squaredNorm();
  }
  const double h1 = std::sqrt(quadrature(v2, traj.dt) + quadrature(d2, traj.dt));
  return std::abs(F) / (1.0 + h1);
}

MultiplierTrack reconstruct_multipliers(const MechanicalSystem& system,
                                        const Trajectory& traj, int basis_size) {
  const int m = system.m, n = system.n;
  if (basis_size < n) {
    throw SimError(ErrorCode::invalid_parameter, "basis_size must be >= n");
  }
  if (traj.size() < 3) {
    throw SimError(ErrorCode::too_few_nodes, "reconstruction needs at least 3 nodes");
  }
  const std::size_t N = traj.size();
  const double tau = traj.tau();
  const int bs = basis_size;

  // Coarse piecewise-linear hat basis for gamma: bs nodes spanning [0, tau]
  // (a single constant function when bs = 1).
  const auto hat = [bs, tau](int J, double t) -> double {
    if (bs == 1) return 1.0;
    const double step = tau / (bs - 1);
    const double u = std::abs(t - J * step) / step;
    return u >= 1.0 ? 0.0 : 1.0 - u;
  };

  // Sample the fields once per node; both the matrix and the right-hand side
  // reuse these samples.
  const auto w = quadrature_weights(N, traj.dt);
  std::vector<Mat> a_samples(N);
  std::vector<Vec> dLdx(N), momentum(N);
  for (std::size_t j = 0; j < N; ++j) {
    const FieldSample s = evaluate(system, traj.x[j]);
    a_samples[j] = s.a;
    dLdx[j] = lagrangian_x_gradient(s, traj.v[j]);
    momentum[j] = s.G * traj.v[j];
  }

  const int rows = bs * m;
  const int cols = bs * n;
  Mat M = Mat::Zero(rows, cols);
  Vec rhs(rows);
  for (int p = 1; p <= bs; ++p) {
    for (int r = 0; r < m; ++r) {
      const int row = (p - 1) * m + r;
      double F = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        const double t = traj.time(j);
        const double u = t / tau;
        const double up = std::pow(u, p);
        const double dup = p * std::pow(u, p - 1) / tau;
        F += w[j] * (dLdx[j][r] * up + momentum[j][r] * dup);
        for (int J = 0; J < bs; ++J) {
          const double eta = hat(J, t);
          if (eta == 0.0) continue;
          for (int k = 0; k < n; ++k) {
            M(row, J * n + k) += w[j] * eta * a_samples[j](k, r) * up;
          }
        }
      }
      F -= momentum[N - 1][r];  // (t/tau)^p = 1 at t = tau
      // F(psi) = -Int gamma^T a psi dt under the multiplier convention of
      // compute_multipliers, hence the sign flip.
      rhs[row] = -F;
    }
  }

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
  cod.setThreshold(1e-10);
  if (cod.rank() < cols) {
    std::ostringstream msg;
    msg << "multiplier system rank " << cod.rank() << " < " << cols
        << " unknowns; constraint pairing degenerates";
    throw SimError(ErrorCode::rank_deficient, msg.str());
  }
  const Vec coef = cod.solve(rhs);

  MultiplierTrack track;
  track.fit_residual = (M * coef - rhs).norm() / (1.0 + rhs.norm());
  track.gamma.resize(N);
  std::vector<double> norm2(N);
  for (std::size_t j = 0; j < N; ++j) {
    Vec g = Vec::Zero(n);
    for (int J = 0; J < bs; ++J) {
      const double eta = hat(J, traj.time(j));
      if (eta == 0.0) continue;
      g += eta * coef.segment(J * n, n);
    }
    track.gamma[j] = g;
    norm2[j] = g.squaredNorm();
  }
  // Composite-trapezoid L2 norm of the samples.
  double acc = 0.5 * (norm2.front() + norm2.back());
  for (std::size_t j = 1; j + 1 < N; ++j) acc += norm2[j];
  track.l2_norm = std::sqrt(acc * traj.dt);
  return track;
}

}  // namespace nhsim
