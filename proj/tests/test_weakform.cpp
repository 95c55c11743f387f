#include <doctest.h>

#include <cmath>
#include <random>

#include "nhsim/dynamics.hpp"
#include "nhsim/model.hpp"
#include "nhsim/sleigh.hpp"
#include "nhsim/weakform.hpp"

using namespace nhsim;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

MechanicalSystem line_system(double potential_slope) {
  MechanicalSystem s;
  s.m = 2;
  s.n = 1;
  s.h = 1e6;
  s.domain = Box{Vec::Constant(2, -50.0), Vec::Constant(2, 50.0)};
  s.metric = [](const Vec&) { return Mat::Identity(2, 2); };
  s.potential = [potential_slope](const Vec& x) { return potential_slope * x[0]; };
  s.constraint = [](const Vec&) {
    Mat a(1, 2);
    a << 1.0, 0.0;
    return a;
  };
  s.derivative_mode = DerivativeMode::central_difference;
  return s;
}

MechanicalSystem circle_system() {
  MechanicalSystem s = line_system(0.0);
  s.constraint = [](const Vec& x) {
    Mat a(1, 2);
    a << x[1], x[0];
    return a;
  };
  return s;
}

TestFunction combine(double al, const TestFunction& p, double be,
                     const TestFunction& q) {
  TestFunction out;
  out.admissible = p.admissible && q.admissible;
  for (std::size_t j = 0; j < p.size(); ++j) {
    out.values.push_back(al * p.values[j] + be * q.values[j]);
    out.derivs.push_back(al * p.derivs[j] + be * q.derivs[j]);
  }
  return out;
}

}  // namespace

TEST_CASE("composite quadrature hand values") {
  // constant on [0, 1], five nodes
  CHECK(quadrature({1, 1, 1, 1, 1}, 0.25) == doctest::Approx(1.0));

  // Simpson is exact on cubics: int_0^1 t^3 dt = 1/4
  std::vector<double> cubic;
  const int N = 100;
  for (int j = 0; j <= N; ++j) cubic.push_back(std::pow((double)j / N, 3));
  CHECK(quadrature(cubic, 1.0 / N) == doctest::Approx(0.25).epsilon(1e-14));

  // smooth integrand: int_0^1 sin t dt = 1 - cos 1
  std::vector<double> sine;
  for (int j = 0; j <= N; ++j) sine.push_back(std::sin((double)j / N));
  CHECK(std::abs(quadrature(sine, 0.01) - (1.0 - std::cos(1.0))) <= 1e-9);

  // even node count falls back to trapezoid, exact for linear data
  CHECK(quadrature({0.0, 0.1, 0.2, 0.3}, 0.1) == doctest::Approx(0.045));

  CHECK_THROWS_AS(quadrature({1.0, 2.0}, 0.1), SimError);
}

TEST_CASE("quadrature weights realize the same sum") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (std::size_t count : {5u, 6u, 101u}) {
    std::vector<double> samples(count);
    for (auto& v : samples) v = U(rng);
    std::vector<double> w = quadrature_weights(count, 0.01);
    REQUIRE(w.size() == count);
    double dot = 0.0;
    for (std::size_t j = 0; j < count; ++j) dot += w[j] * samples[j];
    CHECK(dot == doctest::Approx(quadrature(samples, 0.01)).epsilon(1e-14));
  }
}

TEST_CASE("admissible construction: zero input, zero output") {
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 0.05);
  std::vector<std::function<double(double)>> ph(1);
  ph[0] = [](double) { return 0.0; };
  TestFunction psi = admissible_test(s, traj, ph);
  REQUIRE(psi.size() == traj.size());
  CHECK(psi.admissible);
  for (std::size_t j = 0; j < psi.size(); ++j) {
    CHECK(psi.values[j].norm() == 0.0);
    CHECK(psi.derivs[j].norm() == 0.0);
  }
}

TEST_CASE("admissible construction fills constrained components") {
  // a = (1, 0): the constrained slot is forced to zero, psi = (0, psi_hat),
  // and the 4th-order difference stencils are exact on degree-4 data.
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 0.01);
  std::vector<std::function<double(double)>> ph(1);
  ph[0] = [](double t) { return t * t * t * t; };
  TestFunction psi = admissible_test(s, traj, ph);
  CHECK(psi.values[0].norm() == 0.0);
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double t = traj.time(j);
    CHECK(std::abs(psi.values[j][0]) <= 1e-14);
    CHECK(psi.values[j][1] == doctest::Approx(std::pow(t, 4)).epsilon(1e-13));
    CHECK(psi.derivs[j][1] ==
          doctest::Approx(4.0 * t * t * t).epsilon(1e-10));
    CHECK(std::abs(psi.derivs[j][0]) <= 1e-12);
  }

  // a = (1, 1), psi_hat = t: psi = (-t, t)
  MechanicalSystem s2 = line_system(0.0);
  s2.constraint = [](const Vec&) {
    Mat a(1, 2);
    a << 1.0, 1.0;
    return a;
  };
  Trajectory traj2 = integrate(s2, vec2(0, 0), vec2(1, -1), 1.0, 0.01);
  ph[0] = [](double t) { return t; };
  TestFunction psi2 = admissible_test(s2, traj2, ph);
  for (std::size_t j = 0; j < psi2.size(); ++j) {
    const double t = traj2.time(j);
    CHECK(psi2.values[j][0] == doctest::Approx(-t).epsilon(1e-12));
    CHECK(psi2.values[j][1] == doctest::Approx(t).epsilon(1e-12));
    CHECK(std::abs((s2.constraint(traj2.x[j]) * psi2.values[j])(0)) <= 1e-14);
  }
}

TEST_CASE("admissibility holds along curved trajectories") {
  MechanicalSystem s = build_sleigh_system(1.0, 1.0, 0, 0.3, 1e6);
  Vec v0(3);
  v0 << 1, 0, 1;
  Trajectory traj = integrate(s, Vec::Zero(3), v0, 1.0, 1e-3);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double c1 = U(rng), c2 = U(rng), d1 = U(rng), d2 = U(rng);
    std::vector<std::function<double(double)>> ph(2);
    ph[0] = [=](double t) { return c1 * t + c2 * std::sin(t); };
    ph[1] = [=](double t) { return d1 * t * t + d2 * (1.0 - std::cos(t)); };
    TestFunction psi = admissible_test(s, traj, ph);
    CHECK(psi.admissible);
    CHECK(psi.values[0].norm() == 0.0);
    double scale = 0.0, worst = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
      const Mat a = s.constraint(traj.x[j]);
      worst = std::max(worst, (a * psi.values[j]).norm());
      scale = std::max(scale, a.norm() * psi.values[j].norm());
    }
    CHECK(worst <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("paths that degenerate the initial pivot block are rejected") {
  // theta sweeping 0..pi kills the y-column of the knife-edge constraint at
  // pi/2; the node-0 pivot cannot be used across that point.
  MechanicalSystem s = build_sleigh_system(1.0, 1.0, 0, 0.3, 1e6);
  Trajectory traj;
  traj.dt = M_PI / 100.0;
  for (int j = 0; j <= 100; ++j) {
    Vec x(3);
    x << 0.0, 0.0, traj.dt * j;
    traj.x.push_back(x);
    traj.v.push_back(Vec::Zero(3));
    traj.acc.push_back(Vec::Zero(3));
    traj.energy.push_back(0.0);
    traj.cres.push_back(Vec::Zero(1));
  }
  traj.h_prime = 0.0;
  std::vector<std::function<double(double)>> ph(2);
  ph[0] = [](double t) { return t; };
  ph[1] = [](double t) { return t * t; };
  try {
    admissible_test(s, traj, ph);
    CHECK_MESSAGE(false, "expected PivotInconsistent");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::pivot_inconsistent);
  }
}

TEST_CASE("admissible construction needs enough nodes for the stencils") {
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 0.03, 0.01);  // 4 nodes
  std::vector<std::function<double(double)>> ph(1);
  ph[0] = [](double t) { return t; };
  try {
    admissible_test(s, traj, ph);
    CHECK_MESSAGE(false, "expected TooFewNodes");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::too_few_nodes);
  }
}

TEST_CASE("polynomial test functions carry exact derivatives") {
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 2.0, 0.01);
  TestFunction psi = polynomial_test(traj, 3, 1);
  CHECK(!psi.admissible);
  for (std::size_t j = 0; j < psi.size(); j += 37) {
    const double u = traj.time(j) / traj.tau();
    CHECK(psi.values[j][1] == doctest::Approx(u * u * u));
    CHECK(psi.values[j][0] == 0.0);
    CHECK(psi.derivs[j][1] ==
          doctest::Approx(3.0 * u * u / traj.tau()).epsilon(1e-13));
  }
  CHECK(psi.values[0].norm() == 0.0);
}

TEST_CASE("weak functional: hand value and linearity") {
  MechanicalSystem s = line_system(1.0);  // V = x1
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 1e-3);

  // psi = (t, 0): dL/dx . psi = -t, the velocity term vanishes, so
  // F = -tau^2/2 = -1/2.
  TestFunction p1 = polynomial_test(traj, 1, 0);
  CHECK(weak_functional(s, traj, p1) == doctest::Approx(-0.5).epsilon(1e-10));

  TestFunction p2 = polynomial_test(traj, 2, 1);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double al = U(rng), be = U(rng);
    const double lhs = weak_functional(s, traj, combine(al, p1, be, p2));
    const double rhs = al * weak_functional(s, traj, p1) +
                       be * weak_functional(s, traj, p2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("weak residual vanishes on exact solutions") {
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 1e-3);
  std::vector<std::function<double(double)>> ph(1);
  ph[0] = [](double t) { return t * t; };
  TestFunction psi = admissible_test(s, traj, ph);
  CHECK(weak_residual(s, traj, psi) <= 1e-10);

  // psi == 0 gives exactly zero
  ph[0] = [](double) { return 0.0; };
  CHECK(weak_residual(s, traj, admissible_test(s, traj, ph)) == 0.0);
}

TEST_CASE("weak residual decays at RK4 order on the sleigh") {
  MechanicalSystem s = build_sleigh_system(1.0, 1.0, 0, 0.3, 1e6);
  Vec v0(3);
  v0 << 1, 0, 1;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> worst;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    Trajectory traj = integrate(s, Vec::Zero(3), v0, 1.0, dt);
    double w = 0.0;
    std::mt19937 r2(7);
    for (int trial = 0; trial < 10; ++trial) {
      const double c1 = U(r2), c2 = U(r2), c3 = U(r2), c4 = U(r2);
      const double d1 = U(r2), d2 = U(r2), d3 = U(r2), d4 = U(r2);
      std::vector<std::function<double(double)>> ph(2);
      ph[0] = [=](double t) { return c1 * t + c2 * t * t + c3 * t * t * t + c4 * t * t * t * t; };
      ph[1] = [=](double t) { return d1 * t + d2 * t * t + d3 * t * t * t + d4 * t * t * t * t; };
      w = std::max(w, weak_residual(s, traj, admissible_test(s, traj, ph)));
    }
    worst.push_back(w);
  }
  const double order = std::log2(worst[0] / worst[2]) / 2.0;
  CHECK(order >= 3.5);
}

TEST_CASE("weak residual rejects mismatched grids and raw test data") {
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 0.01);
  Trajectory other = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 0.02);
  std::vector<std::function<double(double)>> ph(1);
  ph[0] = [](double t) { return t; };
  TestFunction psi = admissible_test(s, other, ph);
  try {
    weak_residual(s, traj, psi);
    CHECK_MESSAGE(false, "expected GridMismatch");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::grid_mismatch);
  }

  TestFunction raw = polynomial_test(traj, 1, 0);  // not admissible
  CHECK_THROWS_AS(weak_residual(s, traj, raw), SimError);
}

TEST_CASE("multiplier recovery: free motion gives a zero track") {
  MechanicalSystem s = line_system(0.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 1e-3);
  MultiplierTrack mt = reconstruct_multipliers(s, traj, 4);
  REQUIRE(mt.gamma.size() == traj.size());
  for (const Vec& g : mt.gamma) CHECK(g.norm() <= 1e-10);
  CHECK(mt.fit_residual <= 1e-10);
  CHECK(mt.l2_norm <= 1e-10);
}

TEST_CASE("multiplier recovery reproduces the constant unit track") {
  MechanicalSystem s = line_system(1.0);  // V = x1, lambda = 1 along the wall
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 1e-3);
  MultiplierTrack mt = reconstruct_multipliers(s, traj, 4);
  for (const Vec& g : mt.gamma) CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-6));
  // ||gamma||_{L2([0,1])} = 1 for the unit track
  CHECK(mt.l2_norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mt.fit_residual <= 1e-10);
}

TEST_CASE("recovered track matches the pointwise multiplier on the sleigh") {
  MechanicalSystem s = build_sleigh_system(1.0, 1.0, 0, 0.3, 1e6);
  Vec v0(3);
  v0 << 1, 0, 1;
  Trajectory traj = integrate(s, Vec::Zero(3), v0, 2.0, 1e-3);
  MultiplierTrack mt = reconstruct_multipliers(s, traj, 4);
  REQUIRE(mt.gamma.size() == traj.size());
  // closed form: lambda = -m s omega = -1, constant in time
  for (const Vec& g : mt.gamma) CHECK(g[0] == doctest::Approx(-1.0).epsilon(1e-8));

  // against the pointwise formula along the whole trajectory
  std::vector<Vec> pointwise;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    FieldSample fs = evaluate(s, traj.x[j]);
    pointwise.push_back(compute_multipliers(fs, traj.v[j]));
  }
  CHECK(mt.max_deviation_from(pointwise) <= 1e-8);
}

TEST_CASE("track resolution improves with basis size on varying multipliers") {
  MechanicalSystem c = circle_system();
  Trajectory traj = integrate(c, vec2(1, 1), vec2(1, -1), 1.0, 1e-3);
  double dev6 = 0.0, dev10 = 0.0;
  for (int bs : {6, 10}) {
    MultiplierTrack mt = reconstruct_multipliers(c, traj, bs);
    double worst = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
      FieldSample fs = evaluate(c, traj.x[j]);
      Vec lam = compute_multipliers(fs, traj.v[j]);
      worst = std::max(worst, std::abs(mt.gamma[j][0] - lam[0]));
    }
    (bs == 6 ? dev6 : dev10) = worst;
  }
  CHECK(dev6 <= 5e-2);    // coarse piecewise-linear representation error
  CHECK(dev10 <= 2e-2);
  CHECK(dev10 < dev6);
}

TEST_CASE("the track norm is the trapezoid norm of its samples") {
  MechanicalSystem c = circle_system();
  Trajectory traj = integrate(c, vec2(1, 1), vec2(1, -1), 1.0, 1e-3);
  MultiplierTrack mt = reconstruct_multipliers(c, traj, 8);
  const std::size_t N = traj.size();
  double acc = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double w = (j == 0 || j + 1 == N) ? 0.5 : 1.0;
    acc += w * traj.dt * mt.gamma[j].squaredNorm();
  }
  CHECK(mt.l2_norm == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
  CHECK(mt.max_deviation_from(mt.gamma) == 0.0);
}

TEST_CASE("adding an admissible direction does not move the track") {
  // Admissible test functions pair to zero against the constraint row, so an
  // augmented least-squares system recovers the same gamma.
  MechanicalSystem s = line_system(1.0);
  Trajectory traj = integrate(s, vec2(0, 0), vec2(0, 1), 1.0, 1e-3);
  const int bs = 4;
  MultiplierTrack base = reconstruct_multipliers(s, traj, bs);

  const std::size_t N = traj.size();
  std::vector<double> w = quadrature_weights(N, traj.dt);
  auto hat = [&](int J, double t) {
    const double width = traj.tau() / (bs - 1);
    const double tj = width * J;
    return std::max(0.0, 1.0 - std::abs(t - tj) / width);
  };
  auto fill_row = [&](const TestFunction& psi, Eigen::RowVectorXd& row) {
    row.setZero(bs);
    for (std::size_t j = 0; j < N; ++j) {
      const double apsi = (s.constraint(traj.x[j]) * psi.values[j])(0);
      for (int J = 0; J < bs; ++J) row[J] += w[j] * hat(J, traj.time(j)) * apsi;
    }
  };

  Mat M(2 * bs + 1, bs);
  Vec rhs(2 * bs + 1);
  int r = 0;
  for (int p = 1; p <= bs; ++p)
    for (int dir = 0; dir < 2; ++dir) {
      TestFunction psi = polynomial_test(traj, p, dir);
      Eigen::RowVectorXd row;
      fill_row(psi, row);
      M.row(r) = row;
      rhs[r] = -weak_functional(s, traj, psi);
      ++r;
    }
  std::vector<std::function<double(double)>> ph(1);
  ph[0] = [](double t) { return t * t * t; };
  TestFunction adm = admissible_test(s, traj, ph);
  Eigen::RowVectorXd row;
  fill_row(adm, row);
  CHECK(row.norm() <= 1e-12);  // admissible rows vanish identically
  M.row(r) = row;
  rhs[r] = -weak_functional(s, traj, adm);

  auto solve = [](const Mat& A, const Vec& b) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
    cod.setThreshold(1e-10);
    return Vec(cod.solve(b));
  };
  Vec plain = solve(M.topRows(2 * bs), rhs.head(2 * bs));
  Vec augmented = solve(M, rhs);
  double shift = 0.0, scale = 0.0;
  for (int J = 0; J < bs; ++J) {
    shift = std::max(shift, std::abs(augmented[J] - plain[J]));
    scale = std::max(scale, std::abs(plain[J]));
    // the coefficients recover the constant unit multiplier, like the library
    CHECK(std::abs(plain[J] - 1.0) <= 1e-6);
  }
  CHECK(shift <= 1e-10 * std::max(1.0, scale));
  CHECK(std::abs(base.gamma.front()[0] - 1.0) <= 1e-6);
}

TEST_CASE("oversized polynomial families lose rank") {
  MechanicalSystem c = circle_system();
  Trajectory traj = integrate(c, vec2(1, 1), vec2(1, -1), 1.0, 1e-3);
  try {
    reconstruct_multipliers(c, traj, 24);
    CHECK_MESSAGE(false, "expected RankDeficient");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::rank_deficient);
  }
  // and the basis must at least resolve the constraint count
  CHECK_THROWS_AS(reconstruct_multipliers(c, traj, 0), SimError);
}
