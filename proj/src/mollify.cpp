#include "nhsim/mollify.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace nhsim {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw SimError(ErrorCode::invalid_parameter, "quadrature order must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

namespace {

// Radial bump profile b(u) = exp(-1/(1-u)) for u = ||z||^2 < 1, else 0.
double bump_of_u(double u) {
  if (u >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - u));
}

double bump_derivative_of_u(double u) {
  if (u >= 1.0) return 0.0;
  const double w = 1.0 - u;
  return -std::exp(-1.0 / w) / (w * w);
}

// Dense reference for the unit-cube quadrature mass of the bump, per dimension.
double reference_bump_mass(int dim) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;

  const int q = dim <= 1 ? 400 : (dim == 2 ? 160 : (dim == 3 ? 72 : 36));
  std::vector<double> xs, ws;
  gauss_legendre(q, xs, ws);
  double mass = 0.0;
  std::vector<int> idx(dim, 0);
  while (true) {
    double w = 1.0, r2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      w *= ws[idx[d]];
      r2 += xs[idx[d]] * xs[idx[d]];
    }
    mass += w * bump_of_u(r2);
    int d = 0;
    while (d < dim && ++idx[d] == q) idx[d++] = 0;
    if (d == dim) break;
  }
  cache[dim] = mass;
  return mass;
}

}  // namespace

MollifiedField::MollifiedField(std::function<Mat(const Vec&)> field, int dim,
                               double epsilon, int quad_points,
                               std::optional<Box> clamp_box)
    : field_(std::move(field)), dim_(dim), epsilon_(epsilon),
      clamp_box_(std::move(clamp_box)) {
  if (!(epsilon > 0.0)) {
    throw SimError(ErrorCode::invalid_parameter, "mollification radius must be positive");
  }
  if (quad_points < 1) {
    throw SimError(ErrorCode::invalid_parameter, "quad_points must be >= 1");
  }

  std::vector<double> xs, ws;
  gauss_legendre(quad_points, xs, ws);

  // Tensor grid over the unit cube; nodes outside the unit ball carry zero
  // kernel weight and are dropped.
  std::vector<Vec> unit_nodes;
  std::vector<double> raw_weights;
  double raw_mass = 0.0;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec z(dim);
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      z[d] = xs[idx[d]];
      w *= ws[idx[d]];
    }
    const double u = z.squaredNorm();
    const double b = bump_of_u(u);
    if (b > 0.0) {
      unit_nodes.push_back(z);
      raw_weights.push_back(w * b);
      raw_mass += w * b;
    }
    int d = 0;
    while (d < dim && ++idx[d] == quad_points) idx[d++] = 0;
    if (d == dim) break;
  }

  if (!std::isfinite(raw_mass) || raw_mass <= 1e-300) {
    throw SimError(ErrorCode::quadrature_underflow,
                   "kernel mass vanished under quadrature; raise quad_points");
  }
  mass_deviation_ = std::abs(raw_mass / reference_bump_mass(dim) - 1.0);

  offsets_.resize(unit_nodes.size());
  value_weights_.resize(unit_nodes.size());
  derivative_weights_.resize(unit_nodes.size());
  double check = 0.0;
  for (std::size_t i = 0; i < unit_nodes.size(); ++i) {
    const Vec& z = unit_nodes[i];
    offsets_[i] = epsilon * z;
    value_weights_[i] = raw_weights[i] / raw_mass;
    check += value_weights_[i];
    // d_l of the normalized kernel: b'(u) 2 z_l / (epsilon * mass).
    const double u = z.squaredNorm();
    const double db = bump_derivative_of_u(u);
    const double gl_w = raw_weights[i] / bump_of_u(u);
    Vec dw(dim);
    for (int d = 0; d < dim; ++d) {
      dw[d] = gl_w * db * 2.0 * z[d] / (epsilon * raw_mass);
    }
    derivative_weights_[i] = dw;
  }
  if (!(std::abs(check - 1.0) <= 1e-8)) {
    throw SimError(ErrorCode::quadrature_underflow,
                   "normalized kernel mass deviates from 1");
  }
}

Vec MollifiedField::sample_point(const Vec& x, std::size_t i) const {
  Vec p = x - offsets_[i];
  if (clamp_box_) p = clamp_box_->clamp(p);
  return p;
}

Mat MollifiedField::value(const Vec& x) const {
  Mat acc;
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    const Mat f = field_(sample_point(x, i));
    if (i == 0) {
      acc = value_weights_[i] * f;
    } else {
      acc += value_weights_[i] * f;
    }
  }
  return acc;
}

Tensor3 MollifiedField::derivative(const Vec& x) const {
  Tensor3 out(dim_);
  bool first = true;
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    const Mat f = field_(sample_point(x, i));
    const Vec& dw = derivative_weights_[i];
    if (first) {
      for (int d = 0; d < dim_; ++d) out[d] = dw[d] * f;
      first = false;
    } else {
      for (int d = 0; d < dim_; ++d) out[d] += dw[d] * f;
    }
  }
  return out;
}

MollifiedField mollify_field(std::function<Mat(const Vec&)> field, int dim,
                             double epsilon, int quad_points,
                             std::optional<Box> clamp_box) {
  return MollifiedField(std::move(field), dim, epsilon, quad_points,
                        std::move(clamp_box));
}

Mat anchor_correction(const Mat& a_star_x0, const Vec& v) {
  const double vmax = v.lpNorm<Eigen::Infinity>();
  if (vmax == 0.0) {
    throw SimError(ErrorCode::zero_velocity, "anchor correction undefined for v = 0");
  }
  int jstar = 0;
  v.cwiseAbs().maxCoeff(&jstar);
  Mat b = Mat::Zero(a_star_x0.rows(), a_star_x0.cols());
  b.col(jstar) = -(a_star_x0 * v) / v[jstar];
  return b;
}

MollifiedSystem mollify_system(const MechanicalSystem& base, double epsilon,
                               const Vec& x0, const Vec& v, int quad_points) {
  if (!base.domain.contains_interior(x0) || !(base.potential(x0) < base.h)) {
    throw SimError(ErrorCode::out_of_domain, "anchor point outside the sublevel set");
  }
  const Vec residual0 = base.constraint(x0) * v;
  if (residual0.norm() > 1e-8) {
    std::ostringstream msg;
    msg << "base system anchor violated: ||a(x0) v|| = " << residual0.norm();
    throw SimError(ErrorCode::anchor_violation, msg.str());
  }

  auto metric_smoothed = std::make_shared<MollifiedField>(
      base.metric, base.m, epsilon, quad_points, base.domain);
  auto constraint_smoothed = std::make_shared<MollifiedField>(
      base.constraint, base.m, epsilon, quad_points, base.domain);

  Mat b;
  if (v.norm() == 0.0) {
    b = Mat::Zero(base.n, base.m);
  } else {
    b = anchor_correction(constraint_smoothed->value(x0), v);
  }

  MollifiedSystem out;
  out.epsilon = epsilon;
  out.anchor_x0 = x0;
  out.anchor_v = v;
  out.b = b;
  out.kernel_mass_deviation = metric_smoothed->kernel_mass_deviation();

  MechanicalSystem sys;
  sys.m = base.m;
  sys.n = base.n;
  sys.domain = base.domain;
  sys.h = base.h;
  sys.derivative_mode = DerivativeMode::analytic;
  sys.h_fd = base.h_fd;
  sys.c1 = base.c1;
  sys.c2 = base.c2;
  sys.name = base.name + "-mollified";

  sys.metric = [metric_smoothed](const Vec& x) { return metric_smoothed->value(x); };
  sys.metric_derivative = [metric_smoothed](const Vec& x) {
    return metric_smoothed->derivative(x);
  };
  sys.constraint = [constraint_smoothed, b](const Vec& x) {
    return (constraint_smoothed->value(x) + b).eval();
  };
  sys.constraint_derivative = [constraint_smoothed](const Vec& x) {
    return constraint_smoothed->derivative(x);
  };

  sys.potential = base.potential;
  if (base.derivative_mode == DerivativeMode::analytic && base.potential_gradient) {
    sys.potential_gradient = base.potential_gradient;
  } else {
    auto pot = base.potential;
    const double h_fd = base.h_fd;
    const int m = base.m;
    sys.potential_gradient = [pot, h_fd, m](const Vec& x) {
      Vec g(m);
      Vec xp = x, xm = x;
      for (int l = 0; l < m; ++l) {
        xp[l] = x[l] + h_fd;
        xm[l] = x[l] - h_fd;
        g[l] = (pot(xp) - pot(xm)) / (2.0 * h_fd);
        xp[l] = x[l];
        xm[l] = x[l];
      }
      return g;
    };
  }

  out.system = std::move(sys);
  return out;
}

std::vector<double> default_eps_schedule(const Box& domain, int stages) {
  std::vector<double> out;
  double eps = domain.diameter() / 10.0;
  for (int k = 0; k < stages; ++k) {
    out.push_back(eps);
    eps *= 0.5;
  }
  return out;
}

std::vector<Vec> sample_grid(const Box& box, int per_axis) {
  const int dim = box.dim();
  std::vector<Vec> pts;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec x(dim);
    for (int d = 0; d < dim; ++d) {
      const double t = (idx[d] + 0.5) / per_axis;
      x[d] = box.lo[d] + t * (box.hi[d] - box.lo[d]);
    }
    pts.push_back(x);
    int d = 0;
    while (d < dim && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == dim) break;
  }
  return pts;
}

double sup_field_deviation(const MollifiedField& smoothed,
                           const std::function<Mat(const Vec&)>& raw,
                           const std::vector<Vec>& grid) {
  double sup = 0.0;
  for (const Vec& x : grid) {
    const Mat d = smoothed.value(x) - raw(x);
    sup = std::max(sup, d.cwiseAbs().maxCoeff());
  }
  return sup;
}

double sup_field_derivative(const MollifiedField& smoothed,
                            const std::vector<Vec>& grid) {
  double sup = 0.0;
  for (const Vec& x : grid) {
    const Tensor3 d = smoothed.derivative(x);
    for (const Mat& dl : d) sup = std::max(sup, dl.cwiseAbs().maxCoeff());
  }
  return sup;
}

double difference_quotient_bound(const std::function<Mat(const Vec&)>& raw,
                                 const Box& box, const std::vector<Vec>& grid,
                                 const std::vector<double>& steps) {
  double sup = 0.0;
  const int dim = box.dim();
  for (const Vec& x : grid) {
    const Mat f0 = raw(x);
    for (int l = 0; l < dim; ++l) {
      for (double h : steps) {
        Vec xp = x;
        xp[l] = std::min(x[l] + h, box.hi[l]);
        const double actual = xp[l] - x[l];
        if (actual <= 0.0) continue;
        const Mat q = (raw(xp) - f0) / actual;
        sup = std::max(sup, q.cwiseAbs().maxCoeff());
      }
    }
  }
  return sup;
}

MollifyStageReport measure_mollify_stage(const MechanicalSystem& base,
                                         const MollifiedSystem& stage,
                                         int grid_per_axis, int quad_points) {
  MollifyStageReport rep;
  rep.epsilon = stage.epsilon;
  rep.anchor_correction_norm = stage.b.norm();
  rep.kernel_mass_deviation = stage.kernel_mass_deviation;

  const auto grid = sample_grid(base.domain, grid_per_axis);
  MollifiedField gsm(base.metric, base.m, stage.epsilon, quad_points, base.domain);
  MollifiedField asm_(base.constraint, base.m, stage.epsilon, quad_points, base.domain);
  rep.metric_deviation = sup_field_deviation(gsm, base.metric, grid);
  rep.constraint_deviation = sup_field_deviation(asm_, base.constraint, grid);
  rep.metric_derivative_bound = sup_field_derivative(gsm, grid);
  rep.constraint_derivative_bound = sup_field_derivative(asm_, grid);
  return rep;
}

}  // namespace nhsim
