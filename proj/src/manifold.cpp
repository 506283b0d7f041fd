#include "hkgf/manifold.hpp"

#include <cmath>

namespace hkgf {

void CurvatureConfig::validate() const {
  require(c > 0.0 && std::isfinite(c), "curvature c must be positive and finite");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
}

double stable_atanh(double x) {
  // 0.5 * log((1+x)/(1-x)) rewritten so the argument near 1 keeps precision.
  if (x < 0.0) return -stable_atanh(-x);
  return 0.5 * std::log1p(2.0 * x / (1.0 - x));
}

double logmap_scale(double t) {
  if (t < 1e-4) {
    const double t2 = t * t;
    return 1.0 + t2 / 3.0 + t2 * t2 / 5.0;
  }
  return stable_atanh(t) / t;
}

namespace {

void check_inside(const BallPoint& p, const CurvatureConfig& cfg, const char* who) {
  require(p.coords.allFinite(), std::string(who) + ": non-finite coordinates");
  if (cfg.c * p.coords.squaredNorm() >= 1.0) {
    throw ValidationError(std::string(who) + ": point lies outside the Poincare ball");
  }
}

}  // namespace

BallPoint mobius_add(const BallPoint& a, const BallPoint& b, const CurvatureConfig& cfg) {
  cfg.validate();
  require(a.dim() == b.dim(), "mobius_add: dimension mismatch");
  check_inside(a, cfg, "mobius_add");
  check_inside(b, cfg, "mobius_add");

  const double c = cfg.c;
  const double dot = a.coords.dot(b.coords);
  const double na2 = a.coords.squaredNorm();
  const double nb2 = b.coords.squaredNorm();
  const double denom = 1.0 + 2.0 * c * dot + c * c * na2 * nb2;
  Vector out = ((1.0 + 2.0 * c * dot + c * nb2) * a.coords + (1.0 - c * na2) * b.coords) / denom;
  return BallPoint{std::move(out)};
}

double hyperbolic_distance(const BallPoint& a, const BallPoint& b, const CurvatureConfig& cfg) {
  cfg.validate();
  require(a.dim() == b.dim(), "hyperbolic_distance: dimension mismatch");
  check_inside(a, cfg, "hyperbolic_distance");
  check_inside(b, cfg, "hyperbolic_distance");

  const BallPoint neg_b{-b.coords};
  const BallPoint sum = mobius_add(a, neg_b, cfg);
  const double sqrt_c = std::sqrt(cfg.c);
  return 2.0 / sqrt_c * stable_atanh(sqrt_c * sum.coords.norm());
}

TangentVector log_map_origin(const BallPoint& z, const CurvatureConfig& cfg) {
  cfg.validate();
  check_inside(z, cfg, "log_map_origin");
  const double t = std::sqrt(cfg.c) * z.coords.norm();
  return TangentVector{logmap_scale(t) * z.coords};
}

BallPoint project_to_ball(const Vector& x, const CurvatureConfig& cfg) {
  cfg.validate();
  require(x.allFinite(), "project_to_ball: non-finite input");
  const double sqrt_c = std::sqrt(cfg.c);
  const double norm = x.norm();
  if (sqrt_c * norm < 1.0) return BallPoint{x};
  return BallPoint{(1.0 - cfg.epsilon) / (sqrt_c * norm) * x};
}

Matrix project_rows(const Matrix& x, const CurvatureConfig& cfg) {
  cfg.validate();
  require(x.allFinite(), "project_rows: non-finite input");
  const double sqrt_c = std::sqrt(cfg.c);
  Matrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (sqrt_c * norm >= 1.0) {
      out.row(i) = (1.0 - cfg.epsilon) / (sqrt_c * norm) * x.row(i);
    }
  }
  return out;
}

Matrix log_map_rows(const Matrix& x, const CurvatureConfig& cfg) {
  cfg.validate();
  const double sqrt_c = std::sqrt(cfg.c);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    require(sqrt_c * norm < 1.0, "log_map_rows: row outside the ball");
    out.row(i) = logmap_scale(sqrt_c * norm) * x.row(i);
  }
  return out;
}

}  // namespace hkgf
