#pragma once

#include "hkgf/common.hpp"

namespace hkgf {

// Poincare ball of curvature -c: { z : c * ||z||^2 < 1 }.
struct CurvatureConfig {
  double c = 0.001;        // curvature magnitude, > 0
  double epsilon = 1e-5;   // boundary margin used by the projection

  void validate() const;
};

struct BallPoint {
  Vector coords;

  int dim() const { return static_cast<int>(coords.size()); }
};

struct TangentVector {
  Vector coords;

  int dim() const { return static_cast<int>(coords.size()); }
};

// Mobius gyrovector addition on the ball.
BallPoint mobius_add(const BallPoint& a, const BallPoint& b, const CurvatureConfig& cfg);

// Geodesic distance 2/sqrt(c) * atanh(sqrt(c) * ||a (+) (-b)||).
double hyperbolic_distance(const BallPoint& a, const BallPoint& b, const CurvatureConfig& cfg);

// Logarithmic map at the origin; log(0) := 0 by continuity.
TangentVector log_map_origin(const BallPoint& z, const CurvatureConfig& cfg);

// Radial shrink onto radius (1 - epsilon)/sqrt(c) for points at or past the
// boundary; interior points pass through unchanged.
BallPoint project_to_ball(const Vector& x, const CurvatureConfig& cfg);

// atanh through log1p, stable for arguments approaching 1.
double stable_atanh(double x);

// Scale factor atanh(t)/t with the removable singularity at t = 0 filled in.
double logmap_scale(double t);

// Row-wise versions used by the graph layers: each row of x is treated as one
// point. Shapes are preserved.
Matrix project_rows(const Matrix& x, const CurvatureConfig& cfg);
Matrix log_map_rows(const Matrix& x, const CurvatureConfig& cfg);

}  // namespace hkgf
