#pragma once

#include "hkgf/manifold.hpp"

namespace hkgf {

enum class KernelActivation {
  kRelu,    // hyperbolic arc-cos kernel
  kCosine,  // hyperbolic RBF kernel (random Fourier features)
};

struct KernelConfig {
  CurvatureConfig curvature;
  double sigma = 1.0;      // std-dev of the Gaussian feature distribution p(w)
  int feature_count = 64;  // M

  void validate() const;
};

// Frozen random projection approximating a hyperbolic kernel.
struct RandomFeatureMap {
  Matrix weights;             // D x M, columns i.i.d. N(0, sigma^2 I)
  Vector offsets;             // length M; 0 for relu, U[0, 2pi) for cosine
  KernelActivation activation = KernelActivation::kRelu;
  std::uint64_t seed = 0;

  int input_dim() const { return static_cast<int>(weights.rows()); }
  int feature_dim() const { return static_cast<int>(weights.cols()); }
};

RandomFeatureMap sample_feature_map(int dim, const KernelConfig& cfg,
                                    KernelActivation activation, std::uint64_t seed);

// sqrt(2/M) * delta(W^T log_0(z) + b), delta = ReLU or cos.
Vector kernel_features(const BallPoint& z, const RandomFeatureMap& map,
                       const KernelConfig& cfg);

// Inner product of the two feature vectors under a shared map.
double kernel_estimate(const BallPoint& a, const BallPoint& b,
                       const RandomFeatureMap& map, const KernelConfig& cfg);

// Monte-Carlo estimate of the defining kernel integral with fresh i.i.d.
// draws of w, independent of any feature map. For relu the integrand is
// 2 * f(w.u + offset) * f(w.v + offset); for cosine it is cos(w.(u - v))
// (the uniform-offset average already carried out analytically).
double mc_kernel_oracle(const BallPoint& a, const BallPoint& b, const KernelConfig& cfg,
                        KernelActivation activation, std::int64_t samples,
                        std::uint64_t seed, double offset = 0.0);

// Bochner closed form for the HRBF kernel: exp(-sigma^2 ||u_a - u_b||^2 / 2).
double hrbf_closed_form(const BallPoint& a, const BallPoint& b, const KernelConfig& cfg);

}  // namespace hkgf
