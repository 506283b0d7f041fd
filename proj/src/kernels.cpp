#include "hkgf/kernels.hpp"

#include <cmath>

namespace hkgf {

void KernelConfig::validate() const {
  curvature.validate();
  require(sigma > 0.0 && std::isfinite(sigma), "kernel sigma must be positive");
  require(feature_count >= 1, "feature_count M must be >= 1");
}

RandomFeatureMap sample_feature_map(int dim, const KernelConfig& cfg,
                                    KernelActivation activation, std::uint64_t seed) {
  cfg.validate();
  require(dim >= 1, "sample_feature_map: dim must be >= 1");

  Rng rng(seed);
  const int m = cfg.feature_count;
  RandomFeatureMap map;
  map.activation = activation;
  map.seed = seed;
  map.weights.resize(dim, m);
  // Column-by-column so the stream layout matches the "M vectors drawn
  // independently" reading.
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < dim; ++i) {
      map.weights(i, j) = rng.normal(0.0, cfg.sigma);
    }
  }
  map.offsets = Vector::Zero(m);
  if (activation == KernelActivation::kCosine) {
    for (int j = 0; j < m; ++j) {
      map.offsets(j) = rng.uniform(0.0, 2.0 * M_PI);
    }
  }
  return map;
}

Vector kernel_features(const BallPoint& z, const RandomFeatureMap& map,
                       const KernelConfig& cfg) {
  cfg.validate();
  require(z.dim() == map.input_dim(), "kernel_features: dimension mismatch");

  const Vector u = log_map_origin(z, cfg.curvature).coords;
  Vector pre = map.weights.transpose() * u + map.offsets;
  const double scale = std::sqrt(2.0 / static_cast<double>(map.feature_dim()));
  if (map.activation == KernelActivation::kRelu) {
    return scale * pre.cwiseMax(0.0);
  }
  return scale * pre.array().cos().matrix();
}

double kernel_estimate(const BallPoint& a, const BallPoint& b,
                       const RandomFeatureMap& map, const KernelConfig& cfg) {
  return kernel_features(a, map, cfg).dot(kernel_features(b, map, cfg));
}

double mc_kernel_oracle(const BallPoint& a, const BallPoint& b, const KernelConfig& cfg,
                        KernelActivation activation, std::int64_t samples,
                        std::uint64_t seed, double offset) {
  cfg.validate();
  require(samples >= 1, "mc_kernel_oracle: samples must be >= 1");
  require(a.dim() == b.dim(), "mc_kernel_oracle: dimension mismatch");

  const Vector ua = log_map_origin(a, cfg.curvature).coords;
  const Vector ub = log_map_origin(b, cfg.curvature).coords;
  const int dim = a.dim();

  Rng rng(seed);
  Vector w(dim);
  double acc = 0.0;
  if (activation == KernelActivation::kRelu) {
    for (std::int64_t s = 0; s < samples; ++s) {
      for (int i = 0; i < dim; ++i) w(i) = rng.normal(0.0, cfg.sigma);
      const double fa = std::max(w.dot(ua) + offset, 0.0);
      const double fb = std::max(w.dot(ub) + offset, 0.0);
      acc += 2.0 * fa * fb;
    }
  } else {
    const Vector delta = ua - ub;
    for (std::int64_t s = 0; s < samples; ++s) {
      for (int i = 0; i < dim; ++i) w(i) = rng.normal(0.0, cfg.sigma);
      acc += std::cos(w.dot(delta));
    }
  }
  return acc / static_cast<double>(samples);
}

double hrbf_closed_form(const BallPoint& a, const BallPoint& b, const KernelConfig& cfg) {
  cfg.validate();
  require(a.dim() == b.dim(), "hrbf_closed_form: dimension mismatch");
  const Vector ua = log_map_origin(a, cfg.curvature).coords;
  const Vector ub = log_map_origin(b, cfg.curvature).coords;
  const double gap2 = (ua - ub).squaredNorm();
  return std::exp(-cfg.sigma * cfg.sigma * gap2 / 2.0);
}

}  // namespace hkgf
