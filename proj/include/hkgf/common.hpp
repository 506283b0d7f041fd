#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hkgf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invalid arguments, malformed files, contract violations. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// NaN/Inf, failed gradient checks, numeric breakdown. CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic RNG. mt19937_64 has a fully specified output sequence, and
// the derived draws below use fixed arithmetic, so streams are reproducible
// across platforms (std::normal_distribution and friends are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, no rejection branches.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates with draws from this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

// Writes to a temp file in the target directory, then renames into place.
void write_file_atomic(const std::string& path, const std::string& contents);

// Worker count: HKGF_THREADS if set, else hardware concurrency (min 1).
int parallelism_width();

// Runs tasks 0..count-1 across up to `width` threads; each task writes only
// its own outputs, so results are deterministic regardless of scheduling.
void parallel_for_tasks(int count, int width, const std::function<void(int)>& task);

}  // namespace hkgf
