#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace dprost {

// Seeded RNG with hand-rolled distributions. std::uniform_real_distribution is
// implementation defined, so draws go through the raw engine to keep outputs
// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  Eigen::Vector3d unit_vector() {
    while (true) {
      Eigen::Vector3d v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      const double n2 = v.squaredNorm();
      if (n2 > 1e-12 && n2 <= 1.0) return v / std::sqrt(n2);
    }
  }

  // Uniform rotation via Shoemake's subgroup algorithm.
  Eigen::Matrix3d rotation() {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t1 = 2.0 * M_PI * u2, t2 = 2.0 * M_PI * u3;
    return Eigen::Quaterniond(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1),
                              b * std::sin(t2))
        .toRotationMatrix();
  }

  // Rotation by a uniform angle in [0, max_angle] about a uniform axis.
  Eigen::Matrix3d small_rotation(double max_angle) {
    const Eigen::Vector3d axis = unit_vector();
    return Eigen::AngleAxisd(uniform(0.0, max_angle), axis).toRotationMatrix();
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dprost
