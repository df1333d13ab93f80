#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace emdist {

// Seeded generator with hand-rolled output transforms so that streams are
// identical across standard libraries, not just across runs of one build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, pair cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // [0, n)
  int uniform_int(int n) {
    const int k = static_cast<int>(uniform() * n);
    return k >= n ? n - 1 : k;
  }

  Eigen::VectorXd uniform_vec(int n, double lo, double hi) {
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = uniform(lo, hi);
    return out;
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      const auto j = uniform_int(static_cast<int>(i + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 step; used to derive independent per-component seeds from one
// master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace emdist
