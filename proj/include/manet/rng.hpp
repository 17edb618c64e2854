#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "manet/error.hpp"

namespace manet {

/// splitmix64 mix; used to derive independent stream seeds (per replicate,
/// per candidate K) from one master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t x = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Seeded generator with the handful of draws the samplers need.
/// Distribution objects are constructed per call so no hidden state survives
/// between draws; the sequence is a pure function of the seed and the call
/// order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen_); }

  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(gen_);
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    if (s <= 0.0) return 0.5;  // both gammas underflowed; unreachable for shapes >= 1
    return x / s;
  }

  /// One Dirichlet draw with the given concentrations.
  std::vector<double> dirichlet(std::span<const double> conc) {
    std::vector<double> v(conc.size());
    double total = 0.0;
    for (size_t i = 0; i < conc.size(); ++i) total += v[i] = gamma(conc[i]);
    if (!(total > 0.0)) throw NumericalError("dirichlet draw collapsed to zero");
    for (double& x : v) x /= total;
    return v;
  }

  /// Index draw from a normalized probability vector (inverse-CDF scan).
  /// Entries that are exactly zero can never be selected.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    int last = -1;
    for (size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      cum += probs[i];
      last = static_cast<int>(i);
      if (u < cum) return last;
    }
    if (last < 0) throw NumericalError("categorical draw over all-zero weights");
    return last;  // u landed in the roundoff tail
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace manet
