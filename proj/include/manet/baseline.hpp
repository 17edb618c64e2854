#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manet/data.hpp"
#include "manet/diagnostics.hpp"
#include "manet/error.hpp"
#include "manet/matrix.hpp"
#include "manet/model.hpp"
#include "manet/rng.hpp"
#include "manet/sampler.hpp"

namespace manet {

/// Retained trajectory of the non-overlapping Bernoulli mixture comparator
/// (M free components, no heir structure).
struct BaselineSamples {
  int actors = 0;
  int events = 0;
  int components = 0;

  std::vector<double> weight_draws;  // T x M
  std::vector<double> prob_draws;    // T x (M x d), row-major (m, j)
  std::vector<int> z_draws;          // T x n
  Matrix<double> avg_alloc;          // n x M

  int retained() const {
    return components == 0 ? 0 : static_cast<int>(weight_draws.size()) / components;
  }
  std::span<const double> weights(int t) const {
    return {weight_draws.data() + static_cast<size_t>(t) * components,
            static_cast<size_t>(components)};
  }
  Matrix<double> probs_matrix(int t) const {
    Matrix<double> m(components, events);
    const size_t block = static_cast<size_t>(components) * events;
    std::copy_n(prob_draws.data() + static_cast<size_t>(t) * block, block, m.data());
    return m;
  }
};

/// Standard conjugate Gibbs sampler for a finite mixture of independent
/// Bernoullis: categorical allocations, Dirichlet weights from counts, and a
/// full-sufficient-statistics Beta update per (component, event). Every
/// allocated unit contributes fully; there is no attendance routing. Uses the
/// chain settings and scalar prior levels from `config` (combiner, parents
/// and any full Hyperparams override are ignored).
inline BaselineSamples run_chain_baseline(const IncidenceMatrix& data, int components,
                                          const ChainConfig& config) {
  config.validate();
  data.validate();
  if (components < 1) throw ConfigError("baseline needs components >= 1");

  const int n = data.actors();
  const int d = data.events();
  const int M = components;
  const std::vector<double> dir_a(M, config.prior_a);
  const std::vector<std::vector<int>> attended = data.attended_events();
  Rng rng(config.seed);

  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.uniform_int(M);
  std::vector<double> weights = rng.dirichlet(dir_a);
  Matrix<double> probs(M, d);
  for (int m = 0; m < M; ++m)
    for (int j = 0; j < d; ++j)
      probs(m, j) = clamp_prob(rng.beta(config.prior_b1, config.prior_b2));

  const int T = config.retained();
  BaselineSamples out;
  out.actors = n;
  out.events = d;
  out.components = M;
  out.weight_draws.reserve(static_cast<size_t>(T) * M);
  out.prob_draws.reserve(static_cast<size_t>(T) * M * d);
  out.z_draws.reserve(static_cast<size_t>(T) * n);
  out.avg_alloc = Matrix<double>(n, M, 0.0);

  Matrix<double> alloc(n, M);
  bool alloc_current = false;

  for (int t = 1; t <= config.iterations; ++t) {
    try {
      if (!alloc_current) {
        const HeirLogTables tables = HeirLogTables::from(probs);
        detail::allocation_matrix(alloc, tables, log_weights(weights), attended);
      }
      for (int i = 0; i < n; ++i) z[i] = rng.categorical(alloc.row(i));

      std::vector<double> conc = dir_a;
      for (int zi : z) conc[zi] += 1.0;
      weights = rng.dirichlet(conc);

      Matrix<double> succ(M, d, 0.0);
      std::vector<double> count(M, 0.0);
      for (int i = 0; i < n; ++i) {
        count[z[i]] += 1.0;
        for (int j : attended[i]) succ(z[i], j) += 1.0;
      }
      for (int m = 0; m < M; ++m)
        for (int j = 0; j < d; ++j)
          probs(m, j) = clamp_prob(rng.beta(succ(m, j) + config.prior_b1,
                                            count[m] - succ(m, j) + config.prior_b2));
      alloc_current = false;

      if (config.keeps(t)) {
        const HeirLogTables tables = HeirLogTables::from(probs);
        detail::allocation_matrix(alloc, tables, log_weights(weights), attended);
        alloc_current = true;
        for (int i = 0; i < n; ++i) {
          auto row = alloc.row(i);
          for (int m = 0; m < M; ++m) out.avg_alloc(i, m) += row[m];
        }
        out.weight_draws.insert(out.weight_draws.end(), weights.begin(), weights.end());
        out.prob_draws.insert(out.prob_draws.end(), probs.data(), probs.data() + M * d);
        out.z_draws.insert(out.z_draws.end(), z.begin(), z.end());
      }
    } catch (const NumericalError& e) {
      throw NumericalError("baseline chain aborted at iteration " + std::to_string(t) + ": " +
                           e.what());
    }
  }

  for (int i = 0; i < n; ++i)
    for (int m = 0; m < M; ++m) out.avg_alloc(i, m) /= T;
  return out;
}

/// MAP component labels from the accumulated allocation averages.
inline ClusteringLabels baseline_map_labels(const BaselineSamples& samples) {
  return map_allocate(samples.avg_alloc);
}

}  // namespace manet
