#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "manet/baseline.hpp"
#include "manet/diagnostics.hpp"
#include "manet/parallel.hpp"
#include "manet/rng.hpp"
#include "manet/sampler.hpp"
#include "manet/selection.hpp"
#include "manet/simgen.hpp"

namespace manet {

/// Shared settings for the replicated simulation experiments. Defaults are
/// the desk-scale design used throughout the repo: K = 3 overlapping parents,
/// heir weights below, base attendance column (0.2, 0.5, 0.9).
struct SimulationStudy {
  int actors = 300;
  int events = 18;
  int parents = 3;
  MixtureWeights alpha_star = {0.1, 0.25, 0.20, 0.1, 0.15, 0.1, 0.05, 0.05};
  std::vector<double> base_column = {0.2, 0.5, 0.9};

  SimConfig sim_config(uint64_t seed) const {
    SimConfig cfg;
    cfg.actors = actors;
    cfg.events = events;
    cfg.parents = parents;
    cfg.alpha_star = alpha_star;
    cfg.base_column = base_column;
    cfg.seed = seed;
    return cfg;
  }
};

struct ReplicateMetrics {
  double manet_misclass = 0.0;
  double manet_ari = 0.0;
  double baseline_misclass = 0.0;
  double baseline_ari = 0.0;
};

struct SummaryStat {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

inline SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

/// One replicated classification run: simulate, fit the overlapping model at
/// the true K (and optionally the M = 2^K flat baseline), MAP-allocate, and
/// score against the truth. Replicates fan out over `threads` workers; every
/// replicate draws its streams from the master seed, so results do not depend
/// on scheduling.
inline std::vector<ReplicateMetrics> classification_experiment(const SimulationStudy& study,
                                                               int replicates,
                                                               const ChainConfig& chain,
                                                               uint64_t master_seed, int threads,
                                                               bool with_baseline) {
  std::vector<ReplicateMetrics> metrics(replicates);
  parallel_for_index(replicates, threads, [&](int r) {
    const SimDataset ds = generate_dataset(study.sim_config(derive_seed(master_seed, 3 * r)));

    ChainConfig cfg = chain;
    cfg.parents = study.parents;
    cfg.seed = derive_seed(master_seed, 3 * r + 1);
    cfg.hyper.reset();
    const PosteriorSamples samples = run_chain(ds.data, cfg);
    const ClusteringLabels est = map_allocate(samples.avg_alloc);
    metrics[r].manet_misclass = misclassification_rate(est, ds.true_labels, study.parents);
    metrics[r].manet_ari = adjusted_rand_index(est, ds.true_labels);

    if (with_baseline) {
      ChainConfig bcfg = chain;
      bcfg.seed = derive_seed(master_seed, 3 * r + 2);
      bcfg.hyper.reset();
      const int M = 1 << study.parents;
      const BaselineSamples bl = run_chain_baseline(ds.data, M, bcfg);
      const ClusteringLabels best = baseline_map_labels(bl);
      metrics[r].baseline_misclass = misclassification_rate_flat(best, ds.true_labels, M);
      metrics[r].baseline_ari = adjusted_rand_index(best, ds.true_labels);
    }
  });
  return metrics;
}

/// DIC accuracy harness: per replicate, simulate at the study's K and let the
/// scan pick among the candidates. Returns the selected K per replicate.
inline std::vector<int> dic_selection_experiment(const SimulationStudy& study,
                                                 const std::vector<int>& candidates,
                                                 int replicates, const ChainConfig& chain,
                                                 uint64_t master_seed, int threads) {
  std::vector<int> selected(replicates);
  parallel_for_index(replicates, threads, [&](int r) {
    const SimDataset ds = generate_dataset(study.sim_config(derive_seed(master_seed, 2 * r)));
    ChainConfig cfg = chain;
    cfg.seed = derive_seed(master_seed, 2 * r + 1);
    selected[r] = scan_k(ds.data, candidates, cfg).selected_parents;
  });
  return selected;
}

namespace detail {

/// Parent permutation best aligning a posterior-mean matrix to the true one
/// (least squares over all K! candidates); perm[k] is the chain row holding
/// truth row k.
inline std::vector<int> align_parents_to_truth(const Matrix<double>& posterior_mean,
                                               const ParentParams& true_pi) {
  const int K = true_pi.rows();
  const int d = true_pi.cols();
  std::vector<int> perm(K), best(K);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j) {
        const double diff = posterior_mean(perm[k], j) - true_pi(k, j);
        cost += diff * diff;
      }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace detail

struct ContractionAccumulator {
  Matrix<double> sum;     // K x d
  Matrix<double> sum_sq;  // K x d
  long long count = 0;

  Matrix<double> pooled_sd() const {
    Matrix<double> sd(sum.rows(), sum.cols());
    for (int k = 0; k < sum.rows(); ++k)
      for (int j = 0; j < sum.cols(); ++j) {
        const double mean = sum(k, j) / count;
        sd(k, j) = std::sqrt(std::max(0.0, sum_sq(k, j) / count - mean * mean));
      }
    return sd;
  }
};

/// Pools the retained pi draws of `replicates` chains into one sample per
/// (parent, event) cell. Each replicate's parents are first matched to the
/// true pi by least squares (label switching across replicates would
/// otherwise smear the pooled distribution). Merge order is replicate order.
inline ContractionAccumulator pooled_pi_draws(const SimulationStudy& study, int replicates,
                                              const ChainConfig& chain, uint64_t master_seed,
                                              int threads) {
  const int K = study.parents;
  const int d = study.events;
  std::vector<Matrix<double>> sums(replicates, Matrix<double>(K, d, 0.0));
  std::vector<Matrix<double>> sq_sums(replicates, Matrix<double>(K, d, 0.0));
  std::vector<long long> counts(replicates, 0);

  parallel_for_index(replicates, threads, [&](int r) {
    const SimDataset ds = generate_dataset(study.sim_config(derive_seed(master_seed, 2 * r)));
    ChainConfig cfg = chain;
    cfg.parents = K;
    cfg.seed = derive_seed(master_seed, 2 * r + 1);
    cfg.hyper.reset();
    const PosteriorSamples samples = run_chain(ds.data, cfg);

    const int T = samples.retained();
    Matrix<double> mean(K, d, 0.0);
    for (int t = 0; t < T; ++t) {
      const auto pi = samples.pi_flat(t);
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < d; ++j) mean(k, j) += pi[static_cast<size_t>(k) * d + j];
    }
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j) mean(k, j) /= T;

    const std::vector<int> perm = detail::align_parents_to_truth(mean, ds.true_pi);
    for (int t = 0; t < T; ++t) {
      const auto pi = samples.pi_flat(t);
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < d; ++j) {
          const double v = pi[static_cast<size_t>(perm[k]) * d + j];
          sums[r](k, j) += v;
          sq_sums[r](k, j) += v * v;
        }
    }
    counts[r] = T;
  });

  ContractionAccumulator acc;
  acc.sum = Matrix<double>(K, d, 0.0);
  acc.sum_sq = Matrix<double>(K, d, 0.0);
  for (int r = 0; r < replicates; ++r) {
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j) {
        acc.sum(k, j) += sums[r](k, j);
        acc.sum_sq(k, j) += sq_sums[r](k, j);
      }
    acc.count += counts[r];
  }
  return acc;
}

}  // namespace manet
