#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "manet/data.hpp"
#include "manet/error.hpp"
#include "manet/matrix.hpp"
#include "manet/model.hpp"
#include "manet/sampler.hpp"

namespace manet {

/// n-vector of heir cluster assignments (0-based).
using ClusteringLabels = std::vector<int>;

/// n x K* matrix of allocation probabilities averaged over the retained
/// iterations, recomputed exactly from the stored (alpha_star, pi) draws.
inline Matrix<double> average_allocations(const PosteriorSamples& samples,
                                          const IncidenceMatrix& data) {
  const int T = samples.retained();
  if (T < 1) throw ConfigError("average_allocations requires a non-empty chain");
  const int n = data.actors();
  const int heirs = samples.u.heirs();
  const std::vector<std::vector<int>> attended = data.attended_events();

  Matrix<double> avg(n, heirs, 0.0);
  Matrix<double> alloc(n, heirs);
  for (int t = 0; t < T; ++t) {
    const HeirLogTables tables =
        HeirLogTables::from(combine_heir_probs(samples.pi_matrix(t), samples.u, samples.combiner));
    detail::allocation_matrix(alloc, tables, log_weights(samples.alpha(t)), attended);
    for (int i = 0; i < n; ++i)
      for (int h = 0; h < heirs; ++h) avg(i, h) += alloc(i, h);
  }
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < heirs; ++h) avg(i, h) /= T;
  return avg;
}

/// MAP rule: per-unit argmax of the averaged allocation probabilities, ties
/// to the lowest heir index.
inline ClusteringLabels map_allocate(const Matrix<double>& avg) {
  ClusteringLabels labels(avg.rows());
  for (int i = 0; i < avg.rows(); ++i) {
    int best = 0;
    for (int h = 1; h < avg.cols(); ++h)
      if (avg(i, h) > avg(i, best)) best = h;
    labels[i] = best;
  }
  return labels;
}

/// Posterior confusion matrix. raw accumulates, for every retained iteration
/// and unit, the sorted allocation probabilities into the row of the top
/// label, then divides by T; rescaled divides each row by its sum (all-zero
/// rows stay zero). row_units holds the MAP cluster sizes.
struct Pcm {
  Matrix<double> raw;
  Matrix<double> rescaled;
  std::vector<int> row_units;
};

inline Pcm posterior_confusion_matrix(const PosteriorSamples& samples,
                                      const IncidenceMatrix& data) {
  const int T = samples.retained();
  if (T < 1) throw ConfigError("posterior_confusion_matrix requires a non-empty chain");
  const int n = data.actors();
  const int heirs = samples.u.heirs();
  const std::vector<std::vector<int>> attended = data.attended_events();

  Pcm pcm;
  pcm.raw = Matrix<double>(heirs, heirs, 0.0);
  Matrix<double> avg(n, heirs, 0.0);
  Matrix<double> alloc(n, heirs);
  std::vector<int> order(heirs);

  for (int t = 0; t < T; ++t) {
    const HeirLogTables tables =
        HeirLogTables::from(combine_heir_probs(samples.pi_matrix(t), samples.u, samples.combiner));
    detail::allocation_matrix(alloc, tables, log_weights(samples.alpha(t)), attended);
    for (int i = 0; i < n; ++i) {
      auto row = alloc.row(i);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return row[a] > row[b]; });
      const int top = order[0];
      for (int m = 0; m < heirs; ++m) pcm.raw(top, order[m]) += row[order[m]];
      for (int h = 0; h < heirs; ++h) avg(i, h) += row[h];
    }
  }

  for (int h = 0; h < heirs; ++h)
    for (int m = 0; m < heirs; ++m) pcm.raw(h, m) /= T;

  pcm.rescaled = Matrix<double>(heirs, heirs, 0.0);
  for (int h = 0; h < heirs; ++h) {
    double row_sum = 0.0;
    for (int m = 0; m < heirs; ++m) row_sum += pcm.raw(h, m);
    if (row_sum > 0.0)
      for (int m = 0; m < heirs; ++m) pcm.rescaled(h, m) = pcm.raw(h, m) / row_sum;
  }

  for (int i = 0; i < n; ++i)
    for (int h = 0; h < heirs; ++h) avg(i, h) /= T;
  pcm.row_units.assign(heirs, 0);
  for (int label : map_allocate(avg)) ++pcm.row_units[label];
  return pcm;
}

namespace detail {

inline Matrix<long long> contingency(const ClusteringLabels& a, const ClusteringLabels& b,
                                     int rows, int cols) {
  if (a.size() != b.size()) throw ConfigError("label vectors have different lengths");
  Matrix<long long> c(rows, cols, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= rows || b[i] < 0 || b[i] >= cols)
      throw ConfigError("label out of range at position " + std::to_string(i));
    ++c(a[i], b[i]);
  }
  return c;
}

/// Minimum disagreement fraction over a set of label bijections, where
/// remap(perm, label) gives the relabeled value.
template <typename Remap>
double min_error_over_perms(const Matrix<long long>& cont, int perm_size, long long n,
                            Remap remap) {
  std::vector<int> perm(perm_size);
  std::iota(perm.begin(), perm.end(), 0);
  long long best_agree = -1;
  do {
    long long agree = 0;
    for (int e = 0; e < cont.rows(); ++e) agree += cont(e, remap(perm, e));
    best_agree = std::max(best_agree, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - static_cast<double>(best_agree) / static_cast<double>(n);
}

}  // namespace detail

/// Fraction of units whose heir label disagrees with the truth, minimized
/// over all K! relabelings of the parent clusters (each parent permutation
/// induces a heir permutation through the membership structure).
inline double misclassification_rate(const ClusteringLabels& est, const ClusteringLabels& truth,
                                     int parents) {
  if (parents < 1 || parents > 8)
    throw ConfigError("exhaustive parent matching supports 1 <= K <= 8");
  if (est.empty()) throw ConfigError("label vectors must be non-empty");
  const int heirs = 1 << parents;
  const Matrix<long long> cont = detail::contingency(est, truth, heirs, heirs);
  return detail::min_error_over_perms(
      cont, parents, static_cast<long long>(est.size()), [&](const std::vector<int>& perm, int e) {
        int mapped = 0;
        for (int k = 0; k < static_cast<int>(perm.size()); ++k)
          if ((e >> k) & 1) mapped |= 1 << perm[k];
        return mapped;
      });
}

/// Permutation-minimized misclassification for flat component labels
/// (baseline mixtures); searches all M! component bijections.
inline double misclassification_rate_flat(const ClusteringLabels& est,
                                          const ClusteringLabels& truth, int components) {
  if (components < 1 || components > 8)
    throw ConfigError("exhaustive component matching supports 1 <= M <= 8");
  if (est.empty()) throw ConfigError("label vectors must be non-empty");
  const Matrix<long long> cont = detail::contingency(est, truth, components, components);
  return detail::min_error_over_perms(
      cont, components, static_cast<long long>(est.size()),
      [](const std::vector<int>& perm, int e) { return perm[e]; });
}

/// Hubert-Arabie adjusted Rand index between two partitions. Labels may be
/// any non-negative integers. Returns 1 for the degenerate cases where both
/// partitions are trivially identical (single block or all singletons).
inline double adjusted_rand_index(const ClusteringLabels& a, const ClusteringLabels& b) {
  if (a.size() != b.size()) throw ConfigError("label vectors have different lengths");
  if (a.empty()) throw ConfigError("label vectors must be non-empty");
  const int ma = *std::max_element(a.begin(), a.end()) + 1;
  const int mb = *std::max_element(b.begin(), b.end()) + 1;
  const Matrix<long long> cont = detail::contingency(a, b, ma, mb);

  auto comb2 = [](long long x) { return 0.5 * static_cast<double>(x) * (x - 1); };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (int i = 0; i < ma; ++i) {
    long long row_total = 0;
    for (int j = 0; j < mb; ++j) {
      sum_cells += comb2(cont(i, j));
      row_total += cont(i, j);
    }
    sum_rows += comb2(row_total);
  }
  for (int j = 0; j < mb; ++j) {
    long long col_total = 0;
    for (int i = 0; i < ma; ++i) col_total += cont(i, j);
    sum_cols += comb2(col_total);
  }
  const double total_pairs = comb2(static_cast<long long>(a.size()));
  const double expected = sum_rows * sum_cols / total_pairs;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both partitions degenerate and equal
  return (sum_cells - expected) / (maximum - expected);
}

/// Canonical relabeling against label switching: per retained iteration,
/// parents are ordered by descending total attendance probability and the
/// induced permutation is applied to pi, alpha_star (through heir
/// re-indexing), z_star, and the recomputed allocation averages. Idempotent;
/// per-unit mixture likelihoods are unchanged.
inline PosteriorSamples relabel_chain(const PosteriorSamples& samples,
                                      const IncidenceMatrix& data) {
  PosteriorSamples out = samples;
  const int T = samples.retained();
  const int K = samples.u.parents();
  const int d = samples.events;
  const int heirs = samples.u.heirs();
  const int n = samples.actors;

  std::vector<int> order(K), inverse(K);
  std::vector<int> old_of_new(heirs);
  std::vector<int> new_of_old(heirs);

  for (int t = 0; t < T; ++t) {
    const auto pi = samples.pi_flat(t);
    std::vector<double> row_sum(K, 0.0);
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j) row_sum[k] += pi[static_cast<size_t>(k) * d + j];
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return row_sum[x] > row_sum[y]; });
    for (int k = 0; k < K; ++k) inverse[order[k]] = k;

    for (int h = 0; h < heirs; ++h) {
      int old_mask = 0, new_mask = 0;
      for (int k = 0; k < K; ++k) {
        if ((h >> k) & 1) old_mask |= 1 << order[k];
        if ((h >> k) & 1) new_mask |= 1 << inverse[k];
      }
      old_of_new[h] = old_mask;
      new_of_old[h] = new_mask;
    }

    double* pi_out = out.pi_draws.data() + static_cast<size_t>(t) * K * d;
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j)
        pi_out[static_cast<size_t>(k) * d + j] = pi[static_cast<size_t>(order[k]) * d + j];

    const auto alpha = samples.alpha(t);
    double* alpha_out = out.alpha_draws.data() + static_cast<size_t>(t) * heirs;
    for (int h = 0; h < heirs; ++h) alpha_out[h] = alpha[old_of_new[h]];

    const auto z = samples.z(t);
    int* z_out = out.z_draws.data() + static_cast<size_t>(t) * n;
    for (int i = 0; i < n; ++i) z_out[i] = new_of_old[z[i]];
  }

  out.avg_alloc = average_allocations(out, data);
  return out;
}

}  // namespace manet
