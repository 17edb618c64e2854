#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "manet/data.hpp"
#include "manet/error.hpp"
#include "manet/model.hpp"
#include "manet/parallel.hpp"
#include "manet/sampler.hpp"

namespace manet {

struct DicResult {
  int parents = 0;
  double dic = 0.0;
  double expected_deviance_term = 0.0;  // (1/T) sum_t sum_i log m_i^(t)
  double log_phat_term = 0.0;           // sum_i log[(1/T) sum_t m_i^(t)]
  int retained = 0;
};

/// DIC assembled from the retained chain: -4 times the posterior-averaged
/// log-likelihood plus 2 times the log of the posterior-averaged per-unit
/// likelihoods. All mixture sums run in log space.
inline DicResult dic3(const PosteriorSamples& samples, const IncidenceMatrix& data) {
  const int T = samples.retained();
  if (T < 1) throw ConfigError("dic3 requires a non-empty chain");
  const int n = data.actors();
  const int heirs = samples.u.heirs();
  const std::vector<std::vector<int>> attended = data.attended_events();

  double sum_log_lik = 0.0;
  // Streaming per-unit logsumexp over iterations.
  std::vector<double> peak(n, kNegInf);
  std::vector<double> scaled(n, 0.0);
  std::vector<double> scratch(heirs);

  for (int t = 0; t < T; ++t) {
    const HeirLogTables tables =
        HeirLogTables::from(combine_heir_probs(samples.pi_matrix(t), samples.u, samples.combiner));
    const std::vector<double> log_alpha = log_weights(samples.alpha(t));
    for (int i = 0; i < n; ++i) {
      const double lm = mixture_log_lik_unit(tables, log_alpha, attended[i], scratch);
      sum_log_lik += lm;
      if (lm > peak[i]) {
        scaled[i] = scaled[i] * std::exp(peak[i] - lm) + 1.0;
        peak[i] = lm;
      } else {
        scaled[i] += std::exp(lm - peak[i]);
      }
    }
  }

  DicResult r;
  r.parents = samples.u.parents();
  r.retained = T;
  r.expected_deviance_term = sum_log_lik / T;
  for (int i = 0; i < n; ++i) {
    if (peak[i] == kNegInf)
      throw NumericalError("posterior-averaged likelihood is zero for unit " + std::to_string(i));
    r.log_phat_term += peak[i] + std::log(scaled[i]) - std::log(static_cast<double>(T));
  }
  r.dic = -4.0 * r.expected_deviance_term + 2.0 * r.log_phat_term;
  return r;
}

struct ScanResult {
  std::vector<DicResult> results;  // one per candidate, in input order
  int selected_parents = 0;
};

/// Lowest DIC wins; exact ties break toward the smaller K.
inline int select_parents(const std::vector<DicResult>& results) {
  if (results.empty()) throw ConfigError("cannot select from an empty DIC table");
  int best = 0;
  for (size_t i = 1; i < results.size(); ++i) {
    const bool lower = results[i].dic < results[best].dic;
    const bool tie_smaller =
        results[i].dic == results[best].dic && results[i].parents < results[best].parents;
    if (lower || tie_smaller) best = static_cast<int>(i);
  }
  return results[best].parents;
}

/// One full chain per candidate K (seeded seed + K), lowest DIC wins, ties
/// break toward the smaller K. Candidates may run in parallel; the merge is
/// by candidate order and deterministic.
inline ScanResult scan_k(const IncidenceMatrix& data, const std::vector<int>& k_values,
                         const ChainConfig& chain_template, int threads = 1) {
  if (k_values.empty()) throw ConfigError("scan_k needs at least one candidate K");
  ScanResult out;
  out.results.resize(k_values.size());
  parallel_for_index(static_cast<int>(k_values.size()), threads, [&](int idx) {
    ChainConfig cfg = chain_template;
    cfg.parents = k_values[idx];
    cfg.seed = chain_template.seed + static_cast<uint64_t>(k_values[idx]);
    cfg.hyper.reset();  // per-K dimensions; uniform defaults
    try {
      const PosteriorSamples samples = run_chain(data, cfg);
      out.results[idx] = dic3(samples, data);
    } catch (const NumericalError& e) {
      throw NumericalError("K=" + std::to_string(k_values[idx]) + ": " + e.what());
    }
  });
  out.selected_parents = select_parents(out.results);
  return out;
}

}  // namespace manet
