#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "manet/data.hpp"
#include "manet/diagnostics.hpp"
#include "manet/error.hpp"
#include "manet/model.hpp"
#include "manet/rng.hpp"

namespace manet {

struct SimConfig {
  int actors = 300;
  int events = 18;
  int parents = 3;
  MixtureWeights alpha_star;         // length 2^parents, on the simplex
  std::vector<double> base_column;   // length parents, entries in (0, 1)
  uint64_t seed = 0;

  void validate() const {
    if (actors < 1 || events < 1) throw ConfigError("simulation needs actors >= 1, events >= 1");
    if (parents < 1 || parents > 8)
      throw ConfigError("simulation supports 1 <= parents <= 8 (permutation columns)");
    if (static_cast<int>(alpha_star.size()) != (1 << parents))
      throw ConfigError("alpha_star must have length 2^parents");
    double sum = 0.0;
    for (double a : alpha_star) {
      if (a < 0.0) throw ConfigError("alpha_star entries must be non-negative");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw ConfigError("alpha_star must sum to 1");
    if (static_cast<int>(base_column.size()) != parents)
      throw ConfigError("base_column must have length parents");
    for (double p : base_column)
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("base_column entries must lie in (0, 1)");
  }
};

struct SimDataset {
  IncidenceMatrix data;
  ClusteringLabels true_labels;  // heir indices
  ParentParams true_pi;
  MixtureWeights true_alpha_star;
};

/// Parent probability matrix whose columns cycle through the K! lexicographic
/// permutations of the base column, identity first. Column j uses permutation
/// (j mod K!); d need not be a multiple of K!, the cycle truncates.
inline ParentParams build_pi_columns(const std::vector<double>& base_column, int events) {
  const int parents = static_cast<int>(base_column.size());
  if (parents < 1 || parents > 8) throw ConfigError("base_column length must be in [1, 8]");
  if (events < 1) throw ConfigError("events must be >= 1");

  std::vector<std::vector<int>> perms;
  std::vector<int> idx(parents);
  std::iota(idx.begin(), idx.end(), 0);
  do {
    perms.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));

  ParentParams pi(parents, events);
  for (int j = 0; j < events; ++j) {
    const auto& p = perms[j % perms.size()];
    for (int k = 0; k < parents; ++k) pi(k, j) = base_column[p[k]];
  }
  return pi;
}

/// Samples a dataset from the generative model: heir labels from alpha_star,
/// attendance from the Min-combined heir probabilities. Deterministic given
/// the seed (label draws first, then attendance cells in row-major order).
inline SimDataset generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  const MembershipMatrix u = MembershipMatrix::subsets(cfg.parents);
  Rng rng(cfg.seed);

  SimDataset ds;
  ds.true_alpha_star = cfg.alpha_star;
  ds.true_pi = build_pi_columns(cfg.base_column, cfg.events);
  const HeirParams pi_star = combine_heir_probs(ds.true_pi, u, Combiner::kMin);

  ds.true_labels.resize(cfg.actors);
  for (int i = 0; i < cfg.actors; ++i) ds.true_labels[i] = rng.categorical(cfg.alpha_star);

  ds.data.y = Matrix<uint8_t>(cfg.actors, cfg.events);
  for (int i = 0; i < cfg.actors; ++i) {
    const int h = ds.true_labels[i];
    for (int j = 0; j < cfg.events; ++j)
      ds.data.y(i, j) = rng.uniform() < pi_star(h, j) ? 1 : 0;
  }
  ds.data.actor_labels.resize(cfg.actors);
  ds.data.event_labels.resize(cfg.events);
  for (int i = 0; i < cfg.actors; ++i) ds.data.actor_labels[i] = "A" + std::to_string(i + 1);
  for (int j = 0; j < cfg.events; ++j) ds.data.event_labels[j] = "E" + std::to_string(j + 1);
  return ds;
}

}  // namespace manet
