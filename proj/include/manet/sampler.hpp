#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manet/data.hpp"
#include "manet/error.hpp"
#include "manet/matrix.hpp"
#include "manet/membership.hpp"
#include "manet/model.hpp"
#include "manet/rng.hpp"

namespace manet {

struct ChainConfig {
  int iterations = 30000;
  int burn_in = 15000;
  int thinning = 1;
  uint64_t seed = 0;
  int parents = 2;
  Combiner combiner = Combiner::kMin;
  /// Scalar prior levels used to build Hyperparams when `hyper` is empty.
  double prior_a = 1.0;
  double prior_b1 = 1.0;
  double prior_b2 = 1.0;
  /// Full per-cell prior override; must match (2^parents, parents, d).
  std::optional<Hyperparams> hyper;

  int retained() const { return (iterations - burn_in + thinning - 1) / thinning; }

  void validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations) throw ConfigError("need 0 <= burn_in < iterations");
    if (thinning < 1) throw ConfigError("thinning must be >= 1");
    if (parents < 1 || parents > MembershipMatrix::kMaxParents)
      throw ConfigError("parents must be in [1, 16]");
  }

  /// 1-based iteration t is kept iff it is past burn-in and on the thinning grid.
  bool keeps(int t) const { return t > burn_in && (t - burn_in - 1) % thinning == 0; }
};

struct ChainState {
  std::vector<int> z_star;          // n heir indices
  MixtureWeights alpha_star;        // K*
  ParentParams pi;                  // K x d
  int iteration = 0;
};

/// Per-unit, per-event routing of likelihood contributions: hot(i, j) is the
/// parent receiving unit i's event-j contribution, or -1 when the unit sits in
/// the empty heir cluster. Materializes the one-hot s-vectors compactly.
struct SVectors {
  Matrix<int16_t> hot;
  int parents = 0;

  int hot_parent(int i, int j) const { return hot(i, j); }
  double indicator(int i, int j, int k) const { return hot(i, j) == k ? 1.0 : 0.0; }
};

/// Retained post-burn-in trajectory plus the running average of per-unit
/// allocation probabilities. Draw storage is flat, one block per retained
/// iteration.
struct PosteriorSamples {
  MembershipMatrix u;
  Combiner combiner = Combiner::kMin;
  int actors = 0;
  int events = 0;

  std::vector<double> alpha_draws;  // T x K*
  std::vector<double> pi_draws;     // T x (K x d), row-major (k, j)
  std::vector<int> z_draws;         // T x n
  Matrix<double> avg_alloc;         // n x K*

  int retained() const {
    return u.heirs() == 0 ? 0 : static_cast<int>(alpha_draws.size()) / u.heirs();
  }

  std::span<const double> alpha(int t) const {
    return {alpha_draws.data() + static_cast<size_t>(t) * u.heirs(),
            static_cast<size_t>(u.heirs())};
  }
  std::span<const double> pi_flat(int t) const {
    const size_t block = static_cast<size_t>(u.parents()) * events;
    return {pi_draws.data() + static_cast<size_t>(t) * block, block};
  }
  ParentParams pi_matrix(int t) const {
    ParentParams m(u.parents(), events);
    auto flat = pi_flat(t);
    std::copy(flat.begin(), flat.end(), m.data());
    return m;
  }
  std::span<const int> z(int t) const {
    return {z_draws.data() + static_cast<size_t>(t) * actors, static_cast<size_t>(actors)};
  }
};

namespace detail {

/// Softmax of log-weights with max subtraction; -inf entries map to exact 0.
/// Throws if every entry is -inf.
inline void softmax_log_weights(std::span<double> lw, const std::string& what) {
  double mx = kNegInf;
  for (double v : lw) mx = std::max(mx, v);
  if (mx == kNegInf) throw NumericalError("all allocation weights are zero for " + what);
  double sum = 0.0;
  for (double& v : lw) sum += v = std::exp(v - mx);
  for (double& v : lw) v /= sum;
}

/// Fills P (n x K*) with allocation posteriors for every unit given the
/// current tables; P rows sum to 1.
inline void allocation_matrix(Matrix<double>& p, const HeirLogTables& tables,
                              std::span<const double> log_alpha,
                              const std::vector<std::vector<int>>& attended) {
  const int n = p.rows();
  const int heirs = p.cols();
  for (int i = 0; i < n; ++i) {
    auto row = p.row(i);
    for (int h = 0; h < heirs; ++h) row[h] = log_alpha[h] + tables.log_lik(h, attended[i]);
    softmax_log_weights(row, "unit " + std::to_string(i));
  }
}

/// kmin(h, j): parent whose pi(k, j) attains the combiner extreme among the
/// members of heir h (-1 for the empty heir). Lowest parent index wins ties.
inline Matrix<int16_t> routing_table(const ParentParams& pi, const MembershipMatrix& u) {
  const int heirs = u.heirs();
  const int d = pi.cols();
  Matrix<int16_t> kmin(heirs, d, int16_t{-1});
  for (int h = 1; h < heirs; ++h) {
    auto mem = u.members(h);
    for (int j = 0; j < d; ++j) {
      int best = mem[0];
      double v = pi(mem[0], j);
      for (size_t m = 1; m < mem.size(); ++m) {
        const double p = pi(mem[m], j);
        if (p < v) {
          v = p;
          best = mem[m];
        }
      }
      kmin(h, j) = static_cast<int16_t>(best);
    }
  }
  return kmin;
}

}  // namespace detail

/// Posterior allocation probabilities of one unit over the K* heir clusters:
/// entry h is proportional to alpha_star_h * prod_j Ber(y_j; pi_star_hj),
/// computed in log space. Heirs with -inf log-likelihood get exactly 0.
inline std::vector<double> allocation_posterior(std::span<const uint8_t> y_i,
                                                std::span<const double> alpha_star,
                                                const HeirParams& pi_star) {
  const int heirs = pi_star.rows();
  if (static_cast<int>(alpha_star.size()) != heirs)
    throw ConfigError("weight vector length does not match heir params");
  std::vector<double> lw(heirs);
  for (int h = 0; h < heirs; ++h) {
    const double la = alpha_star[h] > 0.0 ? std::log(alpha_star[h]) : kNegInf;
    lw[h] = la + log_likelihood_unit(y_i, pi_star.row(h));
  }
  detail::softmax_log_weights(lw, "the unit");
  return lw;
}

/// Draws each z_star_i from its categorical allocation posterior under the
/// state's current (alpha_star, pi).
inline void sample_allocations(ChainState& state, const IncidenceMatrix& data,
                               const MembershipMatrix& u, Rng& rng,
                               Combiner combiner = Combiner::kMin) {
  const HeirParams pi_star = combine_heir_probs(state.pi, u, combiner);
  for (int i = 0; i < data.actors(); ++i) {
    auto probs = allocation_posterior(data.y.row(i), state.alpha_star, pi_star);
    state.z_star[i] = rng.categorical(probs);
  }
}

/// Builds the s-vectors from current allocations and parent probabilities:
/// singleton subsets copy the membership vector, multi-member subsets route
/// each event to the member with the smallest pi(k, j), the empty subset
/// contributes nothing.
inline SVectors compute_s_vectors(const std::vector<int>& z_star, const ParentParams& pi,
                                  const MembershipMatrix& u) {
  const Matrix<int16_t> kmin = detail::routing_table(pi, u);
  SVectors s;
  s.parents = u.parents();
  s.hot = Matrix<int16_t>(static_cast<int>(z_star.size()), pi.cols());
  for (size_t i = 0; i < z_star.size(); ++i) {
    const int h = z_star[i];
    if (h < 0 || h >= u.heirs()) throw ConfigError("z_star entry out of range");
    auto src = kmin.row(h);
    auto dst = s.hot.row(static_cast<int>(i));
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return s;
}

/// Conjugate Dirichlet update of the heir mixture weights from allocation
/// counts.
inline MixtureWeights update_weights(const std::vector<int>& z_star,
                                     std::span<const double> dirichlet_a, int heirs, Rng& rng) {
  std::vector<double> conc(dirichlet_a.begin(), dirichlet_a.end());
  if (static_cast<int>(conc.size()) != heirs) throw ConfigError("Dirichlet prior has wrong length");
  for (int h : z_star) {
    if (h < 0 || h >= heirs) throw ConfigError("z_star entry out of range");
    conc[h] += 1.0;
  }
  return rng.dirichlet(conc);
}

/// Conjugate Beta update of every parent attendance probability, one draw per
/// (parent, event) cell in row-major order. Draws are clamped away from {0,1}.
inline ParentParams update_parent_probs(const IncidenceMatrix& data, const SVectors& s,
                                        const Hyperparams& hyper, Rng& rng) {
  const int K = s.parents;
  const int d = data.events();
  Matrix<double> succ(K, d, 0.0);   // sum_i y_ij s_ik^j
  Matrix<double> total(K, d, 0.0);  // sum_i s_ik^j
  for (int i = 0; i < data.actors(); ++i) {
    for (int j = 0; j < d; ++j) {
      const int k = s.hot(i, j);
      if (k < 0) continue;
      total(k, j) += 1.0;
      if (data.y(i, j)) succ(k, j) += 1.0;
    }
  }
  ParentParams pi(K, d);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j)
      pi(k, j) = clamp_prob(rng.beta(succ(k, j) + hyper.beta_b1(k, j),
                                     total(k, j) - succ(k, j) + hyper.beta_b2(k, j)));
  return pi;
}

/// Runs the full Gibbs chain: per sweep, allocations -> weights -> s-vectors
/// -> parent probabilities. Retains the post-burn-in thinned trajectory and
/// accumulates the per-unit allocation probabilities evaluated at each
/// retained state. Deterministic given (data, config).
inline PosteriorSamples run_chain(const IncidenceMatrix& data, const ChainConfig& config) {
  config.validate();
  data.validate();

  const MembershipMatrix u = MembershipMatrix::subsets(config.parents);
  const int n = data.actors();
  const int d = data.events();
  const int K = config.parents;
  const int heirs = u.heirs();
  const Hyperparams hyper =
      config.hyper ? *config.hyper
                   : Hyperparams::uniform(heirs, K, d, config.prior_a, config.prior_b1,
                                          config.prior_b2);
  if (static_cast<int>(hyper.dirichlet_a.size()) != heirs || hyper.beta_b1.rows() != K ||
      hyper.beta_b1.cols() != d || hyper.beta_b2.rows() != K || hyper.beta_b2.cols() != d)
    throw ConfigError("hyperparameter dimensions do not match (K, d)");
  hyper.validate();

  const std::vector<std::vector<int>> attended = data.attended_events();
  Rng rng(config.seed);

  // Overdispersed prior-consistent start. Units with at least one attendance
  // start in a uniformly drawn non-empty heir; all-zero units may start
  // anywhere.
  ChainState state;
  state.z_star.resize(n);
  for (int i = 0; i < n; ++i)
    state.z_star[i] = attended[i].empty() ? rng.uniform_int(heirs) : 1 + rng.uniform_int(heirs - 1);
  state.alpha_star = rng.dirichlet(hyper.dirichlet_a);
  state.pi = ParentParams(K, d);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < d; ++j)
      state.pi(k, j) = clamp_prob(rng.beta(hyper.beta_b1(k, j), hyper.beta_b2(k, j)));

  const int T = config.retained();
  PosteriorSamples out;
  out.u = u;
  out.combiner = config.combiner;
  out.actors = n;
  out.events = d;
  out.alpha_draws.reserve(static_cast<size_t>(T) * heirs);
  out.pi_draws.reserve(static_cast<size_t>(T) * K * d);
  out.z_draws.reserve(static_cast<size_t>(T) * n);
  out.avg_alloc = Matrix<double>(n, heirs, 0.0);

  Matrix<double> alloc(n, heirs);
  bool alloc_current = false;  // alloc already evaluated at the current (alpha, pi)

  for (int t = 1; t <= config.iterations; ++t) {
    state.iteration = t;
    try {
      if (!alloc_current) {
        const HeirLogTables tables =
            HeirLogTables::from(combine_heir_probs(state.pi, u, config.combiner));
        detail::allocation_matrix(alloc, tables, log_weights(state.alpha_star), attended);
      }
      for (int i = 0; i < n; ++i) state.z_star[i] = rng.categorical(alloc.row(i));

      state.alpha_star = update_weights(state.z_star, hyper.dirichlet_a, heirs, rng);
      const SVectors s = compute_s_vectors(state.z_star, state.pi, u);
      state.pi = update_parent_probs(data, s, hyper, rng);
      alloc_current = false;

      if (config.keeps(t)) {
        const HeirLogTables tables =
            HeirLogTables::from(combine_heir_probs(state.pi, u, config.combiner));
        detail::allocation_matrix(alloc, tables, log_weights(state.alpha_star), attended);
        alloc_current = true;  // valid for the next sweep's allocation step
        for (int i = 0; i < n; ++i) {
          auto row = alloc.row(i);
          for (int h = 0; h < heirs; ++h) out.avg_alloc(i, h) += row[h];
        }
        out.alpha_draws.insert(out.alpha_draws.end(), state.alpha_star.begin(),
                               state.alpha_star.end());
        out.pi_draws.insert(out.pi_draws.end(), state.pi.data(), state.pi.data() + K * d);
        out.z_draws.insert(out.z_draws.end(), state.z_star.begin(), state.z_star.end());
      }
    } catch (const NumericalError& e) {
      throw NumericalError("chain aborted at iteration " + std::to_string(t) + ": " + e.what());
    }
  }

  for (int i = 0; i < n; ++i)
    for (int h = 0; h < heirs; ++h) out.avg_alloc(i, h) /= T;
  return out;
}

}  // namespace manet
