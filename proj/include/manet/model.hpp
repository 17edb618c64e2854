#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "manet/error.hpp"
#include "manet/matrix.hpp"
#include "manet/membership.hpp"

namespace manet {

/// K x d parent attendance probabilities, entries in (0, 1).
using ParentParams = Matrix<double>;
/// K* x d heir attendance probabilities; row 0 (empty set) is identically 0.
using HeirParams = Matrix<double>;
/// K*-vector on the probability simplex.
using MixtureWeights = std::vector<double>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Parent probabilities drawn from Beta posteriors are clamped away from
/// {0, 1} so logs stay finite. The structural zero of the empty heir cluster
/// is never clamped.
constexpr double kProbClamp = 1e-12;

inline double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

/// How a multi-parent heir cluster combines its parents' attendance
/// probabilities. Min is the default; the empty set maps to 0 under both.
enum class Combiner { kMin, kMax };

inline std::string combiner_name(Combiner c) { return c == Combiner::kMin ? "min" : "max"; }

inline Combiner combiner_from_name(const std::string& s) {
  if (s == "min") return Combiner::kMin;
  if (s == "max") return Combiner::kMax;
  throw ConfigError("unknown combiner '" + s + "' (expected min or max)");
}

/// Prior shapes: Dirichlet concentrations over the K* heir clusters and Beta
/// shapes per parent/event cell.
struct Hyperparams {
  std::vector<double> dirichlet_a;  // K*
  Matrix<double> beta_b1;           // K x d
  Matrix<double> beta_b2;           // K x d

  static Hyperparams uniform(int heirs, int parents, int events, double a = 1.0,
                             double b1 = 1.0, double b2 = 1.0) {
    Hyperparams h;
    h.dirichlet_a.assign(heirs, a);
    h.beta_b1 = Matrix<double>(parents, events, b1);
    h.beta_b2 = Matrix<double>(parents, events, b2);
    h.validate();
    return h;
  }

  void validate() const {
    for (double a : dirichlet_a)
      if (!(a > 0.0)) throw ConfigError("Dirichlet concentrations must be positive");
    for (size_t i = 0; i < beta_b1.size(); ++i)
      if (!(beta_b1.data()[i] > 0.0) || !(beta_b2.data()[i] > 0.0))
        throw ConfigError("Beta shapes must be positive");
  }
};

/// pi_star(h, j) = min (or max) of pi(k, j) over the parents of heir h;
/// the empty heir gets exactly 0 for every event.
inline HeirParams combine_heir_probs(const ParentParams& pi, const MembershipMatrix& u,
                                     Combiner c) {
  if (pi.rows() != u.parents()) throw ConfigError("parent params rows do not match membership");
  const int heirs = u.heirs();
  const int d = pi.cols();
  HeirParams pi_star(heirs, d, 0.0);
  for (int h = 1; h < heirs; ++h) {
    auto mem = u.members(h);
    for (int j = 0; j < d; ++j) {
      double v = pi(mem[0], j);
      for (size_t m = 1; m < mem.size(); ++m) {
        const double p = pi(mem[m], j);
        v = (c == Combiner::kMin) ? std::min(v, p) : std::max(v, p);
      }
      pi_star(h, j) = v;
    }
  }
  return pi_star;
}

/// alpha_k = sum_h alpha_star_h u_{hk}; exact linear map, no renormalization.
inline std::vector<double> parent_weights_from_heir(const MixtureWeights& alpha_star,
                                                    const MembershipMatrix& u) {
  if (static_cast<int>(alpha_star.size()) != u.heirs())
    throw ConfigError("weight vector length does not match heir count");
  std::vector<double> alpha(u.parents(), 0.0);
  for (int h = 0; h < u.heirs(); ++h)
    for (int k : u.members(h)) alpha[k] += alpha_star[h];
  return alpha;
}

/// log prod_j Ber(y_j; p_j). Returns -inf when an attended event has
/// probability zero (the empty-cluster case); that is a valid value, not an
/// error.
inline double log_likelihood_unit(std::span<const uint8_t> y, std::span<const double> heir_probs) {
  if (y.size() != heir_probs.size()) throw ConfigError("likelihood dimension mismatch");
  double ll = 0.0;
  for (size_t j = 0; j < y.size(); ++j) {
    const double p = heir_probs[j];
    ll += y[j] ? std::log(p) : std::log1p(-p);
  }
  return ll;
}

/// Log-domain Bernoulli tables for one heir-probability matrix, arranged so a
/// unit's log-likelihood is base[h] plus delta over its attended events only.
/// The empty heir has base 0 and delta -inf, which reproduces the hard zero.
struct HeirLogTables {
  std::vector<double> base;  // K*: sum_j log(1 - p)
  Matrix<double> delta;      // K* x d: log p - log(1 - p)

  static HeirLogTables from(const HeirParams& pi_star) {
    HeirLogTables t;
    const int heirs = pi_star.rows();
    const int d = pi_star.cols();
    t.base.assign(heirs, 0.0);
    t.delta = Matrix<double>(heirs, d);
    for (int h = 0; h < heirs; ++h) {
      double b = 0.0;
      for (int j = 0; j < d; ++j) {
        const double p = pi_star(h, j);
        const double l1p = std::log1p(-p);
        b += l1p;
        t.delta(h, j) = (p > 0.0 ? std::log(p) : kNegInf) - l1p;
      }
      t.base[h] = b;
    }
    return t;
  }

  int heirs() const { return static_cast<int>(base.size()); }

  double log_lik(int h, std::span<const int> attended) const {
    double ll = base[h];
    const double* row = &delta(h, 0);
    for (int j : attended) ll += row[j];
    return ll;
  }
};

/// logsumexp_h(log_alpha[h] + loglik(h)); the per-unit mixture log-likelihood.
/// `scratch` must have at least heirs() entries.
inline double mixture_log_lik_unit(const HeirLogTables& tables,
                                   std::span<const double> log_alpha,
                                   std::span<const int> attended, std::span<double> scratch) {
  double mx = kNegInf;
  const int heirs = tables.heirs();
  for (int h = 0; h < heirs; ++h) {
    scratch[h] = log_alpha[h] + tables.log_lik(h, attended);
    mx = std::max(mx, scratch[h]);
  }
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (int h = 0; h < heirs; ++h) s += std::exp(scratch[h] - mx);
  return mx + std::log(s);
}

inline double mixture_log_lik_unit(const HeirLogTables& tables,
                                   std::span<const double> log_alpha,
                                   std::span<const int> attended) {
  std::vector<double> scratch(tables.heirs());
  return mixture_log_lik_unit(tables, log_alpha, attended, scratch);
}

inline std::vector<double> log_weights(std::span<const double> weights) {
  std::vector<double> lw(weights.size());
  for (size_t h = 0; h < weights.size(); ++h)
    lw[h] = weights[h] > 0.0 ? std::log(weights[h]) : kNegInf;
  return lw;
}

}  // namespace manet
