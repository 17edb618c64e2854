#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "manet/model.hpp"

using namespace manet;

namespace {

ParentParams random_pi(std::mt19937_64& gen, int parents, int events, double lo = 0.01,
                       double hi = 0.99) {
  std::uniform_real_distribution<double> unif(lo, hi);
  ParentParams pi(parents, events);
  for (int k = 0; k < parents; ++k)
    for (int j = 0; j < events; ++j) pi(k, j) = unif(gen);
  return pi;
}

}  // namespace

TEST_CASE("min combiner takes the lowest parent probability") {
  const auto u = MembershipMatrix::subsets(2);
  ParentParams pi(2, 1);
  pi(0, 0) = 0.2;
  pi(1, 0) = 0.5;
  const HeirParams ps = combine_heir_probs(pi, u, Combiner::kMin);
  REQUIRE(ps(3, 0) == 0.2);                   // both parents -> min
  REQUIRE(ps(0, 0) == 0.0);                   // empty set
  REQUIRE(ps(1, 0) == 0.2);                   // singletons copy their parent
  REQUIRE(ps(2, 0) == 0.5);
  const HeirParams pm = combine_heir_probs(pi, u, Combiner::kMax);
  REQUIRE(pm(3, 0) == 0.5);
  REQUIRE(pm(0, 0) == 0.0);                   // empty set is zero under max too
}

TEST_CASE("min combiner monotonicity over nested subsets") {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> kdist(2, 4), ddist(1, 6);
  for (int rep = 0; rep < 1000; ++rep) {
    const int K = kdist(gen);
    const int d = ddist(gen);
    const auto u = MembershipMatrix::subsets(K);
    const auto ps = combine_heir_probs(random_pi(gen, K, d), u, Combiner::kMin);
    for (int h1 = 1; h1 < u.heirs(); ++h1)
      for (int h2 = 1; h2 < u.heirs(); ++h2) {
        if ((h1 & h2) != h1) continue;  // require subset(h1) within subset(h2)
        for (int j = 0; j < d; ++j) REQUIRE(ps(h2, j) <= ps(h1, j));
      }
  }
}

TEST_CASE("parent weights back-map") {
  const auto u = MembershipMatrix::subsets(2);
  SECTION("direct summation") {
    const auto alpha = parent_weights_from_heir({0.1, 0.25, 0.20, 0.45}, u);
    REQUIRE_THAT(alpha[0], Catch::Matchers::WithinAbs(0.70, 1e-15));
    REQUIRE_THAT(alpha[1], Catch::Matchers::WithinAbs(0.65, 1e-15));
  }
  SECTION("empty cluster contributes to no parent") {
    const auto alpha = parent_weights_from_heir({1.0, 0.0, 0.0, 0.0}, u);
    REQUIRE(alpha == std::vector<double>{0.0, 0.0});
  }
  SECTION("uniform weights") {
    const auto alpha = parent_weights_from_heir({0.25, 0.25, 0.25, 0.25}, u);
    REQUIRE_THAT(alpha[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(alpha[1], Catch::Matchers::WithinAbs(0.5, 1e-15));
  }
}

TEST_CASE("weight map is linear under convex combinations") {
  const auto u = MembershipMatrix::subsets(3);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    MixtureWeights w1(u.heirs()), w2(u.heirs());
    double s1 = 0, s2 = 0;
    for (int h = 0; h < u.heirs(); ++h) {
      s1 += w1[h] = unif(gen);
      s2 += w2[h] = unif(gen);
    }
    for (int h = 0; h < u.heirs(); ++h) {
      w1[h] /= s1;
      w2[h] /= s2;
    }
    const double c = unif(gen);
    MixtureWeights mix(u.heirs());
    for (int h = 0; h < u.heirs(); ++h) mix[h] = c * w1[h] + (1 - c) * w2[h];
    const auto am = parent_weights_from_heir(mix, u);
    const auto a1 = parent_weights_from_heir(w1, u);
    const auto a2 = parent_weights_from_heir(w2, u);
    for (int k = 0; k < 3; ++k)
      REQUIRE_THAT(am[k], Catch::Matchers::WithinAbs(c * a1[k] + (1 - c) * a2[k], 1e-12));
  }
}

TEST_CASE("unit log-likelihood") {
  SECTION("impossible attendance under the empty cluster") {
    const uint8_t y[] = {1};
    const double p[] = {0.0};
    REQUIRE(log_likelihood_unit(y, p) == kNegInf);
  }
  SECTION("certain non-attendance") {
    const uint8_t y[] = {0, 0};
    const double p[] = {0.0, 0.0};
    REQUIRE(log_likelihood_unit(y, p) == 0.0);
  }
  SECTION("hand computation") {
    const uint8_t y[] = {1, 0};
    const double p[] = {0.2, 0.5};
    REQUIRE_THAT(log_likelihood_unit(y, p),
                 Catch::Matchers::WithinAbs(std::log(0.2) + std::log(0.5), 1e-14));
  }
}

TEST_CASE("exp(log-likelihood) equals the direct Bernoulli product") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> punif(0.05, 0.95);
  std::uniform_int_distribution<int> ddist(1, 10), bit(0, 1);
  for (int rep = 0; rep < 500; ++rep) {
    const int d = ddist(gen);
    std::vector<uint8_t> y(d);
    std::vector<double> p(d);
    double direct = 1.0;
    for (int j = 0; j < d; ++j) {
      y[j] = static_cast<uint8_t>(bit(gen));
      p[j] = punif(gen);
      direct *= y[j] ? p[j] : 1.0 - p[j];
    }
    REQUIRE_THAT(std::exp(log_likelihood_unit(y, p)),
                 Catch::Matchers::WithinAbs(direct, 1e-12));
  }
}

TEST_CASE("heir log tables match the direct likelihood") {
  std::mt19937_64 gen(31);
  const auto u = MembershipMatrix::subsets(3);
  const int d = 7;
  const auto ps = combine_heir_probs(random_pi(gen, 3, d), u, Combiner::kMin);
  const HeirLogTables tables = HeirLogTables::from(ps);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<uint8_t> y(d);
    std::vector<int> attended;
    for (int j = 0; j < d; ++j) {
      y[j] = static_cast<uint8_t>(bit(gen));
      if (y[j]) attended.push_back(j);
    }
    for (int h = 0; h < u.heirs(); ++h) {
      const double direct = log_likelihood_unit(y, ps.row(h));
      const double fast = tables.log_lik(h, attended);
      if (std::isinf(direct))
        REQUIRE(std::isinf(fast));
      else
        REQUIRE_THAT(fast, Catch::Matchers::WithinAbs(direct, 1e-12));
    }
  }
}

TEST_CASE("probability clamp keeps the open interval") {
  REQUIRE(clamp_prob(0.0) == kProbClamp);
  REQUIRE(clamp_prob(1.0) == 1.0 - kProbClamp);
  REQUIRE(clamp_prob(0.37) == 0.37);
}

TEST_CASE("hyperparameter validation") {
  REQUIRE_NOTHROW(Hyperparams::uniform(4, 2, 3));
  REQUIRE_THROWS_AS(Hyperparams::uniform(4, 2, 3, 0.0), ConfigError);
  REQUIRE_THROWS_AS(Hyperparams::uniform(4, 2, 3, 1.0, -1.0), ConfigError);
}

TEST_CASE("combiner names round trip") {
  REQUIRE(combiner_from_name("min") == Combiner::kMin);
  REQUIRE(combiner_from_name("max") == Combiner::kMax);
  REQUIRE_THROWS_AS(combiner_from_name("median"), ConfigError);
}
