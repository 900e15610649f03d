#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mimasim/analysis.hpp"
#include "mimasim/cli.hpp"

using namespace mimasim;
using namespace mimasim::analysis;

TEST(AccessDistribution, Validation) {
  EXPECT_THROW(AccessDistribution({0.6, 0.6}), ShapeError);
  EXPECT_THROW(AccessDistribution({-0.1, 0.2}), ShapeError);
  EXPECT_NO_THROW(AccessDistribution({0.5, 0.5}));
  EXPECT_DOUBLE_EQ(AccessDistribution({0.2, 0.3}).transmit_probability(), 0.5);
}

TEST(AccessMatrix, ColumnsMustAgreeInLength) {
  EXPECT_THROW(AccessMatrix({AccessDistribution({0.5}), AccessDistribution({0.2, 0.2})}), ShapeError);
}

TEST(ExpectedSuccesses, HandComputedCases) {
  // Two SUs on one channel, each transmitting w.p. 1/2: success iff exactly one.
  const auto half = symmetric_matrix(2, AccessDistribution({0.5}));
  EXPECT_NEAR(expected_successes(half), 0.5, 1e-15);
  EXPECT_NEAR(enumerate_expected_successes(half), 0.5, 1e-15);
  // Two SUs on disjoint channels always succeed.
  const AccessMatrix disjoint({AccessDistribution::one_hot(2, 0), AccessDistribution::one_hot(2, 1)});
  EXPECT_NEAR(expected_successes(disjoint), 2.0, 1e-15);
  EXPECT_NEAR(enumerate_expected_successes(disjoint), 2.0, 1e-15);
  // Both pinned to the same channel always collide.
  const AccessMatrix same({AccessDistribution::one_hot(2, 0), AccessDistribution::one_hot(2, 0)});
  EXPECT_NEAR(expected_successes(same), 0.0, 1e-15);
  EXPECT_NEAR(enumerate_expected_successes(same), 0.0, 1e-15);
}

TEST(ExpectedSuccesses, FormulaMatchesEnumerationOnRandomMatrices) {
  Rng rng(2024);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int i = 0; i < 200; ++i) {
    const int M = dim(rng), N = dim(rng);
    const auto P = cli::random_access_matrix(M, N, rng);
    ASSERT_NEAR(expected_successes(P), enumerate_expected_successes(P), 1e-12) << "instance " << i;
  }
}

TEST(ExpectedSuccesses, SymmetricFormMatchesGeneralForm) {
  for (int M = 1; M <= 6; ++M)
    for (int N = 1; N <= 5; ++N) {
      const auto p = AccessDistribution::uniform(N, 0.7 / N);
      EXPECT_NEAR(symmetric_expected_successes(p, M), expected_successes(symmetric_matrix(M, p)), 1e-12);
    }
}

TEST(ExpectedSuccesses, MonteCarloAgreesWithFormula) {
  const AccessMatrix P({AccessDistribution({0.3, 0.2}), AccessDistribution({0.1, 0.6}), AccessDistribution({0.25, 0.25})});
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int trials = 400'000;
  double hits = 0.0;
  for (int t = 0; t < trials; ++t) {
    int occ[2] = {0, 0};
    for (std::size_t m = 0; m < 3; ++m) {
      const double x = u(rng);
      if (x < P.column(m)[0]) ++occ[0];
      else if (x < P.column(m)[0] + P.column(m)[1]) ++occ[1];
    }
    hits += (occ[0] == 1) + (occ[1] == 1);
  }
  EXPECT_NEAR(hits / trials, expected_successes(P), 0.01 * expected_successes(P));
}

TEST(Enumeration, TractabilityGuard) {
  // 11 SUs each split over 10 channels plus abstain: 11^11 outcomes.
  const auto P = symmetric_matrix(11, AccessDistribution::uniform(10, 0.05));
  EXPECT_THROW(enumerate_expected_successes(P), TractabilityError);
}

TEST(Theorem1, OptimumClosedForm) {
  EXPECT_DOUBLE_EQ(optimal_symmetric_probability(2, 2), 0.5);
  EXPECT_DOUBLE_EQ(max_expected_successes(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(optimal_symmetric_probability(4, 2), 0.25);
  EXPECT_NEAR(max_expected_successes(4, 2), 2.0 * std::pow(0.75, 3), 1e-15);
  EXPECT_NEAR(max_expected_successes(3, 5), 3.0 * std::pow(0.8, 2), 1e-15);
  EXPECT_THROW(max_expected_successes(0, 3), DomainError);
  EXPECT_THROW(optimal_symmetric_probability(3, 0), DomainError);
}

TEST(Theorem1, GridSearchFindsClosedForm) {
  for (int M = 2; M <= 6; ++M)
    for (int N = 1; N <= 6; ++N) {
      const auto r = verify_theorem1(M, N, 1e-3);
      EXPECT_NEAR(r.argmax_p, std::min(1.0 / N, 1.0 / M), 1e-3) << M << "," << N;
      EXPECT_NEAR(r.max_value, max_expected_successes(M, N), 1e-9) << M << "," << N;
      EXPECT_TRUE(r.formula_match);
    }
}

TEST(Theorem1, ValueAtOptimumMatchesGeneralFormula) {
  for (int M = 1; M <= 6; ++M)
    for (int N = 1; N <= 6; ++N) {
      const auto p = AccessDistribution::uniform(N, optimal_symmetric_probability(M, N));
      EXPECT_NEAR(expected_successes(symmetric_matrix(M, p)), max_expected_successes(M, N), 1e-12);
    }
}

TEST(Rerendezvous, CorrectedFormMatchesGeneralFormula) {
  for (int N = 1; N <= 7; ++N)
    for (int M = 1; M <= N; ++M)
      for (int l = 0; l <= M; ++l)
        EXPECT_NEAR(rerendezvous_expected_successes(M, N, l), expected_successes(rerendezvous_matrix(M, N, l)),
                    1e-12)
            << M << "," << N << "," << l;
}

TEST(Rerendezvous, PrintedFormDiffersUnlessMEqualsN) {
  // M=2, N=4, l=0: corrected 2 (3/4) = 1.5, printed 2 (3/4)^3 = 0.84375.
  EXPECT_NEAR(rerendezvous_expected_successes(2, 4, 0), 1.5, 1e-15);
  EXPECT_NEAR(rerendezvous_expected_successes_printed(2, 4, 0), 0.84375, 1e-15);
  for (int N = 2; N <= 6; ++N)
    for (int l = 0; l <= N; ++l)
      EXPECT_NEAR(rerendezvous_expected_successes_printed(N, N, l), rerendezvous_expected_successes(N, N, l), 1e-12);
}

TEST(Rerendezvous, ScopeErrors) {
  EXPECT_THROW(rerendezvous_expected_successes(5, 3, 0), DomainError);
  EXPECT_THROW(rerendezvous_expected_successes(3, 5, 4), DomainError);
  EXPECT_THROW(verify_theorem2(6, 2), DomainError);
}

TEST(Theorem2, GainFactorisesThroughF) {
  for (int N = 2; N <= 8; ++N)
    for (int M = 2; M <= N; ++M) {
      const double q = 1.0 - 1.0 / N;
      const double base = rerendezvous_expected_successes(M, N, 0);
      for (int l = 0; l < M; ++l)
        EXPECT_NEAR(rerendezvous_expected_successes(M, N, l) - base,
                    appendix_f<double>(M, N, l) * std::pow(q, M - l - 1), 1e-12);
    }
}

TEST(Theorem2, EqualityExactlyAtZeroAndOne) {
  for (int N = 2; N <= 6; ++N)
    for (int M = 2; M <= N; ++M) {
      const auto r = verify_theorem2(M, N);
      EXPECT_TRUE(r.holds) << M << "," << N;
      EXPECT_EQ(r.equality_set, (std::set<int>{0, 1}));
      for (int l = 2; l <= M; ++l) EXPECT_GT(r.gaps[static_cast<std::size_t>(l)], 1e-12);
    }
}

TEST(Appendix, RootsAndDerivatives) {
  for (int N = 2; N <= 8; ++N)
    for (int M = 2; M <= N; ++M) {
      EXPECT_NEAR(appendix_f<double>(M, N, 0.0), 0.0, 1e-12);
      EXPECT_NEAR(appendix_f<double>(M, N, 1.0), 0.0, 1e-12);
      const auto r = check_appendix(M, N, 1e-6, 1e-4);
      EXPECT_TRUE(r.holds) << M << "," << N << " fd " << r.max_fd_error_first << " " << r.max_fd_error_second;
      EXPECT_GT(r.min_second_derivative, 0.0);
    }
}

TEST(Appendix, DerivativeAtKnownPoint) {
  // M=2, N=2: f(l) = (4 + l^2 - 3l)/2 - 2 (1/2)^l, f'(0) = -3/2 + 2 ln 2.
  EXPECT_NEAR(appendix_f_prime<double>(2, 2, 0.0), -1.5 + 2.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(appendix_f_double_prime<double>(2, 2, 0.0), 1.0 - 2.0 * std::log(2.0) * std::log(2.0), 1e-14);
  EXPECT_THROW(appendix_f<double>(2, 1, 0.0), DomainError);
}
