// Apache License, Version 2.0, refer to LICENSE.txt

#include "bnp/priors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using bnp::Partition;
using bnp::PitmanYorParams;

TEST(RisingFactorial, Values) {
  EXPECT_NEAR(bnp::log_rising_factorial(1.0, 4), std::log(24.0), 1e-14);
  EXPECT_EQ(bnp::log_rising_factorial(2.5, 0), 0.0);
  EXPECT_NEAR(bnp::log_rising_factorial(0.5, 2), std::log(0.75), 1e-14);
  EXPECT_THROW(bnp::log_rising_factorial(0.0, 3), bnp::DomainError);
  EXPECT_THROW(bnp::log_rising_factorial(-1.0, 3), bnp::DomainError);
}

TEST(RisingFactorial, DirectAndLgammaRegimesAgree) {
  for (double a : {0.3, 1.0, 3.0, 50.0}) {
    for (int n : {63, 64, 200}) {
      const double via_gamma = std::lgamma(a + n) - std::lgamma(a);
      EXPECT_NEAR(bnp::log_rising_factorial(a, n), via_gamma, 1e-10 * std::abs(via_gamma)) << a << " " << n;
    }
  }
}

TEST(DiscountFactorial, Values) {
  EXPECT_EQ(bnp::log_discount_factorial(0, 0.4), 0.0);
  EXPECT_NEAR(bnp::log_discount_factorial(3, 0.0), std::log(6.0), 1e-14);
  EXPECT_NEAR(bnp::log_discount_factorial(2, 0.5), std::log(0.75), 1e-14);
  EXPECT_NEAR(bnp::log_discount_factorial(100, 0.3), std::lgamma(100.7) - std::lgamma(0.7), 1e-10);
  EXPECT_THROW(bnp::log_discount_factorial(2, 1.0), bnp::DomainError);
}

TEST(Params, Validation) {
  EXPECT_THROW(PitmanYorParams(0.0, 0.0), bnp::DomainError);
  EXPECT_THROW(PitmanYorParams(1.0, -0.1), bnp::DomainError);
  EXPECT_THROW(PitmanYorParams(1.0, 1.0), bnp::DomainError);
  EXPECT_TRUE(PitmanYorParams(2.0).is_dirichlet());
}

TEST(Eppf, TwoItems) {
  const PitmanYorParams dp(1.0, 0.0);
  EXPECT_NEAR(std::exp(bnp::log_eppf(Partition::from_rgs({0, 0}), dp)), 0.5, 1e-15);
  EXPECT_NEAR(std::exp(bnp::log_eppf(Partition::from_rgs({0, 1}), dp)), 0.5, 1e-15);
  const PitmanYorParams py(1.0, 0.3);
  EXPECT_NEAR(std::exp(bnp::log_eppf(Partition::from_rgs({0, 0}), py)), 0.7 / 2, 1e-15);
  EXPECT_NEAR(std::exp(bnp::log_eppf(Partition::from_rgs({0, 1}), py)), 1.3 / 2, 1e-15);
}

TEST(Eppf, AllSingletons) {
  EXPECT_NEAR(std::exp(bnp::log_eppf(Partition::from_rgs({0, 1, 2}), PitmanYorParams(1.0))), 1.0 / 6, 1e-15);
}

// Dirichlet-process formula alpha^s / alpha^(n) * prod (|A_i| - 1)!, written out
// independently with tgamma.
TEST(Eppf, DirichletReduction) {
  for (double alpha : {0.5, 1.0, 3.0}) {
    for (int n = 1; n <= 8; ++n) {
      for (const auto& p : bnp::enumerate_partitions(n)) {
        double rising = 1.0;
        for (int k = 0; k < n; ++k) rising *= alpha + k;
        double value = std::pow(alpha, p.num_blocks()) / rising;
        for (int b : p.block_sizes()) value *= std::tgamma(b);
        EXPECT_NEAR(bnp::log_eppf(p, PitmanYorParams(alpha, 0.0)), std::log(value), 1e-12);
      }
    }
  }
}

TEST(Eppf, Normalizes) {
  for (double alpha : {0.5, 1.0, 3.0}) {
    for (double d : {0.0, 0.3, 0.7}) {
      const PitmanYorParams params(alpha, d);
      for (int n = 1; n <= 8; ++n) {
        double total = 0.0;
        for (const auto& p : bnp::enumerate_partitions(n)) total += std::exp(bnp::log_eppf(p, params));
        EXPECT_NEAR(total, 1.0, 1e-9) << alpha << " " << d << " " << n;
      }
    }
  }
}

// Prior over K for the DP: alpha^s |s(n, s)| / alpha^(n), with s(n, s) the
// Stirling numbers of the first kind.
TEST(Eppf, PriorOverClusterCountMatchesStirlingFirstKind) {
  const double alpha = 1.7;
  for (int n = 1; n <= 10; ++n) {
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n) + 1, std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
    c[0][0] = 1.0;
    for (int m = 1; m <= n; ++m) {
      for (int k = 1; k <= m; ++k) c[m][k] = c[m - 1][k - 1] + (m - 1) * c[m - 1][k];
    }
    double rising = 1.0;
    for (int k = 0; k < n; ++k) rising *= alpha + k;
    for (int s = 1; s <= n; ++s) {
      double total = 0.0;
      for (const auto& p : bnp::enumerate_partitions(n, s)) total += std::exp(bnp::log_eppf(p, PitmanYorParams(alpha)));
      EXPECT_NEAR(total, std::pow(alpha, s) * c[n][s] / rising, 1e-12) << n << " " << s;
    }
  }
}

TEST(Seating, Examples) {
  const PitmanYorParams dp(1.0);
  const auto empty = bnp::seating_log_weights({}, 0, dp);
  EXPECT_TRUE(empty.existing.empty());
  EXPECT_NEAR(empty.fresh, 0.0, 1e-15);

  const std::vector<int> one{3};
  const auto w1 = bnp::seating_log_weights(one, 3, dp);
  EXPECT_NEAR(std::exp(w1.existing[0]), 0.75, 1e-15);
  EXPECT_NEAR(std::exp(w1.fresh), 0.25, 1e-15);

  const std::vector<int> two{2, 1};
  const auto w2 = bnp::seating_log_weights(two, 3, PitmanYorParams(2.0, 0.5));
  EXPECT_NEAR(std::exp(w2.existing[0]), 1.5 / 5, 1e-15);
  EXPECT_NEAR(std::exp(w2.existing[1]), 0.5 / 5, 1e-15);
  EXPECT_NEAR(std::exp(w2.fresh), 3.0 / 5, 1e-15);

  EXPECT_THROW(bnp::seating_log_weights(two, 4, dp), bnp::DomainError);
}

// Product of seating probabilities along any insertion order reproduces the EPPF.
TEST(Seating, ProductMatchesEppfForRandomOrders) {
  std::mt19937 rng(42);
  for (double d : {0.0, 0.4}) {
    const PitmanYorParams params(1.3, d);
    for (int n = 1; n <= 8; ++n) {
      for (const auto& p : bnp::enumerate_partitions(n)) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> table_of_block(static_cast<std::size_t>(p.num_blocks()), -1);
        std::vector<int> sizes;
        double log_prob = 0.0;
        for (int seated = 0; seated < n; ++seated) {
          const int block = p.label(order[static_cast<std::size_t>(seated)]);
          const auto w = bnp::seating_log_weights(sizes, seated, params);
          int& table = table_of_block[static_cast<std::size_t>(block)];
          if (table < 0) {
            log_prob += w.fresh;
            table = static_cast<int>(sizes.size());
            sizes.push_back(1);
          } else {
            log_prob += w.existing[static_cast<std::size_t>(table)];
            ++sizes[static_cast<std::size_t>(table)];
          }
        }
        EXPECT_NEAR(std::exp(log_prob), std::exp(bnp::log_eppf(p, params)), 1e-10);
      }
    }
  }
}
