// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bnp/errors.hpp"
#include "bnp/partition.hpp"

namespace bnp {

// Concentration alpha > 0 and discount 0 <= discount < 1. A zero discount is
// the Dirichlet process.
class PitmanYorParams {
 public:
  explicit PitmanYorParams(double alpha = 1.0, double discount = 0.0)
      : alpha_(alpha), discount_(discount) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive and finite");
    if (!(discount >= 0.0 && discount < 1.0)) throw DomainError("discount must lie in [0, 1)");
  }

  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double discount() const { return discount_; }
  [[nodiscard]] bool is_dirichlet() const { return discount_ == 0.0; }

  // Weight of opening table number s+1 when s tables are occupied.
  [[nodiscard]] double new_table_weight(int occupied) const { return alpha_ + discount_ * occupied; }

  friend bool operator==(const PitmanYorParams&, const PitmanYorParams&) = default;

 private:
  double alpha_;
  double discount_;
};

namespace detail {

inline constexpr int kDirectProductCutoff = 64;

// log((a)(a+1)...(a+n-1)) by direct product; the product is flushed into the
// log before it can overflow.
inline double log_product_of_shifts(double a, int n) {
  double log_total = 0.0;
  double product = 1.0;
  for (int k = 0; k < n; ++k) {
    product *= a + k;
    if (product > 1e250) {
      log_total += std::log(product);
      product = 1.0;
    }
  }
  return log_total + std::log(product);
}

}  // namespace detail

// log of a(a+1)...(a+n-1); zero for n = 0.
inline double log_rising_factorial(double a, int n) {
  if (!(a > 0.0)) throw DomainError("rising factorial requires a > 0");
  if (n < 0) throw DomainError("rising factorial requires n >= 0");
  if (n < detail::kDirectProductCutoff) return detail::log_product_of_shifts(a, n);
  return std::lgamma(a + n) - std::lgamma(a);
}

// log of (1-d)(2-d)...(c-d); zero for c = 0.
inline double log_discount_factorial(int c, double discount) {
  if (c < 0) throw DomainError("discounted factorial requires c >= 0");
  if (!(discount >= 0.0 && discount < 1.0)) throw DomainError("discount must lie in [0, 1)");
  if (c < detail::kDirectProductCutoff) return detail::log_product_of_shifts(1.0 - discount, c);
  return std::lgamma(c + 1.0 - discount) - std::lgamma(1.0 - discount);
}

// Log prior probability of a partition with the given block sizes.
inline double log_eppf(std::span<const int> block_sizes, const PitmanYorParams& params) {
  int n = 0;
  double log_p = 0.0;
  for (std::size_t k = 0; k < block_sizes.size(); ++k) {
    const int b = block_sizes[k];
    if (b < 1) throw DomainError("block sizes must be positive");
    n += b;
    log_p += std::log(params.new_table_weight(static_cast<int>(k)));
    log_p += log_discount_factorial(b - 1, params.discount());
  }
  if (n == 0) throw DomainError("partition of zero items");
  return log_p - log_rising_factorial(params.alpha(), n);
}

inline double log_eppf(const Partition& p, const PitmanYorParams& params) {
  const auto sizes = p.block_sizes();
  return log_eppf(std::span<const int>(sizes), params);
}

struct SeatingWeights {
  std::vector<double> existing;  // log probability of joining each table
  double fresh = 0.0;            // log probability of opening a new table
};

// Sequential seating rule for the next customer given current table sizes.
inline SeatingWeights seating_log_weights(std::span<const int> table_sizes, int seated,
                                          const PitmanYorParams& params) {
  if (seated < 0) throw DomainError("seated count must be nonnegative");
  int total = 0;
  for (int size : table_sizes) {
    if (size < 1) throw DomainError("table sizes must be positive");
    total += size;
  }
  if (total != seated) throw DomainError("table sizes must sum to the number seated");
  const double log_norm = std::log(params.alpha() + seated);
  SeatingWeights w;
  w.existing.reserve(table_sizes.size());
  for (int size : table_sizes) w.existing.push_back(std::log(size - params.discount()) - log_norm);
  w.fresh = std::log(params.new_table_weight(static_cast<int>(table_sizes.size()))) - log_norm;
  return w;
}

}  // namespace bnp
