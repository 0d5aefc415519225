// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace bnp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Streaming log-sum-exp. Values are accumulated relative to the running
// maximum so no intermediate exp() overflows.
class LogSumAccumulator {
 public:
  void add(double log_value) {
    if (log_value == kNegInf) return;
    if (log_value > max_) {
      sum_ = (max_ == kNegInf ? 0.0 : sum_ * std::exp(max_ - log_value)) + 1.0;
      max_ = log_value;
    } else {
      sum_ += std::exp(log_value - max_);
    }
  }

  void merge(const LogSumAccumulator& other) {
    if (other.max_ == kNegInf) return;
    if (other.max_ > max_) {
      sum_ = (max_ == kNegInf ? 0.0 : sum_ * std::exp(max_ - other.max_)) + other.sum_;
      max_ = other.max_;
    } else {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    }
  }

  [[nodiscard]] double value() const {
    return max_ == kNegInf ? kNegInf : max_ + std::log(sum_);
  }

  [[nodiscard]] bool empty() const { return max_ == kNegInf; }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> values) {
  const auto it = std::max_element(values.begin(), values.end());
  if (it == values.end() || *it == kNegInf) return kNegInf;
  const double m = *it;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

// Standard normal CDF and survival function via erfc, which keeps full
// relative accuracy in the tails.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// log P(lo_z < Z < hi_z) for standard normal Z. When both endpoints sit in the
// same tail the difference is formed from the small-tail side.
inline double log_normal_interval_mass(double lo_z, double hi_z) {
  if (!(hi_z > lo_z)) return kNegInf;
  double mass;
  if (lo_z > 0.0) {
    mass = normal_sf(lo_z) - normal_sf(hi_z);
  } else if (hi_z < 0.0) {
    mass = normal_cdf(hi_z) - normal_cdf(lo_z);
  } else {
    mass = 1.0 - normal_cdf(lo_z) - normal_sf(hi_z);
  }
  return mass > 0.0 ? std::log(mass) : kNegInf;
}

inline double relative_error(double value, double reference) {
  const double scale = std::max(std::abs(reference), std::numeric_limits<double>::min());
  return std::abs(value - reference) / scale;
}

}  // namespace bnp
