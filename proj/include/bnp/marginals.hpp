// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>

#include "bnp/errors.hpp"
#include "bnp/numeric.hpp"

namespace bnp {

// Prior on a cluster's location parameter. Observations within a cluster are
// N(theta, 1); the observation variance is fixed at one throughout.
class ComponentPrior {
 public:
  struct UniformInterval {
    double lo;
    double hi;
  };
  struct ZeroMeanGaussian {
    double sigma2;
  };

  static ComponentPrior uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
      throw DomainError("uniform prior needs finite lo < hi");
    }
    return ComponentPrior(UniformInterval{lo, hi});
  }

  static ComponentPrior gaussian(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("gaussian prior needs sigma2 > 0");
    return ComponentPrior(ZeroMeanGaussian{sigma2});
  }

  [[nodiscard]] bool is_uniform() const { return std::holds_alternative<UniformInterval>(v_); }
  [[nodiscard]] bool is_gaussian() const { return !is_uniform(); }
  [[nodiscard]] const UniformInterval& interval() const { return std::get<UniformInterval>(v_); }
  [[nodiscard]] double width() const { return interval().hi - interval().lo; }
  [[nodiscard]] double sigma2() const { return std::get<ZeroMeanGaussian>(v_).sigma2; }
  [[nodiscard]] double precision() const { return 1.0 / sigma2(); }

  [[nodiscard]] bool contains(double x) const {
    return !is_uniform() || (x > interval().lo && x < interval().hi);
  }

  [[nodiscard]] std::string describe() const {
    if (is_uniform()) return "uniform[" + std::to_string(interval().lo) + "," + std::to_string(interval().hi) + "]";
    return "gaussian(sigma2=" + std::to_string(sigma2()) + ")";
  }

 private:
  explicit ComponentPrior(std::variant<UniformInterval, ZeroMeanGaussian> v) : v_(v) {}
  std::variant<UniformInterval, ZeroMeanGaussian> v_;
};

// Sufficient statistics of one cluster. After remove() the min/max fields
// only bound the remaining data; they are exact for stats built by add/merge.
struct ClusterStats {
  int count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  static ClusterStats of(std::span<const double> values) {
    ClusterStats s;
    for (double x : values) s.add(x);
    return s;
  }

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
    min = std::min(min, x);
    max = std::max(max, x);
  }

  void remove(double x) {
    if (count <= 0) throw DomainError("remove from an empty cluster");
    if (--count == 0) {
      *this = ClusterStats{};
      return;
    }
    sum -= x;
    sum_sq -= x * x;
  }

  [[nodiscard]] ClusterStats with(double x) const {
    ClusterStats s = *this;
    s.add(x);
    return s;
  }

  [[nodiscard]] double mean() const { return sum / count; }
  [[nodiscard]] bool empty() const { return count == 0; }

  friend ClusterStats merge(const ClusterStats& a, const ClusterStats& b) {
    return {a.count + b.count, a.sum + b.sum, a.sum_sq + b.sum_sq, std::min(a.min, b.min), std::max(a.max, b.max)};
  }
};

// log m(x_A) = log of the integral over theta of prod_i N(x_i; theta, 1) pi(theta).
inline double log_marginal(const ClusterStats& stats, const ComponentPrior& prior) {
  if (stats.count < 1) throw DomainError("marginal likelihood of an empty cluster");
  const double n = stats.count;
  if (prior.is_gaussian()) {
    const double tau = prior.precision();
    return -0.5 * n * kLogTwoPi + 0.5 * std::log(tau / (n + tau)) -
           0.5 * (stats.sum_sq - stats.sum * stats.sum / (n + tau));
  }
  // Uniform: Gaussian integral in theta truncated to [lo, hi].
  const auto& iv = prior.interval();
  const double mean = stats.sum / n;
  const double root_n = std::sqrt(n);
  const double log_mass = log_normal_interval_mass(root_n * (iv.lo - mean), root_n * (iv.hi - mean));
  return -std::log(iv.hi - iv.lo) - 0.5 * (n - 1.0) * kLogTwoPi - 0.5 * std::log(n) -
         0.5 * (stats.sum_sq - stats.sum * mean) + log_mass;
}

// log [ m(S) m(T) / m(S u T) ].
inline double log_marginal_ratio(const ClusterStats& s, const ClusterStats& t, const ComponentPrior& prior) {
  return log_marginal(s, prior) + log_marginal(t, prior) - log_marginal(merge(s, t), prior);
}

// Lower bound on the truncation-mass quotient when every datum sits at least
// c inside the interval: erf(c / sqrt 2)^2.
inline double lemma1_constant(double c) {
  if (!(c > 0.0)) throw DomainError("margin c must be positive");
  const double e = std::erf(c / std::numbers::sqrt2);
  return e * e;
}

struct TruncationRange {
  double lower;
  double upper;
};

inline TruncationRange truncation_ratio_range(double c) {
  const double e = std::erf(c / std::numbers::sqrt2);
  return {e * e, 1.0 / e};
}

inline double lemma1_bound(int n_s, int n_t, double c, double width) {
  if (n_s < 1 || n_t < 1) throw DomainError("cluster sizes must be positive");
  if (!(width > 0.0)) throw DomainError("interval width must be positive");
  const double ns = n_s;
  const double nt = n_t;
  return lemma1_constant(c) * std::sqrt(2.0 * std::numbers::pi) / width * std::sqrt((ns + nt) / (ns * nt));
}

// Exponent of the Gaussian-prior marginal ratio:
//   n_s^2 mean_S^2/(n_s+tau) + n_t^2 mean_T^2/(n_t+tau) - n^2 mean_{S+T}^2/(n+tau)
inline double lemma2_F(double tau, const ClusterStats& s, const ClusterStats& t) {
  if (s.count < 1 || t.count < 1) throw DomainError("both clusters must be nonempty");
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  const double total = s.sum + t.sum;
  return s.sum * s.sum / (s.count + tau) + t.sum * t.sum / (t.count + tau) -
         total * total / (s.count + t.count + tau);
}

// The deterministic factor sqrt(tau) * sqrt((n_s+n_t+tau)/((n_s+tau)(n_t+tau)))
// multiplying exp(F/2) in the Gaussian-prior marginal ratio.
inline double lemma2_prefactor(int n_s, int n_t, double tau) {
  const double ns = n_s;
  const double nt = n_t;
  return std::sqrt(tau) * std::sqrt((ns + nt + tau) / ((ns + tau) * (nt + tau)));
}

inline double lemma2_bound(int n_s, int n_t, double tau) {
  if (n_s < 1 || n_t < 1) throw DomainError("cluster sizes must be positive");
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  const double ns = n_s;
  const double nt = n_t;
  return std::sqrt(0.5 * tau / (1.0 + tau) * (ns + nt) / (ns * nt));
}

struct Lemma2Root {
  enum class Kind { PositiveRoot, NoPositiveRoot, AllPositiveReals };
  Kind kind = Kind::NoPositiveRoot;
  double value = std::numeric_limits<double>::quiet_NaN();
  // For NoPositiveRoot: whether F >= 0 on all tau > 0. False only when the
  // two means coincide and are nonzero (F(0) = 0, F < 0 afterwards).
  bool nonnegative = true;
};

// Positive root of F(tau) = 0 in tau. Clearing denominators gives
//   -2ab tau^2 + (a^2 n_t + b^2 n_s - 2ab(n_s+n_t)) tau + (a n_t - b n_s)^2
// with a, b the cluster sums. Zero means are resolved before Q is formed.
inline Lemma2Root lemma2_positive_root(const ClusterStats& s, const ClusterStats& t) {
  if (s.count < 1 || t.count < 1) throw DomainError("both clusters must be nonempty");
  const double a = s.sum;
  const double b = t.sum;
  Lemma2Root r;
  if (a == 0.0 && b == 0.0) {
    r.kind = Lemma2Root::Kind::AllPositiveReals;
    return r;
  }
  if (a == 0.0 || b == 0.0 || a * b < 0.0) {
    // Opposite signs: both roots of the quadratic are negative.
    r.kind = Lemma2Root::Kind::NoPositiveRoot;
    return r;
  }
  const double ns = s.count;
  const double nt = t.count;
  const double mean_s = a / ns;
  const double mean_t = b / nt;
  const double q = ns * mean_s / mean_t + nt * mean_t / mean_s - 2.0 * (ns + nt);
  const double diff = mean_s - mean_t;
  const double d = 8.0 * ns * nt * diff * diff / (mean_s * mean_t);
  if (d == 0.0) {
    r.kind = Lemma2Root::Kind::NoPositiveRoot;
    r.nonnegative = false;
    return r;
  }
  const double root = std::sqrt(q * q + d);
  r.kind = Lemma2Root::Kind::PositiveRoot;
  r.value = q >= 0.0 ? 0.25 * (root + q) : d / (4.0 * (root - q));
  return r;
}

struct NormalParams {
  double mean;
  double variance;
};

// Posterior of theta given a cluster under the N(0, sigma2) prior.
inline NormalParams posterior_params(const ClusterStats& stats, double sigma2) {
  if (stats.count < 1) throw DomainError("posterior of an empty cluster");
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  const double denom = stats.count * sigma2 + 1.0;
  return {sigma2 * stats.sum / denom, sigma2 / denom};
}

}  // namespace bnp
