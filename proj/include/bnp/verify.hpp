// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bnp/errors.hpp"
#include "bnp/exact_posterior.hpp"
#include "bnp/io.hpp"
#include "bnp/marginals.hpp"
#include "bnp/partition.hpp"
#include "bnp/priors.hpp"
#include "bnp/random.hpp"

namespace bnp::verify {

struct Options {
  // Multiplies the number of random cases in every sampled suite.
  double scale = 1.0;
  std::uint64_t seed = 0;
  int decomposition_max_n = 9;
  int threads = 1;
  // Test hook: added to every closed-form log marginal in the quadrature
  // suite, which must then fail.
  double corrupt_marginal = 0.0;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  long checks = 0;
  double seconds = 0.0;
  std::optional<KeyValues> counterexample;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"eppf-normalization", "seating", "marginal-quadrature",
                                              "lemma1",             "lemma2",  "decomposition"};
  return names;
}

// Adaptive Gauss-Kronrod value of log of the integral over theta of
// prod_i N(x_i; theta, 1) prior(theta). The integrand is scaled by its value
// at the sample mean and the range is split around the posterior bulk.
inline double quadrature_log_marginal(std::span<const double> xs, const ComponentPrior& prior) {
  if (xs.empty()) throw DomainError("quadrature of an empty cluster");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double shift = 0.0;
  for (double x : xs) shift += -0.5 * kLogTwoPi - 0.5 * (x - mean) * (x - mean);

  const auto integrand = [&](double theta) {
    double log_value = -shift;
    for (double x : xs) log_value += -0.5 * kLogTwoPi - 0.5 * (x - theta) * (x - theta);
    if (prior.is_uniform()) {
      log_value -= std::log(prior.width());
    } else {
      log_value += -0.5 * (kLogTwoPi + std::log(prior.sigma2())) - 0.5 * theta * theta / prior.sigma2();
    }
    return std::exp(log_value);
  };

  double centre = mean;
  double spread = 1.0 / std::sqrt(n);
  if (prior.is_gaussian()) {
    const double tau = prior.precision();
    centre = n * mean / (n + tau);
    spread = 1.0 / std::sqrt(n + tau);
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cuts;
  const double lo = prior.is_uniform() ? prior.interval().lo : -inf;
  const double hi = prior.is_uniform() ? prior.interval().hi : inf;
  cuts.push_back(lo);
  for (int k = -12; k <= 12; k += 2) {
    const double c = centre + k * spread;
    if (c > lo && c < hi) cuts.push_back(c);
  }
  cuts.push_back(hi);
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += GK::integrate(integrand, cuts[i], cuts[i + 1], 6, 1e-13);
  }
  return shift + std::log(total);
}

namespace detail {

class Recorder {
 public:
  explicit Recorder(std::string name) : start_(std::chrono::steady_clock::now()) { result_.name = std::move(name); }

  void check(bool ok, const std::function<KeyValues()>& describe) {
    ++result_.checks;
    if (!ok && result_.passed) {
      result_.passed = false;
      result_.counterexample = describe();
    }
  }

  SuiteResult finish() {
    result_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return result_;
  }

 private:
  SuiteResult result_;
  std::chrono::steady_clock::time_point start_;
};

inline long scaled(double base, const Options& opts) {
  return std::max(1L, std::lround(base * opts.scale));
}

inline std::vector<double> uniform_values(Engine& rng, int n, double lo, double hi) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = lo + (hi - lo) * uniform_open01(rng);
  return xs;
}

inline std::vector<double> normal_values(Engine& rng, int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = normal(rng);
  return xs;
}

inline std::string join(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

}  // namespace detail

inline SuiteResult eppf_normalization(const Options&) {
  detail::Recorder rec("eppf-normalization");
  for (double alpha : {0.5, 1.0, 3.0}) {
    for (double d : {0.0, 0.3, 0.7}) {
      const PitmanYorParams params(alpha, d);
      for (int n = 1; n <= 10; ++n) {
        LogSumAccumulator acc;
        PartitionStream stream(n);
        std::vector<int> sizes;
        while (stream.next()) {
          const auto& rgs = stream.rgs();
          sizes.assign(static_cast<std::size_t>(*std::max_element(rgs.begin(), rgs.end()) + 1), 0);
          for (int l : rgs) ++sizes[static_cast<std::size_t>(l)];
          acc.add(log_eppf(sizes, params));
        }
        const double total = std::exp(acc.value());
        rec.check(std::abs(total - 1.0) < 1e-9, [&] {
          return KeyValues{{"alpha", format_double(alpha)}, {"discount", format_double(d)},
                           {"n", std::to_string(n)}, {"sum", format_double(total)}};
        });
      }
    }
  }
  return rec.finish();
}

inline SuiteResult seating(const Options& opts) {
  detail::Recorder rec("seating");
  Engine rng = make_engine(opts.seed, 101);
  const long orders = detail::scaled(100, opts);
  for (double d : {0.0, 0.4}) {
    const PitmanYorParams params(1.3, d);
    for (int n = 1; n <= 8; ++n) {
      PartitionStream stream(n);
      std::vector<int> order(static_cast<std::size_t>(n));
      while (stream.next()) {
        const auto& rgs = stream.rgs();
        const int s = *std::max_element(rgs.begin(), rgs.end()) + 1;
        std::vector<int> block_sizes(static_cast<std::size_t>(s), 0);
        for (int l : rgs) ++block_sizes[static_cast<std::size_t>(l)];
        const double expected = log_eppf(block_sizes, params);
        for (long k = 0; k < orders; ++k) {
          std::iota(order.begin(), order.end(), 0);
          for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
          std::vector<int> table_of(static_cast<std::size_t>(s), -1);
          std::vector<int> tables;
          double log_prob = 0.0;
          for (int seated = 0; seated < n; ++seated) {
            const auto block = static_cast<std::size_t>(rgs[static_cast<std::size_t>(order[static_cast<std::size_t>(seated)])]);
            const auto w = seating_log_weights(tables, seated, params);
            if (table_of[block] < 0) {
              log_prob += w.fresh;
              table_of[block] = static_cast<int>(tables.size());
              tables.push_back(1);
            } else {
              log_prob += w.existing[static_cast<std::size_t>(table_of[block])];
              ++tables[static_cast<std::size_t>(table_of[block])];
            }
          }
          const double a = std::exp(log_prob);
          const double b = std::exp(expected);
          rec.check(std::abs(a - b) <= 1e-10, [&] {
            return KeyValues{{"partition", Partition::from_rgs(rgs).to_string()}, {"discount", format_double(d)},
                             {"seating_product", format_double(a)}, {"eppf", format_double(b)}};
          });
        }
      }
    }
  }
  return rec.finish();
}

inline SuiteResult marginal_quadrature(const Options& opts) {
  detail::Recorder rec("marginal-quadrature");
  Engine rng = make_engine(opts.seed, 102);
  const long cases = detail::scaled(200, opts);
  for (int kind = 0; kind < 2; ++kind) {
    for (long c = 0; c < cases; ++c) {
      const int n = 1 + static_cast<int>(uniform_index(rng, 50));
      const auto xs = detail::uniform_values(rng, n, -10.0, 10.0);
      const auto prior = kind == 0 ? ComponentPrior::uniform(-10.0, 10.0)
                                   : ComponentPrior::gaussian(std::exp(std::log(0.1) + std::log(1000.0) * uniform_open01(rng)));
      const double closed = log_marginal(ClusterStats::of(xs), prior) + opts.corrupt_marginal;
      const double quad = quadrature_log_marginal(xs, prior);
      const double rel = std::abs(std::expm1(closed - quad));
      rec.check(rel < 1e-6, [&] {
        return KeyValues{{"prior", prior.describe()}, {"data", detail::join(xs)}, {"closed_form", format_double(closed)},
                         {"quadrature", format_double(quad)}, {"relative_error", format_double(rel)}};
      });
    }
  }
  return rec.finish();
}

inline SuiteResult lemma1(const Options& opts) {
  detail::Recorder rec("lemma1");
  Engine rng = make_engine(opts.seed, 103);
  const auto prior = ComponentPrior::uniform(-10.0, 10.0);
  const double c = 3.0;
  const long cases = detail::scaled(1000, opts);
  for (long k = 0; k < cases; ++k) {
    const int ns = 1 + static_cast<int>(uniform_index(rng, 30));
    const int nt = 1 + static_cast<int>(uniform_index(rng, 30));
    const auto xs = detail::uniform_values(rng, ns, -10.0 + c, 10.0 - c);
    const auto xt = detail::uniform_values(rng, nt, -10.0 + c, 10.0 - c);
    const double ratio = std::exp(log_marginal_ratio(ClusterStats::of(xs), ClusterStats::of(xt), prior));
    const double bound = lemma1_bound(ns, nt, c, prior.width());
    rec.check(ratio >= bound, [&] {
      return KeyValues{{"x_S", detail::join(xs)}, {"x_T", detail::join(xt)}, {"ratio", format_double(ratio)},
                       {"bound", format_double(bound)}};
    });
  }
  return rec.finish();
}

inline SuiteResult lemma2(const Options& opts) {
  detail::Recorder rec("lemma2");
  Engine rng = make_engine(opts.seed, 104);
  const long cases = detail::scaled(1000, opts);
  for (double tau : {0.25, 1.0, 4.0}) {
    const auto prior = ComponentPrior::gaussian(1.0 / tau);
    for (long k = 0; k < cases; ++k) {
      const int ns = 1 + static_cast<int>(uniform_index(rng, 30));
      const int nt = 1 + static_cast<int>(uniform_index(rng, 30));
      const auto xs = detail::uniform_values(rng, ns, -3.0, 3.0);
      const auto xt = detail::uniform_values(rng, nt, -3.0, 3.0);
      const auto s = ClusterStats::of(xs);
      const auto t = ClusterStats::of(xt);
      if (lemma2_F(tau, s, t) < 0.0) continue;
      const double ratio = std::exp(log_marginal_ratio(s, t, prior));
      const double bound = lemma2_bound(ns, nt, tau);
      rec.check(ratio >= bound, [&] {
        return KeyValues{{"tau", format_double(tau)}, {"x_S", detail::join(xs)}, {"x_T", detail::join(xt)},
                         {"ratio", format_double(ratio)}, {"bound", format_double(bound)}};
      });
    }
  }
  // Frequency of F(1) >= 0 on i.i.d. N(0, 1) clusters of equal size m.
  const long draws = detail::scaled(2000, opts);
  double previous = 0.0;
  for (int m : {5, 20, 80, 320}) {
    long nonneg = 0;
    for (long k = 0; k < draws; ++k) {
      const auto s = ClusterStats::of(detail::normal_values(rng, m));
      const auto t = ClusterStats::of(detail::normal_values(rng, m));
      nonneg += lemma2_F(1.0, s, t) >= 0.0;
    }
    const double freq = static_cast<double>(nonneg) / static_cast<double>(draws);
    rec.check(freq >= previous && (m != 320 || freq > 0.95), [&] {
      return KeyValues{{"m", std::to_string(m)}, {"frequency", format_double(freq)},
                       {"previous_frequency", format_double(previous)}};
    });
    previous = freq;
  }
  return rec.finish();
}

inline SuiteResult decomposition(const Options& opts) {
  detail::Recorder rec("decomposition");
  Engine rng = make_engine(opts.seed, 105);
  ExactOptions eo;
  eo.threads = opts.threads;
  for (double d : {0.0, 0.5}) {
    for (int kind = 0; kind < 2; ++kind) {
      const MixtureModel model{PitmanYorParams(1.0, d),
                               kind == 0 ? ComponentPrior::uniform(-10.0, 10.0) : ComponentPrior::gaussian(1.0)};
      for (int n = 4; n <= opts.decomposition_max_n; ++n) {
        auto xs = detail::normal_values(rng, n);
        for (double& x : xs) x *= 2.0;
        const auto post = exact_posterior(xs, model, eo);
        for (int s = 1; s < n; ++s) {
          const auto r = post.ratio(s);
          if (!r) continue;
          const double dec = decomposition_ratio(xs, model, s, eo);
          const double rel = relative_error(dec, *r);
          rec.check(rel < 1e-9, [&] {
            return KeyValues{{"model", model.component.describe()}, {"discount", format_double(d)},
                             {"data", detail::join(xs)}, {"s", std::to_string(s)}, {"ratio", format_double(*r)},
                             {"decomposition", format_double(dec)}};
          });
        }
      }
    }
  }
  return rec.finish();
}

inline SuiteResult run_suite(const std::string& name, const Options& opts) {
  if (name == "eppf-normalization") return eppf_normalization(opts);
  if (name == "seating") return seating(opts);
  if (name == "marginal-quadrature") return marginal_quadrature(opts);
  if (name == "lemma1") return lemma1(opts);
  if (name == "lemma2") return lemma2(opts);
  if (name == "decomposition") return decomposition(opts);
  throw UsageError("unknown verify suite '" + name + "'");
}

}  // namespace bnp::verify
