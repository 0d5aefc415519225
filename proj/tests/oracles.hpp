// Apache License, Version 2.0, refer to LICENSE.txt

// Reference implementations used only by the tests. Each one recomputes a
// quantity by a route that shares no code with the library.

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "bnp/exact_posterior.hpp"
#include "bnp/marginals.hpp"

namespace oracle {

inline double log_normal_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

// log of the integral over theta of prod_i N(x_i; theta, 1) * prior(theta),
// by Gauss-Kronrod on a fine fixed grid plus adaptive infinite tails. The
// integrand is scaled by its value at the sample mean to avoid underflow.
inline double quadrature_log_marginal(const std::vector<double>& xs, const bnp::ComponentPrior& prior) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double shift = 0.0;
  for (double x : xs) shift += log_normal_pdf(x, mean, 1.0);

  const auto integrand = [&](double theta) {
    double log_lik = 0.0;
    for (double x : xs) log_lik += log_normal_pdf(x, theta, 1.0);
    double log_prior;
    if (prior.is_uniform()) {
      log_prior = -std::log(prior.width());
    } else {
      log_prior = log_normal_pdf(theta, 0.0, prior.sigma2());
    }
    return std::exp(log_lik - shift + log_prior);
  };

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double lo, hi;
  if (prior.is_uniform()) {
    lo = prior.interval().lo;
    hi = prior.interval().hi;
  } else {
    const double reach = 40.0 + 12.0 * std::sqrt(prior.sigma2());
    lo = -reach;
    hi = reach;
  }
  const int pieces = 4000;
  const double step = (hi - lo) / pieces;
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    total += GK::integrate(integrand, lo + i * step, lo + (i + 1) * step, 0);
  }
  if (!prior.is_uniform()) {
    total += GK::integrate(integrand, -std::numeric_limits<double>::infinity(), lo, 10, 1e-12);
    total += GK::integrate(integrand, hi, std::numeric_limits<double>::infinity(), 10, 1e-12);
  }
  return shift + std::log(total);
}

// Pitman-Yor EPPF as a plain product:
//   prod_{k<s} (alpha + d k) * prod_j prod_{i<|A_j|-1} (i + 1 - d) / prod_{i<n} (alpha + i)
inline double eppf(const std::vector<int>& sizes, double alpha, double d) {
  double value = 1.0;
  int n = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    value *= alpha + d * static_cast<double>(k);
    for (int i = 1; i < sizes[k]; ++i) value *= i - d;
    n += sizes[k];
  }
  for (int i = 0; i < n; ++i) value /= alpha + i;
  return value;
}

// Posterior over K by block-recursive enumeration: the lowest unassigned item
// opens a block together with every subset of the remaining items. Returns
// unnormalized masses per s (index s - 1), summed in linear space.
inline std::vector<double> block_recursive_masses(const std::vector<double>& data, const bnp::MixtureModel& model) {
  const int n = static_cast<int>(data.size());
  std::vector<double> masses(static_cast<std::size_t>(n), 0.0);
  std::vector<std::vector<double>> blocks;
  std::function<void(std::vector<int>)> recurse = [&](std::vector<int> rest) {
    if (rest.empty()) {
      std::vector<int> sizes;
      double log_lik = 0.0;
      for (const auto& b : blocks) {
        sizes.push_back(static_cast<int>(b.size()));
        log_lik += bnp::log_marginal(bnp::ClusterStats::of(b), model.component);
      }
      masses[blocks.size() - 1] += eppf(sizes, model.prior.alpha(), model.prior.discount()) * std::exp(log_lik);
      return;
    }
    const int head = rest.front();
    const std::vector<int> others(rest.begin() + 1, rest.end());
    const std::size_t m = others.size();
    for (std::size_t pick = 0; pick < (std::size_t{1} << m); ++pick) {
      std::vector<double> block{data[static_cast<std::size_t>(head)]};
      std::vector<int> remaining;
      for (std::size_t i = 0; i < m; ++i) {
        if (pick >> i & 1U) {
          block.push_back(data[static_cast<std::size_t>(others[i])]);
        } else {
          remaining.push_back(others[i]);
        }
      }
      blocks.push_back(block);
      recurse(remaining);
      blocks.pop_back();
    }
  };
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  recurse(all);
  return masses;
}

inline std::vector<double> block_recursive_probs(const std::vector<double>& data, const bnp::MixtureModel& model) {
  auto masses = block_recursive_masses(data, model);
  double total = 0.0;
  for (double m : masses) total += m;
  for (double& m : masses) m /= total;
  return masses;
}

// Exponent F(tau) from the means alone.
inline double lemma2_exponent(double tau, const std::vector<double>& s, const std::vector<double>& t) {
  const double ns = static_cast<double>(s.size());
  const double nt = static_cast<double>(t.size());
  double ms = 0.0, mt = 0.0;
  for (double x : s) ms += x;
  for (double x : t) mt += x;
  ms /= ns;
  mt /= nt;
  const double mu = (ns * ms + nt * mt) / (ns + nt);
  return ns * ns * ms * ms / (ns + tau) + nt * nt * mt * mt / (nt + tau) - (ns + nt) * (ns + nt) * mu * mu / (ns + nt + tau);
}

}  // namespace oracle
