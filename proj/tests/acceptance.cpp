// Apache License, Version 2.0, refer to LICENSE.txt

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/statistics/bivariate_statistics.hpp>

#include "bnp/exact_posterior.hpp"
#include "bnp/generate.hpp"
#include "bnp/gibbs.hpp"
#include "oracles.hpp"

using bnp::ComponentPrior;
using bnp::MixtureModel;
using bnp::PitmanYorParams;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Rng = std::mt19937_64;

std::vector<double> uniform_values(Rng& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = u(rng);
  return xs;
}

std::vector<double> normal_values(Rng& rng, int n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = z(rng);
  return xs;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double log_m(const std::vector<double>& xs, const ComponentPrior& prior) {
  return bnp::log_marginal(bnp::ClusterStats::of(xs), prior);
}

// log m(x_S) + log m(x_T) - log m(x_S u x_T), straight from the marginals.
double log_pair_ratio(const std::vector<double>& s, const std::vector<double>& t, const ComponentPrior& prior) {
  std::vector<double> both(s);
  both.insert(both.end(), t.begin(), t.end());
  return log_m(s, prior) + log_m(t, prior) - log_m(both, prior);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome eppf_normalization() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double alpha : {0.5, 1.0, 3.0}) {
    for (double d : {0.0, 0.3, 0.7}) {
      for (int n = 1; n <= 10; ++n) {
        double total = 0.0;
        for (const auto& p : bnp::enumerate_partitions(n)) total += std::exp(bnp::log_eppf(p, PitmanYorParams(alpha, d)));
        worst = std::max(worst, std::abs(total - 1.0));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < 1e-9 && secs < 60.0, "max |sum - 1| = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// Sequential seating written from the predictive rule, not the library.
Outcome seating() {
  Rng rng(11);
  double worst = 0.0;
  long orders_checked = 0;
  for (const auto& [alpha, d] : std::vector<std::pair<double, double>>{{1.3, 0.0}, {1.3, 0.4}, {0.6, 0.8}}) {
    for (int n = 1; n <= 8; ++n) {
      for (const auto& p : bnp::enumerate_partitions(n)) {
        const double eppf = oracle::eppf(p.block_sizes(), alpha, d);
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int k = 0; k < 100; ++k) {
          std::iota(order.begin(), order.end(), 0);
          std::shuffle(order.begin(), order.end(), rng);
          std::vector<int> occupancy(static_cast<std::size_t>(p.num_blocks()), 0);
          int tables = 0;
          double prob = 1.0;
          for (int i = 0; i < n; ++i) {
            const int b = p.label(order[static_cast<std::size_t>(i)]);
            int& c = occupancy[static_cast<std::size_t>(b)];
            prob *= (c == 0 ? alpha + tables * d : c - d) / (alpha + i);
            tables += c == 0;
            ++c;
          }
          worst = std::max(worst, std::abs(prob - eppf));
          ++orders_checked;
        }
      }
    }
  }
  return {worst <= 1e-10, std::to_string(orders_checked) + " orders, max diff " + fmt("%.3g", worst)};
}

Outcome marginal_quadrature() {
  Rng rng(12);
  double worst = 0.0;
  int cases = 0;
  for (int kind = 0; kind < 2; ++kind) {
    for (int c = 0; c < 200; ++c) {
      const int n = uniform_int(rng, 1, 50);
      ComponentPrior prior = ComponentPrior::gaussian(1.0);
      std::vector<double> xs;
      if (kind == 0) {
        const double lo = std::uniform_real_distribution<double>(-12.0, -2.0)(rng);
        const double hi = lo + std::uniform_real_distribution<double>(1.0, 20.0)(rng);
        prior = ComponentPrior::uniform(lo, hi);
        xs = uniform_values(rng, n, lo, hi);
      } else {
        prior = ComponentPrior::gaussian(std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(100.0))(rng)));
        xs = uniform_values(rng, n, -10.0, 10.0);
      }
      const double rel = std::abs(std::expm1(log_m(xs, prior) - oracle::quadrature_log_marginal(xs, prior)));
      worst = std::max(worst, rel);
      ++cases;
    }
  }
  return {worst < 1e-6, std::to_string(cases) + " clusters, max rel err " + fmt("%.3g", worst)};
}

Outcome lemma1() {
  Rng rng(13);
  const double c = 3.0;
  const double width = 20.0;
  const double erf_c = std::erf(c / std::numbers::sqrt2);
  const double c1 = erf_c * erf_c;
  const auto prior = ComponentPrior::uniform(-10.0, 10.0);
  int violations = 0;
  double min_slack = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    const int ns = uniform_int(rng, 1, 30);
    const int nt = uniform_int(rng, 1, 30);
    const auto xs = uniform_values(rng, ns, -10.0 + c, 10.0 - c);
    const auto xt = uniform_values(rng, nt, -10.0 + c, 10.0 - c);
    const double bound = c1 * std::sqrt(2.0 * std::numbers::pi) / width * std::sqrt((ns + nt) / (1.0 * ns * nt));
    const double slack = log_pair_ratio(xs, xt, prior) - std::log(bound);
    violations += slack < 0.0;
    min_slack = std::min(min_slack, slack);
  }
  return {violations == 0, std::to_string(violations) + " violations / 1000, min log slack " + fmt("%.3g", min_slack)};
}

Outcome lemma2() {
  Rng rng(14);
  int violations = 0, checked = 0;
  for (double tau : {0.25, 1.0, 4.0}) {
    const auto prior = ComponentPrior::gaussian(1.0 / tau);
    for (int k = 0; k < 1000; ++k) {
      const int ns = uniform_int(rng, 1, 30);
      const int nt = uniform_int(rng, 1, 30);
      const auto xs = uniform_values(rng, ns, -3.0, 3.0);
      const auto xt = uniform_values(rng, nt, -3.0, 3.0);
      if (oracle::lemma2_exponent(tau, xs, xt) < 0.0) continue;
      const double bound = std::sqrt(0.5 * tau / (1.0 + tau) * (ns + nt) / (1.0 * ns * nt));
      violations += log_pair_ratio(xs, xt, prior) < std::log(bound);
      ++checked;
    }
  }
  std::string freqs;
  bool monotone = true;
  double previous = 0.0, last = 0.0;
  for (int m : {5, 20, 80, 320}) {
    int nonneg = 0;
    for (int k = 0; k < 2000; ++k) {
      nonneg += oracle::lemma2_exponent(1.0, normal_values(rng, m), normal_values(rng, m)) >= 0.0;
    }
    last = nonneg / 2000.0;
    monotone = monotone && last >= previous;
    previous = last;
    freqs += (freqs.empty() ? "" : " ") + fmt("%.4f", last);
  }
  return {violations == 0 && monotone && last > 0.95,
          std::to_string(violations) + " violations / " + std::to_string(checked) + " with F >= 0; P(F(1) >= 0) = " +
              freqs};
}

Outcome decomposition() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(15);
  double worst = 0.0;
  int checked = 0;
  for (double d : {0.0, 0.5}) {
    for (int kind = 0; kind < 2; ++kind) {
      const MixtureModel model{PitmanYorParams(1.0, d),
                               kind == 0 ? ComponentPrior::uniform(-10.0, 10.0) : ComponentPrior::gaussian(1.0)};
      for (int n = 4; n <= 9; ++n) {
        auto xs = normal_values(rng, n);
        for (double& x : xs) x *= 2.0;
        const auto post = bnp::exact_posterior(xs, model);
        for (int s = 1; s < n; ++s) {
          if (!post.ratio(s)) continue;
          worst = std::max(worst, bnp::relative_error(bnp::decomposition_ratio(xs, model, s), *post.ratio(s)));
          ++checked;
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < 1e-9 && secs < 300.0, std::to_string(checked) + " ratios, max rel err " + fmt("%.3g", worst) + ", " +
                                             fmt("%.2f", secs) + " s"};
}

Outcome gibbs_vs_exact() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(8);
  const auto data = normal_values(rng, 8);
  const MixtureModel model{PitmanYorParams(1.0), ComponentPrior::gaussian(1.0)};
  bnp::GibbsConfig cfg;
  cfg.burn_in = 5000;
  cfg.samples = 50000;
  cfg.thin = 5;
  cfg.seed = 2024;
  const auto res = bnp::gibbs_run(data, model, cfg);
  // Exact reference from the block-recursive oracle.
  const auto probs = oracle::block_recursive_probs(data, model);
  double tv = 0.0;
  for (int s = 1; s <= 8; ++s) {
    tv += std::abs(probs[static_cast<std::size_t>(s - 1)] - static_cast<double>(res.histogram.count(s)) / cfg.samples);
  }
  tv *= 0.5;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {tv < 0.02 && secs < 120.0, "TV " + fmt("%.4f", tv) + ", " + fmt("%.2f", secs) + " s"};
}

// Model: uniform prior on [-10, 10], alpha = 1. Dataset j at size n is the
// first n draws of stream j, so the sizes are nested.
Outcome ratio_trend() {
  const MixtureModel model{PitmanYorParams(1.0), ComponentPrior::uniform(-10.0, 10.0)};
  std::vector<std::vector<double>> streams;
  for (int j = 0; j < 200; ++j) {
    Rng rng(1000 + static_cast<std::uint64_t>(j));
    streams.push_back(normal_values(rng, 12));
  }
  std::vector<double> medians;
  for (int n : {4, 8, 12}) {
    std::vector<double> r;
    for (const auto& xs : streams) {
      const std::vector<double> head(xs.begin(), xs.begin() + n);
      r.push_back(bnp::ratio_R(bnp::exact_posterior(head, model), 1));
    }
    std::sort(r.begin(), r.end());
    medians.push_back(0.5 * (r[99] + r[100]));
  }
  return {medians[0] < medians[1] && medians[1] < medians[2],
          "median R(1) at n=4,8,12: " + fmt("%.4g", medians[0]) + " " + fmt("%.4g", medians[1]) + " " +
              fmt("%.4g", medians[2])};
}

Outcome alpha_linearity() {
  Rng rng(9);
  auto data = normal_values(rng, 10);
  double worst = 0.0;
  for (const auto& prior : {ComponentPrior::gaussian(1.0), ComponentPrior::uniform(-10.0, 10.0)}) {
    for (double alpha : {0.3, 1.0, 4.0}) {
      const auto base = bnp::exact_posterior(data, {PitmanYorParams(alpha), prior});
      const auto twice = bnp::exact_posterior(data, {PitmanYorParams(2.0 * alpha), prior});
      for (int s = 1; s < 10; ++s) {
        worst = std::max(worst, bnp::relative_error(bnp::ratio_R(twice, s), 2.0 * bnp::ratio_R(base, s)));
      }
    }
  }
  return {worst < 1e-10, "max rel err " + fmt("%.3g", worst)};
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

Outcome two_cluster_reproduction() {
  const auto data = bnp::generate(bnp::preset_generator("two-cluster-uniform", 300, 7));
  const MixtureModel model{PitmanYorParams(1.0), ComponentPrior::gaussian(1.0)};
  bnp::GibbsConfig cfg;
  cfg.burn_in = 20000;
  cfg.samples = 2000;
  cfg.thin = 20;
  cfg.seed = 7;
  const auto res = bnp::gibbs_run(data.values, model, cfg);
  std::vector<double> s, rs2;
  for (const auto& row : bnp::histogram_ratios(res.histogram, 50)) {
    if (!row.stable || res.histogram.count(row.s + 1) == 0) continue;
    s.push_back(row.s);
    rs2.push_back(row.ratio_x_s2);
  }
  const int mode = res.histogram.mode();
  const double rho = s.size() >= 2 ? boost::math::statistics::correlation_coefficient(ranks(s), ranks(rs2)) : NAN;
  return {mode >= 2 && mode <= 6 && rho > 0.0,
          "mode " + std::to_string(mode) + ", Spearman " + fmt("%.3f", rho) + " over " + std::to_string(s.size()) +
              " rows"};
}

Outcome pyp_vs_dp() {
  bool dominates = true;
  for (const auto& prior : {ComponentPrior::gaussian(1.0), ComponentPrior::uniform(-10.0, 10.0)}) {
    for (double alpha : {0.5, 1.0, 3.0}) {
      for (double d : {0.1, 0.5, 0.9}) {
        for (int s = 1; s <= 1000; ++s) {
          dominates = dominates && bnp::bound_shape({PitmanYorParams(alpha, d), prior}, s) >
                                       bnp::bound_shape({PitmanYorParams(alpha), prior}, s);
        }
      }
    }
  }
  Rng rng(30);
  const auto data = normal_values(rng, 40);
  double dp = 0.0, py = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    bnp::GibbsConfig cfg;
    cfg.burn_in = 500;
    cfg.samples = 1000;
    cfg.thin = 2;
    cfg.seed = seed;
    dp += bnp::gibbs_run(data, {PitmanYorParams(1.0, 0.0), ComponentPrior::gaussian(1.0)}, cfg).histogram.mean();
    py += bnp::gibbs_run(data, {PitmanYorParams(1.0, 0.5), ComponentPrior::gaussian(1.0)}, cfg).histogram.mean();
  }
  return {dominates && py > dp, std::string("shape dominance ") + (dominates ? "holds" : "fails") + ", mean K " +
                                    fmt("%.3f", py / 20) + " (discount 0.5) vs " + fmt("%.3f", dp / 20)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"EPPF normalization", eppf_normalization},
      {"Seating matches EPPF", seating},
      {"Closed-form marginal vs quadrature", marginal_quadrature},
      {"Uniform-prior marginal ratio bound", lemma1},
      {"Gaussian-prior conditional ratio bound", lemma2},
      {"Ratio decomposition identity", decomposition},
      {"Gibbs vs exact posterior", gibbs_vs_exact},
      {"R(1) grows with n", ratio_trend},
      {"Ratio linear in alpha", alpha_linearity},
      {"Two-cluster uniform reproduction", two_cluster_reproduction},
      {"Discount raises shape and mean K", pyp_vs_dp},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
