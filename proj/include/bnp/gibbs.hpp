// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bnp/errors.hpp"
#include "bnp/exact_posterior.hpp"
#include "bnp/marginals.hpp"
#include "bnp/partition.hpp"
#include "bnp/priors.hpp"
#include "bnp/random.hpp"

namespace bnp {

enum class GibbsInit { AllInOne, AllSingletons, SequentialSeating };

inline std::string to_string(GibbsInit init) {
  switch (init) {
    case GibbsInit::AllInOne: return "all-in-one-cluster";
    case GibbsInit::AllSingletons: return "all-singletons";
    case GibbsInit::SequentialSeating: return "sequential-seating";
  }
  return "?";
}

inline GibbsInit parse_gibbs_init(const std::string& name) {
  if (name == "all-in-one-cluster") return GibbsInit::AllInOne;
  if (name == "all-singletons") return GibbsInit::AllSingletons;
  if (name == "sequential-seating") return GibbsInit::SequentialSeating;
  throw ValidationError("unknown gibbs init '" + name + "'");
}

// Budgets are in sweeps. Defaults follow the long-run experiment setup:
// 2e5 burn-in sweeps, then 1e4 draws taken every 100 sweeps.
struct GibbsConfig {
  long burn_in = 200000;
  long samples = 10000;
  long thin = 100;
  std::uint64_t seed = 0;
  GibbsInit init = GibbsInit::SequentialSeating;
  bool shuffle_order = false;
  // Recompute cluster stats from scratch after every sweep and compare.
  bool debug_checks = false;

  void validate() const {
    if (burn_in < 0) throw ValidationError("burn_in must be nonnegative");
    if (samples < 1) throw ValidationError("samples must be at least 1");
    if (thin < 1) throw ValidationError("thin must be at least 1");
  }
};

// Posterior frequencies F_s of the number of clusters.
class PosteriorHistogram {
 public:
  void add(int k, long count = 1) {
    if (count <= 0) return;
    counts_[k] += count;
    total_ += count;
  }

  void merge(const PosteriorHistogram& other) {
    for (const auto& [k, c] : other.counts_) add(k, c);
  }

  [[nodiscard]] long count(int s) const {
    const auto it = counts_.find(s);
    return it == counts_.end() ? 0 : it->second;
  }
  [[nodiscard]] long total() const { return total_; }
  [[nodiscard]] const std::map<int, long>& counts() const { return counts_; }
  [[nodiscard]] double prob(int s) const { return total_ == 0 ? 0.0 : static_cast<double>(count(s)) / total_; }

  // F_{s+1} / F_s, defined where F_s > 0.
  [[nodiscard]] std::optional<double> ratio(int s) const {
    const long f = count(s);
    if (f == 0) return std::nullopt;
    return static_cast<double>(count(s + 1)) / f;
  }

  [[nodiscard]] int mode() const {
    int best = 0;
    long best_count = -1;
    for (const auto& [k, c] : counts_) {
      if (c > best_count) {
        best = k;
        best_count = c;
      }
    }
    return best;
  }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (const auto& [k, c] : counts_) m += static_cast<double>(k) * c;
    return total_ == 0 ? 0.0 : m / total_;
  }

  friend bool operator==(const PosteriorHistogram&, const PosteriorHistogram&) = default;

 private:
  std::map<int, long> counts_;
  long total_ = 0;
};

struct HistogramRow {
  int s = 0;
  long count = 0;
  double prob = 0.0;
  double ratio = 0.0;
  double ratio_x_s = 0.0;
  double ratio_x_s2 = 0.0;
  bool stable = false;
};

inline constexpr long kDefaultSupportFloor = 20;

inline std::vector<HistogramRow> histogram_ratios(const PosteriorHistogram& hist,
                                                  long support_floor = kDefaultSupportFloor) {
  if (hist.total() <= 0) throw DomainError("empty histogram");
  std::vector<HistogramRow> rows;
  for (const auto& [s, f] : hist.counts()) {
    const double r = *hist.ratio(s);
    rows.push_back({s, f, hist.prob(s), r, r * s, r * s * s, f >= support_floor});
  }
  return rows;
}

// Total-variation distance between a histogram and an exact posterior over K.
inline double total_variation(const PosteriorHistogram& hist, const PosteriorOverK& exact) {
  double tv = 0.0;
  for (int s = 1; s <= exact.n(); ++s) tv += std::abs(hist.prob(s) - exact.prob(s));
  for (const auto& [k, c] : hist.counts()) {
    if (k < 1 || k > exact.n()) tv += hist.prob(k);
  }
  return 0.5 * tv;
}

// Collapsed Gibbs sampler over cluster assignments. Component parameters are
// integrated out; each datum is reassigned with weight
//   existing cluster j: (n_j - d) * m(x_j + x) / m(x_j)
//   new cluster:        (alpha + d K) * m(x)
class GibbsSampler {
 public:
  GibbsSampler(std::span<const double> data, const MixtureModel& model, const GibbsConfig& config,
               std::uint64_t stream = 0)
      : data_(data.begin(), data.end()), model_(model), config_(config), rng_(make_engine(config.seed, stream)) {
    config.validate();
    if (data_.empty()) throw DomainError("need at least one observation");
    singleton_.reserve(data_.size());
    for (double x : data_) {
      if (!std::isfinite(x)) throw DomainError("observations must be finite");
      if (!model.component.contains(x)) {
        throw DomainError("observation " + std::to_string(x) + " lies outside the uniform prior's interval");
      }
      ClusterStats st;
      st.add(x);
      singleton_.push_back(log_marginal(st, model.component));
    }
    order_.resize(data_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    initialize();
  }

  void sweep() {
    if (config_.shuffle_order) {
      for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[uniform_index(rng_, i)]);
    }
    for (std::size_t i : order_) reassign(i);
    if (++sweeps_ % kRefreshInterval == 0) refresh_stats();
    if (config_.debug_checks) check_consistency();
  }

  [[nodiscard]] int num_clusters() const { return static_cast<int>(clusters_.size()); }
  [[nodiscard]] const std::vector<int>& assignments() const { return assignments_; }
  [[nodiscard]] Partition partition() const { return Partition::from_labels(assignments_); }
  [[nodiscard]] const std::vector<ClusterStats>& clusters() const { return clusters_; }

  // Throws if incrementally maintained stats drift from a recomputation.
  void check_consistency() const {
    std::vector<ClusterStats> fresh(clusters_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const int c = assignments_[i];
      if (c < 0 || c >= num_clusters()) throw Error("assignment references a dead cluster");
      fresh[static_cast<std::size_t>(c)].add(data_[i]);
    }
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
      const auto& a = clusters_[c];
      const auto& b = fresh[c];
      if (a.count == 0) throw Error("empty cluster survived a sweep");
      if (a.count != b.count || std::abs(a.sum - b.sum) > 1e-8 || std::abs(a.sum_sq - b.sum_sq) > 1e-8) {
        throw Error("cluster " + std::to_string(c) + " stats drifted from recomputation");
      }
    }
  }

 private:
  void initialize() {
    const std::size_t n = data_.size();
    assignments_.assign(n, 0);
    switch (config_.init) {
      case GibbsInit::AllInOne:
        break;
      case GibbsInit::AllSingletons:
        std::iota(assignments_.begin(), assignments_.end(), 0);
        break;
      case GibbsInit::SequentialSeating: {
        std::vector<int> sizes;
        std::vector<double> w;
        for (std::size_t i = 0; i < n; ++i) {
          const auto seat = seating_log_weights(sizes, static_cast<int>(i), model_.prior);
          w = seat.existing;
          w.push_back(seat.fresh);
          const auto k = argmax_gumbel(w);
          if (k == sizes.size()) sizes.push_back(0);
          ++sizes[k];
          assignments_[i] = static_cast<int>(k);
        }
        break;
      }
    }
    const int k = *std::max_element(assignments_.begin(), assignments_.end()) + 1;
    clusters_.assign(static_cast<std::size_t>(k), ClusterStats{});
    for (std::size_t i = 0; i < n; ++i) clusters_[static_cast<std::size_t>(assignments_[i])].add(data_[i]);
    log_m_.resize(clusters_.size());
    for (std::size_t c = 0; c < clusters_.size(); ++c) log_m_[c] = log_marginal(clusters_[c], model_.component);
  }

  std::size_t argmax_gumbel(const std::vector<double>& log_weights) {
    std::size_t best = 0;
    double best_value = kNegInf;
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
      const double v = log_weights[k] + gumbel(rng_);
      if (v > best_value) {
        best_value = v;
        best = k;
      }
    }
    return best;
  }

  void remove_cluster(std::size_t c) {
    const std::size_t last = clusters_.size() - 1;
    if (c != last) {
      clusters_[c] = clusters_[last];
      log_m_[c] = log_m_[last];
      for (int& a : assignments_) {
        if (a == static_cast<int>(last)) a = static_cast<int>(c);
      }
    }
    clusters_.pop_back();
    log_m_.pop_back();
  }

  // Rebuilds every cluster's stats from the raw data so that add/remove
  // rounding cannot accumulate over long runs.
  void refresh_stats() {
    for (auto& c : clusters_) c = ClusterStats{};
    for (std::size_t i = 0; i < data_.size(); ++i) clusters_[static_cast<std::size_t>(assignments_[i])].add(data_[i]);
    for (std::size_t c = 0; c < clusters_.size(); ++c) log_m_[c] = log_marginal(clusters_[c], model_.component);
  }

  void reassign(std::size_t i) {
    const double x = data_[i];
    const auto current = static_cast<std::size_t>(assignments_[i]);
    const ClusterStats before = clusters_[current];
    const double before_log_m = log_m_[current];
    clusters_[current].remove(x);
    const bool emptied = clusters_[current].empty();
    if (emptied) {
      remove_cluster(current);
    } else {
      log_m_[current] = log_marginal(clusters_[current], model_.component);
    }

    const double d = model_.prior.discount();
    const std::size_t k = clusters_.size();
    weights_.resize(k + 1);
    proposals_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      proposals_[c] = log_marginal(clusters_[c].with(x), model_.component);
      weights_[c] = std::log(clusters_[c].count - d) + proposals_[c] - log_m_[c];
    }
    weights_[k] = std::log(model_.prior.new_table_weight(static_cast<int>(k))) + singleton_[i];

    const std::size_t pick = argmax_gumbel(weights_);
    if (!emptied && pick == current) {
      // Back where it came from: restore the exact pre-removal stats.
      clusters_[current] = before;
      log_m_[current] = before_log_m;
    } else if (pick == k) {
      clusters_.emplace_back();
      clusters_.back().add(x);
      log_m_.push_back(singleton_[i]);
    } else {
      clusters_[pick].add(x);
      log_m_[pick] = proposals_[pick];
    }
    assignments_[i] = static_cast<int>(pick);
  }

  std::vector<double> data_;
  MixtureModel model_;
  GibbsConfig config_;
  Engine rng_;
  std::vector<double> singleton_;
  std::vector<std::size_t> order_;
  std::vector<int> assignments_;
  std::vector<ClusterStats> clusters_;
  std::vector<double> log_m_;
  std::vector<double> weights_;
  std::vector<double> proposals_;
  long sweeps_ = 0;

  static constexpr long kRefreshInterval = 1024;
};

struct GibbsResult {
  PosteriorHistogram histogram;
  std::vector<int> trace;  // K at each retained draw
};

inline GibbsResult gibbs_run(std::span<const double> data, const MixtureModel& model, const GibbsConfig& config,
                             std::uint64_t stream = 0) {
  GibbsSampler sampler(data, model, config, stream);
  for (long t = 0; t < config.burn_in; ++t) sampler.sweep();
  GibbsResult result;
  result.trace.reserve(static_cast<std::size_t>(config.samples));
  for (long draw = 0; draw < config.samples; ++draw) {
    for (long t = 0; t < config.thin; ++t) sampler.sweep();
    result.trace.push_back(sampler.num_clusters());
    result.histogram.add(sampler.num_clusters());
  }
  return result;
}

// Independent chains on streams 0..chains-1; traces are concatenated in chain
// order so the output does not depend on the thread count.
inline GibbsResult gibbs_run_chains(std::span<const double> data, const MixtureModel& model,
                                    const GibbsConfig& config, int chains, int threads = 1) {
  if (chains < 1) throw ValidationError("need at least one chain");
  std::vector<GibbsResult> results(static_cast<std::size_t>(chains));
  const int workers = std::max(1, std::min(threads, chains));
  if (workers == 1) {
    for (int c = 0; c < chains; ++c) results[static_cast<std::size_t>(c)] = gibbs_run(data, model, config, static_cast<std::uint64_t>(c));
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int c = w; c < chains; c += workers) {
          results[static_cast<std::size_t>(c)] = gibbs_run(data, model, config, static_cast<std::uint64_t>(c));
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  GibbsResult merged;
  for (auto& r : results) {
    merged.histogram.merge(r.histogram);
    merged.trace.insert(merged.trace.end(), r.trace.begin(), r.trace.end());
  }
  return merged;
}

inline void write_trace(std::ostream& out, std::span<const int> trace,
                        const std::vector<std::pair<std::string, std::string>>& header) {
  for (const auto& [key, value] : header) out << "# " << key << '=' << value << '\n';
  for (int k : trace) out << k << '\n';
}

}  // namespace bnp
