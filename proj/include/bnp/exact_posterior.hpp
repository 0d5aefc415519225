// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bnp/errors.hpp"
#include "bnp/marginals.hpp"
#include "bnp/numeric.hpp"
#include "bnp/partition.hpp"
#include "bnp/priors.hpp"

namespace bnp {

struct MixtureModel {
  PitmanYorParams prior;
  ComponentPrior component;
};

struct ExactOptions {
  int limit = kDefaultEnumerationLimit;
  int threads = 1;
  // Data outside the uniform prior's interval is refused unless this is set.
  bool allow_outside_support = false;
};

// Subset tables need 2^n entries; this is a hard ceiling on top of the
// configurable enumeration limit.
inline constexpr int kMaxExactItems = 20;

// Posterior over the number of clusters K, indexed by s = 1..n.
class PosteriorOverK {
 public:
  PosteriorOverK() = default;

  explicit PosteriorOverK(std::vector<double> log_weights) : log_weights_(std::move(log_weights)) {
    const double total = log_sum_exp(log_weights_);
    probs_.reserve(log_weights_.size());
    for (double lw : log_weights_) probs_.push_back(lw == kNegInf ? 0.0 : std::exp(lw - total));
    // Once a probability underflows, every later ratio is undefined.
    bool underflowed = false;
    for (std::size_t k = 0; k + 1 < log_weights_.size(); ++k) {
      underflowed = underflowed || probs_[k] == 0.0;
      ratios_.push_back(underflowed ? std::nullopt
                                    : std::optional<double>(std::exp(log_weights_[k + 1] - log_weights_[k])));
    }
  }

  [[nodiscard]] int n() const { return static_cast<int>(log_weights_.size()); }
  [[nodiscard]] const std::vector<double>& log_weights() const { return log_weights_; }
  [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

  [[nodiscard]] double log_weight(int s) const { return log_weights_.at(static_cast<std::size_t>(s - 1)); }
  [[nodiscard]] double prob(int s) const { return probs_.at(static_cast<std::size_t>(s - 1)); }

  // R(s) = P(K = s+1) / P(K = s), when defined.
  [[nodiscard]] std::optional<double> ratio(int s) const {
    if (s < 1 || s >= n()) return std::nullopt;
    return ratios_[static_cast<std::size_t>(s - 1)];
  }

  [[nodiscard]] int mode() const {
    return static_cast<int>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin()) + 1;
  }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (int s = 1; s <= n(); ++s) m += s * prob(s);
    return m;
  }

 private:
  std::vector<double> log_weights_;
  std::vector<double> probs_;
  std::vector<std::optional<double>> ratios_;
};

inline double ratio_R(const PosteriorOverK& post, int s) {
  if (s < 1 || s >= post.n()) throw DomainError("ratio R(s) needs 1 <= s < n");
  const auto r = post.ratio(s);
  if (!r) throw DomainError("ratio R(" + std::to_string(s) + ") is undefined: P(K = s) underflows to zero");
  return *r;
}

namespace detail {

inline std::vector<double> validated_sorted(std::span<const double> data, const MixtureModel& model,
                                            const ExactOptions& opts) {
  const int n = static_cast<int>(data.size());
  if (n < 1) throw DomainError("need at least one observation");
  const int limit = std::min(opts.limit, kMaxExactItems);
  if (n > limit) {
    throw CapacityError("n = " + std::to_string(n) + " exceeds the exact enumeration limit of " +
                        std::to_string(limit));
  }
  for (double x : data) {
    if (!std::isfinite(x)) throw DomainError("observations must be finite");
    if (!opts.allow_outside_support && !model.component.contains(x)) {
      throw DomainError("observation " + std::to_string(x) +
                        " lies outside the uniform prior's interval (override with allow_outside_support)");
    }
  }
  // Sorting fixes the summation order, so permuted inputs give identical bits.
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

// Per-subset block scores: log m(x_A) + log |(|A|-1) (-) discount|!.
class SubsetScores {
 public:
  SubsetScores(std::span<const double> data, const MixtureModel& model)
      : n_(static_cast<int>(data.size())), scores_(std::size_t{1} << n_, 0.0) {
    std::vector<ClusterStats> stats(scores_.size());
    std::vector<double> size_term(static_cast<std::size_t>(n_) + 1, 0.0);
    for (int b = 1; b <= n_; ++b) size_term[static_cast<std::size_t>(b)] = log_discount_factorial(b - 1, model.prior.discount());
    for (std::uint32_t mask = 1; mask < scores_.size(); ++mask) {
      // Extend the subset without its highest item, so items are added in
      // ascending order.
      const int top = 31 - std::countl_zero(mask);
      const std::uint32_t rest = mask & ~(std::uint32_t{1} << top);
      stats[mask] = stats[rest];
      stats[mask].add(data[static_cast<std::size_t>(top)]);
      scores_[mask] = log_marginal(stats[mask], model.component) +
                      size_term[static_cast<std::size_t>(std::popcount(mask))];
    }
    table_prefix_.assign(static_cast<std::size_t>(n_) + 2, 0.0);
    for (int k = 0; k <= n_; ++k) {
      table_prefix_[static_cast<std::size_t>(k) + 1] =
          table_prefix_[static_cast<std::size_t>(k)] + std::log(model.prior.new_table_weight(k));
    }
    log_normalizer_ = log_rising_factorial(model.prior.alpha(), n_);
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] double block(std::uint32_t mask) const { return scores_[mask]; }
  // log of alpha(alpha+d)...(alpha+(s-1)d)
  [[nodiscard]] double tables(int s) const { return table_prefix_[static_cast<std::size_t>(s)]; }
  [[nodiscard]] double log_table_weight(int k) const { return tables(k + 1) - tables(k); }
  [[nodiscard]] double log_normalizer() const { return log_normalizer_; }

  // Full log p(A, x) from the block masks of a partition with s blocks.
  [[nodiscard]] double partition(const std::uint32_t* masks, int s) const {
    double total = tables(s) - log_normalizer_;
    for (int j = 0; j < s; ++j) total += scores_[masks[j]];
    return total;
  }

 private:
  int n_;
  std::vector<double> scores_;
  std::vector<double> table_prefix_;
  double log_normalizer_ = 0.0;
};

inline constexpr int kPrefixLength = 6;

// Depth-first RGS enumeration below a fixed prefix. Visits leaves in
// lexicographic order and calls leaf(masks, s, sum_of_block_scores).
template <typename Leaf>
class MaskEnumerator {
 public:
  MaskEnumerator(const SubsetScores& scores, std::optional<int> fixed_blocks, Leaf& leaf)
      : scores_(scores), n_(scores.n()), fixed_(fixed_blocks), leaf_(leaf) {}

  void run_prefix(const std::vector<int>& prefix) {
    masks_.fill(0);
    int used = 0;
    double running = 0.0;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      const int label = prefix[i];
      const std::uint32_t before = masks_[static_cast<std::size_t>(label)];
      masks_[static_cast<std::size_t>(label)] |= std::uint32_t{1} << i;
      running += scores_.block(masks_[static_cast<std::size_t>(label)]) - (before ? scores_.block(before) : 0.0);
      used = std::max(used, label + 1);
    }
    const int pos = static_cast<int>(prefix.size());
    if (fixed_ && (used > *fixed_ || used + (n_ - pos) < *fixed_)) return;
    dfs(pos, used, running);
  }

 private:
  void dfs(int pos, int used, double running) {
    if (pos == n_) {
      leaf_(masks_.data(), used, running);
      return;
    }
    const std::uint32_t bit = std::uint32_t{1} << pos;
    const int remaining = n_ - pos - 1;
    for (int label = 0; label <= used; ++label) {
      const int next_used = label == used ? used + 1 : used;
      if (fixed_ && (next_used > *fixed_ || next_used + remaining < *fixed_)) continue;
      const auto ul = static_cast<std::size_t>(label);
      const std::uint32_t before = masks_[ul];
      masks_[ul] = before | bit;
      const double delta = scores_.block(masks_[ul]) - (before ? scores_.block(before) : 0.0);
      dfs(pos + 1, next_used, running + delta);
      masks_[ul] = before;
    }
  }

  const SubsetScores& scores_;
  int n_;
  std::optional<int> fixed_;
  Leaf& leaf_;
  std::array<std::uint32_t, 32> masks_{};
};

inline std::vector<std::vector<int>> chunk_prefixes(int n) {
  std::vector<std::vector<int>> out;
  PartitionStream stream(std::min(n, kPrefixLength), std::nullopt, kPrefixLength);
  while (stream.next()) out.push_back(stream.rgs());
  return out;
}

// Runs make_leaf() per chunk over contiguous chunks of the enumeration order;
// returns the chunk states in chunk order.
template <typename State, typename Visit>
std::vector<State> run_chunks(const SubsetScores& scores, std::optional<int> fixed_blocks, int threads,
                              const State& initial, Visit visit) {
  const auto prefixes = chunk_prefixes(scores.n());
  std::vector<State> states(prefixes.size(), initial);
  auto work = [&](std::size_t c) {
    State& state = states[c];
    auto leaf = [&](const std::uint32_t* masks, int s, double running) { visit(state, masks, s, running); };
    MaskEnumerator<decltype(leaf)> e(scores, fixed_blocks, leaf);
    e.run_prefix(prefixes[c]);
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(prefixes.size())));
  if (workers == 1) {
    for (std::size_t c = 0; c < prefixes.size(); ++c) work(c);
    return states;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < prefixes.size(); c = next++) work(c);
    });
  }
  for (auto& t : pool) t.join();
  return states;
}

}  // namespace detail

inline PosteriorOverK exact_posterior(std::span<const double> data, const MixtureModel& model,
                                      const ExactOptions& opts = {}) {
  const auto sorted = detail::validated_sorted(data, model, opts);
  const detail::SubsetScores scores(sorted, model);
  const int n = scores.n();
  using State = std::vector<LogSumAccumulator>;
  const auto chunks = detail::run_chunks(
      scores, std::nullopt, opts.threads, State(static_cast<std::size_t>(n)),
      [](State& acc, const std::uint32_t*, int s, double running) { acc[static_cast<std::size_t>(s - 1)].add(running); });

  State total(static_cast<std::size_t>(n));
  for (const auto& chunk : chunks) {
    for (int s = 0; s < n; ++s) total[static_cast<std::size_t>(s)].merge(chunk[static_cast<std::size_t>(s)]);
  }
  std::vector<double> log_weights(static_cast<std::size_t>(n));
  for (int s = 1; s <= n; ++s) {
    const auto& acc = total[static_cast<std::size_t>(s - 1)];
    log_weights[static_cast<std::size_t>(s - 1)] =
        acc.empty() ? kNegInf : acc.value() + scores.tables(s) - scores.log_normalizer();
  }
  return PosteriorOverK(std::move(log_weights));
}

// R(s) through the extension-set decomposition:
//   2/((s+1)s) * sum_B sum_{A in ext(B)} p(A, x) / sum_B p(B, x)
// with B over s-block partitions. Each extension is scored from its parent as
// p(B, x) * (alpha + d s) * (split block terms) / (merged block term).
inline double decomposition_ratio(std::span<const double> data, const MixtureModel& model, int s,
                                  const ExactOptions& opts = {}) {
  const auto sorted = detail::validated_sorted(data, model, opts);
  const int n = static_cast<int>(sorted.size());
  if (s < 1 || s + 1 > n) throw DomainError("decomposition ratio needs 1 <= s < n");
  const detail::SubsetScores scores(sorted, model);
  const double log_new_table = scores.log_table_weight(s);

  struct State {
    LogSumAccumulator parents;
    LogSumAccumulator extensions;
  };
  const auto chunks = detail::run_chunks(
      scores, s, opts.threads, State{},
      [&](State& st, const std::uint32_t* masks, int blocks, double running) {
        const double parent = running + scores.tables(blocks) - scores.log_normalizer();
        st.parents.add(parent);
        for (int j = 0; j < blocks; ++j) {
          const std::uint32_t block = masks[j];
          if (std::popcount(block) < 2) continue;
          const std::uint32_t lead = block & (~block + 1);
          const std::uint32_t others = block ^ lead;
          const double base = parent + log_new_table - scores.block(block);
          // Unordered splits: the leading item's part is lead | sub, sub a
          // proper subset of the other items.
          for (std::uint32_t sub = others;; sub = (sub - 1) & others) {
            if (sub != others) {
              const std::uint32_t keep = lead | sub;
              st.extensions.add(base + scores.block(keep) + scores.block(block ^ keep));
            }
            if (sub == 0) break;
          }
        }
      });

  LogSumAccumulator parents;
  LogSumAccumulator extensions;
  for (const auto& c : chunks) {
    parents.merge(c.parents);
    extensions.merge(c.extensions);
  }
  if (parents.empty()) throw DomainError("P(K = s) underflows to zero; decomposition undefined");
  return 2.0 / ((s + 1.0) * s) * std::exp(extensions.value() - parents.value());
}

// log p(A, x) for one partition, computed directly from the raw data.
inline double log_joint(const Partition& p, std::span<const double> data, const MixtureModel& model) {
  if (p.size() != static_cast<int>(data.size())) throw DomainError("partition and data sizes differ");
  double total = log_eppf(p, model.prior);
  for (const auto& block : p.blocks()) {
    ClusterStats st;
    for (int i : block) st.add(data[static_cast<std::size_t>(i)]);
    total += log_marginal(st, model.component);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Bound diagnostics

struct BoundRow {
  int s = 0;
  double log_weight = 0.0;
  double prob = 0.0;
  double ratio = 0.0;
  double ratio_x_s = 0.0;
  double ratio_x_s2 = 0.0;
  // Lower-bound shape without its unknown universal constant:
  //   uniform prior:  (alpha + d s) / (s |Theta|)
  //   gaussian prior: (alpha + d s) sqrt(tau) / (s^2 sqrt(1 + tau))
  double bound_shape = 0.0;
  // Looser gaussian form with 1 + sigma in the denominator,
  // (alpha + d s) / (s^2 (1 + sigma)); equals bound_shape for uniform.
  double theorem_shape = 0.0;
  double quotient = 0.0;  // ratio / bound_shape
};

inline double bound_shape(const MixtureModel& model, int s) {
  const double lead = model.prior.new_table_weight(s);
  if (model.component.is_uniform()) return lead / (s * model.component.width());
  const double tau = model.component.precision();
  return lead * std::sqrt(tau) / (static_cast<double>(s) * s * std::sqrt(1.0 + tau));
}

inline double theorem_shape(const MixtureModel& model, int s) {
  if (model.component.is_uniform()) return bound_shape(model, s);
  const double sigma = std::sqrt(model.component.sigma2());
  return model.prior.new_table_weight(s) / (static_cast<double>(s) * s * (1.0 + sigma));
}

inline std::vector<BoundRow> bound_report(const PosteriorOverK& post, const MixtureModel& model) {
  std::vector<BoundRow> rows;
  for (int s = 1; s < post.n(); ++s) {
    const auto r = post.ratio(s);
    if (!r || !(post.prob(s) > 0.0)) continue;
    BoundRow row;
    row.s = s;
    row.log_weight = post.log_weight(s);
    row.prob = post.prob(s);
    row.ratio = *r;
    row.ratio_x_s = *r * s;
    row.ratio_x_s2 = *r * s * s;
    row.bound_shape = bound_shape(model, s);
    row.theorem_shape = theorem_shape(model, s);
    row.quotient = *r / row.bound_shape;
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<BoundRow> bound_report(std::span<const double> data, const MixtureModel& model,
                                          const ExactOptions& opts = {}) {
  return bound_report(exact_posterior(data, model, opts), model);
}

// Blocks with b_i >= n / s^2.
inline std::vector<int> large_blocks(const Partition& p, int n, int s) {
  if (p.size() != n || p.num_blocks() != s) throw DomainError("partition does not match (n, s)");
  std::vector<int> out;
  const auto sizes = p.block_sizes();
  for (int i = 0; i < s; ++i) {
    if (static_cast<long long>(sizes[static_cast<std::size_t>(i)]) * s * s >= n) out.push_back(i);
  }
  return out;
}

}  // namespace bnp
