// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bnp/errors.hpp"

namespace bnp {

using BigInt = boost::multiprecision::cpp_int;

// Bell(13) is about 2.8e7; anything past this is refused rather than left
// to run for hours.
inline constexpr int kDefaultEnumerationLimit = 13;

// Relabels an arbitrary label vector so that labels appear in first-occurrence
// order 0, 1, 2, ... Returns the number of distinct labels.
inline int canonicalize_labels(std::vector<int>& labels) {
  std::vector<std::pair<int, int>> seen;  // (old label, new label)
  for (int& label : labels) {
    auto it = std::find_if(seen.begin(), seen.end(),
                           [label](const auto& p) { return p.first == label; });
    if (it == seen.end()) {
      seen.emplace_back(label, static_cast<int>(seen.size()));
      label = seen.back().second;
    } else {
      label = it->second;
    }
  }
  return static_cast<int>(seen.size());
}

// A set partition of {0, ..., n-1}, stored as its restricted growth string.
// Blocks are numbered by their smallest element.
class Partition {
 public:
  Partition() = default;

  static Partition from_rgs(std::vector<int> rgs) {
    if (rgs.empty()) throw ValidationError("partition must cover at least one item");
    int max_label = -1;
    for (std::size_t i = 0; i < rgs.size(); ++i) {
      if (rgs[i] < 0 || rgs[i] > max_label + 1) {
        throw ValidationError("not a restricted growth string at position " + std::to_string(i));
      }
      max_label = std::max(max_label, rgs[i]);
    }
    return Partition(std::move(rgs), max_label + 1);
  }

  // Any labelling of items; labels are relabelled to first-occurrence order.
  static Partition from_labels(std::vector<int> labels) {
    if (labels.empty()) throw ValidationError("partition must cover at least one item");
    const int s = canonicalize_labels(labels);
    return Partition(std::move(labels), s);
  }

  [[nodiscard]] int size() const { return static_cast<int>(rgs_.size()); }
  [[nodiscard]] int num_blocks() const { return num_blocks_; }
  [[nodiscard]] const std::vector<int>& rgs() const { return rgs_; }
  [[nodiscard]] int label(int item) const { return rgs_[static_cast<std::size_t>(item)]; }

  [[nodiscard]] std::vector<std::vector<int>> blocks() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_blocks_));
    for (int i = 0; i < size(); ++i) out[static_cast<std::size_t>(rgs_[static_cast<std::size_t>(i)])].push_back(i);
    return out;
  }

  [[nodiscard]] std::vector<int> block_sizes() const {
    std::vector<int> out(static_cast<std::size_t>(num_blocks_), 0);
    for (int label : rgs_) ++out[static_cast<std::size_t>(label)];
    return out;
  }

  // Fixture dump format: one character per item, labels 0-9 then a-z.
  [[nodiscard]] std::string to_string() const {
    std::string out;
    out.reserve(rgs_.size());
    for (int label : rgs_) out.push_back(label < 10 ? static_cast<char>('0' + label) : static_cast<char>('a' + label - 10));
    return out;
  }

  static Partition parse(std::string_view text) {
    std::vector<int> rgs;
    for (char c : text) {
      if (c >= '0' && c <= '9') rgs.push_back(c - '0');
      else if (c >= 'a' && c <= 'z') rgs.push_back(c - 'a' + 10);
      else throw ValidationError("invalid partition character '" + std::string(1, c) + "'");
    }
    return from_rgs(std::move(rgs));
  }

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition& a, const Partition& b) { return a.rgs_ <=> b.rgs_; }

 private:
  Partition(std::vector<int> rgs, int s) : rgs_(std::move(rgs)), num_blocks_(s) {}

  std::vector<int> rgs_;
  int num_blocks_ = 0;
};

// Builds the canonical partition from a list of index sets over {0, ..., n-1}.
inline Partition canonicalize(const std::vector<std::vector<int>>& blocks, int n) {
  if (n < 1) throw ValidationError("n must be positive");
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) throw ValidationError("empty block");
    for (int item : blocks[b]) {
      if (item < 0 || item >= n) throw ValidationError("item " + std::to_string(item) + " outside [0, n)");
      if (labels[static_cast<std::size_t>(item)] != -1) {
        throw ValidationError("item " + std::to_string(item) + " appears in more than one block");
      }
      labels[static_cast<std::size_t>(item)] = static_cast<int>(b);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] == -1) throw ValidationError("item " + std::to_string(i) + " is not covered");
  }
  return Partition::from_labels(std::move(labels));
}

// ---------------------------------------------------------------------------
// Counting

inline BigInt stirling2(int n, int s) {
  if (n < 0 || s < 0) throw DomainError("stirling2 requires nonnegative arguments");
  if (s > n) return 0;
  std::vector<BigInt> row(static_cast<std::size_t>(s) + 1, 0);
  row[0] = 1;
  for (int m = 1; m <= n; ++m) {
    for (int k = std::min(m, s); k >= 1; --k) row[k] = k * row[k] + row[k - 1];
    row[0] = 0;
  }
  return row[static_cast<std::size_t>(s)];
}

inline BigInt bell(int n) {
  if (n < 0) throw DomainError("bell requires a nonnegative argument");
  BigInt total = 0;
  for (int s = 0; s <= n; ++s) total += stirling2(n, s);
  return total;
}

// ---------------------------------------------------------------------------
// Enumeration

// Yields restricted growth strings in lexicographic order, optionally only
// those with a fixed number of blocks.
class PartitionStream {
 public:
  PartitionStream(int n, std::optional<int> blocks = std::nullopt,
                  int limit = kDefaultEnumerationLimit)
      : n_(n), blocks_(blocks) {
    if (n < 1) throw DomainError("enumeration requires n >= 1");
    if (n > limit) {
      throw CapacityError("n = " + std::to_string(n) + " exceeds the enumeration limit of " +
                          std::to_string(limit));
    }
    if (blocks && (*blocks < 1 || *blocks > n)) throw DomainError("block count must lie in [1, n]");
  }

  // Advances to the next partition; false once the stream is exhausted.
  bool next() {
    if (done_) return false;
    if (!started_) {
      started_ = true;
      rgs_.assign(static_cast<std::size_t>(n_), 0);
      prefix_max_.assign(static_cast<std::size_t>(n_), 0);
      fill_from(1, 1);
      return true;
    }
    for (int i = n_ - 1; i >= 1; --i) {
      const auto ui = static_cast<std::size_t>(i);
      const int m = prefix_max_[ui - 1];
      const int v = rgs_[ui] + 1;
      if (v > m + 1) continue;
      const int used = std::max(m, v) + 1;
      if (blocks_) {
        const int remaining = n_ - 1 - i;
        if (used > *blocks_ || used + remaining < *blocks_) continue;
      }
      rgs_[ui] = v;
      prefix_max_[ui] = std::max(m, v);
      fill_from(i + 1, used);
      return true;
    }
    done_ = true;
    return false;
  }

  [[nodiscard]] const std::vector<int>& rgs() const { return rgs_; }
  [[nodiscard]] Partition current() const { return Partition::from_rgs(rgs_); }

 private:
  // Lexicographically smallest feasible completion of positions [pos, n).
  void fill_from(int pos, int used) {
    const int remaining = n_ - pos;
    const int fresh = blocks_ ? *blocks_ - used : 0;
    int label = used;
    for (int k = 0; k < remaining; ++k) {
      const auto u = static_cast<std::size_t>(pos + k);
      rgs_[u] = k < remaining - fresh ? 0 : label++;
      prefix_max_[u] = std::max(prefix_max_[u - 1], rgs_[u]);
    }
  }

  int n_;
  std::optional<int> blocks_;
  bool started_ = false;
  bool done_ = false;
  std::vector<int> rgs_;
  std::vector<int> prefix_max_;
};

inline std::vector<Partition> enumerate_partitions(int n, std::optional<int> blocks = std::nullopt,
                                                   int limit = kDefaultEnumerationLimit) {
  std::vector<Partition> out;
  PartitionStream stream(n, blocks, limit);
  while (stream.next()) out.push_back(stream.current());
  return out;
}

// ---------------------------------------------------------------------------
// Merge / split neighbourhoods

inline std::vector<Partition> contraction_set(const Partition& p) {
  const int s = p.num_blocks();
  if (s < 2) throw DomainError("contraction set needs at least two blocks");
  std::vector<Partition> out;
  out.reserve(static_cast<std::size_t>(s * (s - 1) / 2));
  for (int a = 0; a < s; ++a) {
    for (int b = a + 1; b < s; ++b) {
      std::vector<int> labels = p.rgs();
      for (int& label : labels) {
        if (label == b) label = a;
      }
      out.push_back(Partition::from_labels(std::move(labels)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline constexpr int kMaxSplittableBlock = 30;

// Calls f(partition, block, moved_items) for every way of splitting one block
// into two nonempty parts. Each unordered split is visited once; the part
// holding the block's smallest item stays in place.
template <typename Visitor>
void for_each_extension(const Partition& p, Visitor&& f) {
  const auto blocks = p.blocks();
  const int s = p.num_blocks();
  for (int i = 0; i < s; ++i) {
    const auto& members = blocks[static_cast<std::size_t>(i)];
    const int b = static_cast<int>(members.size());
    if (b < 2) continue;
    if (b > kMaxSplittableBlock) throw CapacityError("block too large to enumerate its splits");
    const std::uint64_t others = (std::uint64_t{1} << (b - 1)) - 1;
    // mask picks which of the b-1 non-leading members stay with the leader.
    for (std::uint64_t mask = 0; mask < others; ++mask) {
      std::vector<int> labels = p.rgs();
      std::vector<int> moved;
      for (int k = 1; k < b; ++k) {
        if (!(mask >> (k - 1) & 1U)) {
          labels[static_cast<std::size_t>(members[static_cast<std::size_t>(k)])] = s;
          moved.push_back(members[static_cast<std::size_t>(k)]);
        }
      }
      f(Partition::from_labels(std::move(labels)), i, moved);
    }
  }
}

inline std::vector<Partition> extension_set(const Partition& p) {
  std::vector<Partition> out;
  for_each_extension(p, [&](Partition q, int, const std::vector<int>&) { out.push_back(std::move(q)); });
  std::sort(out.begin(), out.end());
  return out;
}

struct SplitDescriptor {
  int block = 0;
  std::vector<int> part;        // the part of the requested size
  std::vector<int> complement;  // the rest of the block
};

struct IndexedSplit {
  Partition partition;
  SplitDescriptor split;
};

// All ways of carving a part of exactly `part_size` items out of block
// `block`. Summed over part_size = 1..b-1 every unordered split shows up
// twice, once from each side.
inline std::vector<IndexedSplit> indexed_splits(const Partition& p, int block, int part_size) {
  if (block < 0 || block >= p.num_blocks()) throw DomainError("block index out of range");
  const auto members = p.blocks()[static_cast<std::size_t>(block)];
  const int b = static_cast<int>(members.size());
  if (part_size < 1 || part_size > b - 1) throw DomainError("split size must lie in [1, b - 1]");

  std::vector<IndexedSplit> out;
  std::vector<bool> chosen(static_cast<std::size_t>(b), false);
  std::fill(chosen.begin(), chosen.begin() + part_size, true);
  do {
    SplitDescriptor d{block, {}, {}};
    std::vector<int> labels = p.rgs();
    for (int k = 0; k < b; ++k) {
      const int item = members[static_cast<std::size_t>(k)];
      if (chosen[static_cast<std::size_t>(k)]) {
        d.part.push_back(item);
        labels[static_cast<std::size_t>(item)] = p.num_blocks();
      } else {
        d.complement.push_back(item);
      }
    }
    out.push_back({Partition::from_labels(std::move(labels)), std::move(d)});
  } while (std::prev_permutation(chosen.begin(), chosen.end()));
  return out;
}

}  // namespace bnp
