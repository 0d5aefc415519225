// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bnp/errors.hpp"
#include "bnp/io.hpp"
#include "bnp/partition.hpp"
#include "bnp/random.hpp"

namespace bnp {

struct GaussianIID {
  double mean = 0.0;
  double sd = 1.0;
};

struct UniformUnion {
  std::vector<std::pair<double, double>> intervals;
};

struct FiniteMixture {
  std::vector<double> weights;
  std::vector<double> means;
  double sd = 1.0;
};

// Sequential seating (Dirichlet process, concentration alpha), then one
// location per table from N(0, theta_sd^2), then N(location, obs_sd^2) draws.
struct CRPGenerative {
  double alpha = 3.0;
  double theta_sd = 5.0;
  double obs_sd = 1.0;
};

using GeneratorVariant = std::variant<GaussianIID, UniformUnion, FiniteMixture, CRPGenerative>;

struct GeneratorSpec {
  GeneratorVariant variant = GaussianIID{};
  int n = 1;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] KeyValues describe() const;
};

inline void GeneratorSpec::validate() const {
  if (n < 1) throw ValidationError("generator n must be at least 1");
  std::visit(
      [](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, GaussianIID>) {
          if (!(g.sd > 0.0)) throw ValidationError("sd must be positive");
        } else if constexpr (std::is_same_v<T, UniformUnion>) {
          if (g.intervals.empty()) throw ValidationError("uniform union needs at least one interval");
          auto sorted = g.intervals;
          std::sort(sorted.begin(), sorted.end());
          for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (!(sorted[i].second > sorted[i].first)) throw ValidationError("intervals need positive length");
            if (i > 0 && sorted[i].first < sorted[i - 1].second) throw ValidationError("intervals must be disjoint");
          }
        } else if constexpr (std::is_same_v<T, FiniteMixture>) {
          if (g.weights.empty() || g.weights.size() != g.means.size()) {
            throw ValidationError("mixture needs matching weights and means");
          }
          double total = 0.0;
          for (double w : g.weights) {
            if (!(w >= 0.0)) throw ValidationError("mixture weights must be nonnegative");
            total += w;
          }
          if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mixture weights must sum to 1");
          if (!(g.sd > 0.0)) throw ValidationError("sd must be positive");
        } else {
          if (!(g.alpha > 0.0)) throw ValidationError("alpha must be positive");
          if (!(g.theta_sd > 0.0) || !(g.obs_sd > 0.0)) throw ValidationError("sd parameters must be positive");
        }
      },
      variant);
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

inline KeyValues GeneratorSpec::describe() const {
  KeyValues kv;
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, GaussianIID>) {
          kv = {{"generator.kind", "gaussian-iid"}, {"generator.mean", format_double(g.mean)},
                {"generator.sd", format_double(g.sd)}};
        } else if constexpr (std::is_same_v<T, UniformUnion>) {
          std::string iv;
          for (std::size_t i = 0; i < g.intervals.size(); ++i) {
            iv += (i ? "," : "") + format_double(g.intervals[i].first) + ":" + format_double(g.intervals[i].second);
          }
          kv = {{"generator.kind", "uniform-union"}, {"generator.intervals", iv}};
        } else if constexpr (std::is_same_v<T, FiniteMixture>) {
          kv = {{"generator.kind", "finite-mixture"}, {"generator.weights", join_doubles(g.weights)},
                {"generator.means", join_doubles(g.means)}, {"generator.sd", format_double(g.sd)}};
        } else {
          kv = {{"generator.kind", "crp"}, {"generator.alpha", format_double(g.alpha)},
                {"generator.theta_sd", format_double(g.theta_sd)}, {"generator.obs_sd", format_double(g.obs_sd)}};
        }
      },
      variant);
  kv.emplace_back("generator.n", std::to_string(n));
  kv.emplace_back("seed", std::to_string(seed));
  return kv;
}

struct GeneratedData {
  std::vector<double> values;
  std::vector<int> labels;  // canonical (first-occurrence) component labels
};

// Data generation draws from its own stream so a sampler run with the same
// seed does not replay the same uniforms.
inline constexpr std::uint64_t kGeneratorStream = 0x6461746173747265ULL;

inline std::size_t draw_categorical(Engine& rng, const std::vector<double>& weights, double total) {
  double u = uniform_open01(rng) * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return weights.size() - 1;
}

inline GeneratedData generate(const GeneratorSpec& spec) {
  spec.validate();
  Engine rng = make_engine(spec.seed, kGeneratorStream);
  const auto n = static_cast<std::size_t>(spec.n);
  GeneratedData out;
  out.values.reserve(n);
  out.labels.reserve(n);
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, GaussianIID>) {
          for (std::size_t i = 0; i < n; ++i) {
            out.values.push_back(normal(rng, g.mean, g.sd));
            out.labels.push_back(0);
          }
        } else if constexpr (std::is_same_v<T, UniformUnion>) {
          // Inverse CDF over the concatenated intervals; no rejection.
          std::vector<double> lengths;
          double total = 0.0;
          for (const auto& [lo, hi] : g.intervals) {
            lengths.push_back(hi - lo);
            total += hi - lo;
          }
          for (std::size_t i = 0; i < n; ++i) {
            double u = uniform_open01(rng) * total;
            std::size_t k = 0;
            while (k + 1 < lengths.size() && u >= lengths[k]) u -= lengths[k++];
            u = std::min(u, lengths[k]);
            out.values.push_back(g.intervals[k].first + u);
            out.labels.push_back(static_cast<int>(k));
          }
        } else if constexpr (std::is_same_v<T, FiniteMixture>) {
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = draw_categorical(rng, g.weights, 1.0);
            out.values.push_back(normal(rng, g.means[k], g.sd));
            out.labels.push_back(static_cast<int>(k));
          }
        } else {
          std::vector<double> sizes;
          for (std::size_t i = 0; i < n; ++i) {
            auto weights = sizes;
            weights.push_back(g.alpha);
            const std::size_t k = draw_categorical(rng, weights, g.alpha + static_cast<double>(i));
            if (k == sizes.size()) sizes.push_back(0.0);
            sizes[k] += 1.0;
            out.labels.push_back(static_cast<int>(k));
          }
          std::vector<double> locations;
          for (std::size_t k = 0; k < sizes.size(); ++k) locations.push_back(normal(rng, 0.0, g.theta_sd));
          for (std::size_t i = 0; i < n; ++i) {
            out.values.push_back(normal(rng, locations[static_cast<std::size_t>(out.labels[i])], g.obs_sd));
          }
        }
      },
      spec.variant);
  canonicalize_labels(out.labels);
  return out;
}

// Experiment presets.
inline GeneratorSpec preset_generator(const std::string& name, int n = 300, std::uint64_t seed = 0) {
  GeneratorSpec spec;
  spec.n = n;
  spec.seed = seed;
  if (name == "one-cluster-gaussian") {
    spec.variant = GaussianIID{0.0, 1.0};
  } else if (name == "two-cluster-uniform") {
    spec.variant = UniformUnion{{{0.0, 1.0}, {2.0, 3.0}}};
  } else if (name == "dp-generative") {
    spec.variant = CRPGenerative{3.0, 5.0, 1.0};
  } else {
    throw ValidationError("unknown preset '" + name + "'");
  }
  return spec;
}

}  // namespace bnp
