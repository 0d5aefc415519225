// Apache License, Version 2.0, refer to LICENSE.txt

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using bnp::cli::Settings;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::string> preset, input, prior, init;
  std::optional<long> n, burn_in, samples, thin, chains, limit, support_floor, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, discount, sigma2, lo, hi;
  bool allow_outside = false;
  bool paper_budget = false;
  bool shuffle = false;
};

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.assignments, "override one config key (key=value); repeatable");
  cmd->add_option("--preset", f.preset, "one-cluster-gaussian | two-cluster-uniform | dp-generative");
  cmd->add_option("--input", f.input, "data file (one value per line)");
  cmd->add_option("-n,--n", f.n, "generated sample count");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--alpha", f.alpha, "concentration");
  cmd->add_option("--discount", f.discount, "Pitman-Yor discount in [0, 1)");
  cmd->add_option("--prior", f.prior, "component prior: gaussian | uniform");
  cmd->add_option("--sigma2", f.sigma2, "gaussian prior variance");
  cmd->add_option("--lo", f.lo, "uniform prior lower end");
  cmd->add_option("--hi", f.hi, "uniform prior upper end");
  cmd->add_option("--threads", f.threads, "worker threads (BNP_THREADS overrides)");
}

Settings command_line_settings(const CommonFlags& f) {
  Settings s;
  for (const auto& a : f.assignments) bnp::cli::overlay(s, bnp::cli::parse_assignment(a));
  if (f.paper_budget) bnp::cli::overlay(s, bnp::cli::paper_budget());
  const auto put = [&](const char* key, const auto& value) {
    if (value) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*value)>, std::string>) {
        s[key] = *value;
      } else if constexpr (std::is_floating_point_v<std::decay_t<decltype(*value)>>) {
        s[key] = bnp::format_double(*value);
      } else {
        s[key] = std::to_string(*value);
      }
    }
  };
  put("preset", f.preset);
  put("input", f.input);
  put("generator.n", f.n);
  put("seed", f.seed);
  put("model.alpha", f.alpha);
  put("model.discount", f.discount);
  put("prior.kind", f.prior);
  put("prior.sigma2", f.sigma2);
  put("prior.lo", f.lo);
  put("prior.hi", f.hi);
  put("threads", f.threads);
  put("gibbs.burn_in", f.burn_in);
  put("gibbs.samples", f.samples);
  put("gibbs.thin", f.thin);
  put("gibbs.init", f.init);
  put("gibbs.chains", f.chains);
  put("gibbs.support_floor", f.support_floor);
  put("exact.limit", f.limit);
  if (f.allow_outside) s["exact.allow_outside_support"] = "true";
  if (f.shuffle) s["gibbs.shuffle"] = "true";
  return s;
}

bnp::cli::ResolvedConfig resolve_flags(const CommonFlags& f) {
  Settings file;
  if (!f.config_path.empty()) file = bnp::cli::parse_settings(bnp::read_text(f.config_path), f.config_path);
  return bnp::cli::resolve(bnp::cli::layer(file, command_line_settings(f)));
}

int run(int argc, char** argv) {
  CLI::App app{"Exact and sampled posteriors over the number of clusters in DP/PY mixtures"};
  app.require_subcommand(1);

  CommonFlags gen_flags, exact_flags, gibbs_flags;
  std::string gen_out, exact_dir, gibbs_dir;

  auto* gen = app.add_subcommand("generate", "write a synthetic data file");
  add_model_flags(gen, gen_flags);
  gen->add_option("-o,--out", gen_out, "output data file")->required();

  auto* exact = app.add_subcommand("exact", "exact posterior over K by partition enumeration");
  add_model_flags(exact, exact_flags);
  exact->add_option("--limit", exact_flags.limit, "enumeration limit on n");
  exact->add_flag("--allow-outside-support", exact_flags.allow_outside, "accept data outside the uniform prior");
  exact->add_option("-o,--out-dir", exact_dir, "existing output directory")->required();

  auto* gibbs = app.add_subcommand("gibbs", "collapsed Gibbs sampler histogram over K");
  add_model_flags(gibbs, gibbs_flags);
  gibbs->add_option("--burn-in", gibbs_flags.burn_in, "burn-in sweeps");
  gibbs->add_option("--samples", gibbs_flags.samples, "retained draws");
  gibbs->add_option("--thin", gibbs_flags.thin, "sweeps between retained draws");
  gibbs->add_option("--init", gibbs_flags.init, "all-in-one-cluster | all-singletons | sequential-seating");
  gibbs->add_option("--chains", gibbs_flags.chains, "independent chains");
  gibbs->add_option("--support-floor", gibbs_flags.support_floor, "minimum count for a stable ratio row");
  gibbs->add_flag("--shuffle", gibbs_flags.shuffle, "randomize the sweep order");
  gibbs->add_flag("--paper-budget", gibbs_flags.paper_budget, "burn-in 200000, 10000 draws, thin 100");
  gibbs->add_option("-o,--out-dir", gibbs_dir, "existing output directory")->required();

  auto* ver = app.add_subcommand("verify", "run the invariant suites");
  bnp::verify::Options vopts;
  vopts.threads = bnp::cli::default_threads();
  std::vector<std::string> suites;
  std::string report_path;
  ver->add_option("--suite", suites, "suite to run; repeatable (default: all)")
      ->check(CLI::IsMember(bnp::verify::suite_names()));
  ver->add_option("--scale", vopts.scale, "multiplier on random case counts")->check(CLI::PositiveNumber);
  ver->add_option("--seed", vopts.seed, "random seed");
  ver->add_option("--decomposition-max-n", vopts.decomposition_max_n, "largest n in the decomposition suite")
      ->check(CLI::Range(4, 13));
  ver->add_option("--threads", vopts.threads, "worker threads (BNP_THREADS overrides)")->check(CLI::PositiveNumber);
  ver->add_option("-o,--out", report_path, "also write the JSON report to this file");
  ver->add_option("--corrupt-marginal", vopts.corrupt_marginal)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? bnp::cli::kOk : bnp::cli::kUsage;
  }

  if (*gen) {
    bnp::cli::cmd_generate(resolve_flags(gen_flags), gen_out);
  } else if (*exact) {
    bnp::cli::cmd_exact(resolve_flags(exact_flags), exact_dir);
  } else if (*gibbs) {
    bnp::cli::cmd_gibbs(resolve_flags(gibbs_flags), gibbs_dir);
  } else if (*ver) {
    if (const char* env = std::getenv("BNP_THREADS"); env != nullptr && *env != '\0') {
      vopts.threads = std::max(1, std::atoi(env));
    }
    const auto outcome = bnp::cli::cmd_verify(vopts, suites);
    const std::string text = outcome.report.dump(2);
    std::cout << text << '\n';
    if (!report_path.empty()) bnp::cli::write_json(report_path, outcome.report);
    if (!outcome.passed) {
      std::cerr << "verification failed: " << outcome.report["first_counterexample"].dump() << '\n';
      return bnp::cli::kVerifyFailed;
    }
  }
  return bnp::cli::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bnp::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return bnp::cli::kCapacity;
  } catch (const bnp::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return bnp::cli::kDomain;
  } catch (const bnp::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return bnp::cli::kUsage;
  } catch (const bnp::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return bnp::cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bnp::cli::kUsage;
  }
}
