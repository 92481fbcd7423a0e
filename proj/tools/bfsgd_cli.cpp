#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bfsgd/harness/experiment.hpp"
#include "bfsgd/harness/verify.hpp"

namespace {

int exit_code(bfsgd::ErrorCategory c) {
  switch (c) {
    case bfsgd::ErrorCategory::config: return 2;
    case bfsgd::ErrorCategory::numerical: return 3;
    case bfsgd::ErrorCategory::solver: return 4;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-fidelity stochastic gradient optimizers and experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run one experiment and write trace.csv and summary.json");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Override the output directory");

  int runs = 0;
  auto* rep = app.add_subcommand("replicate", "Aggregate relative parameter error over seeded runs");
  rep->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  rep->add_option("--runs", runs, "Number of replications")->required();
  rep->add_option("--out", out_dir, "Override the output directory");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run a built-in self-check suite");
  verify->add_option("suite", suite, "gradients, cv, kl, costs or rates")
      ->required()
      ->check(CLI::IsMember(bfsgd::harness::verify_suites()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run || *rep) {
      auto config = bfsgd::harness::load_config(config_path);
      if (seed) config.seed = *seed;
      if (!out_dir.empty()) config.output = out_dir;
      if (*run) {
        const auto a = bfsgd::harness::run_experiment(config);
        std::cout << a.summary.dump(2) << '\n';
        std::cout << "trace: " << a.trace_csv.string() << '\n';
      } else {
        const auto r = bfsgd::harness::replicate(config, runs);
        std::cout << "iterations: " << r.mean.size() << '\n';
        std::cout << "final mean relative error: " << bfsgd::harness::format_number(r.mean.back()) << '\n';
        if (r.fit)
          std::cout << "tail rate: " << bfsgd::harness::format_number(r.fit->rate)
                    << ", fit quality: " << bfsgd::harness::format_number(r.fit->fit_quality) << '\n';
        std::cout << "aggregate: " << r.aggregate_csv.string() << '\n';
      }
      return 0;
    }
    bool ok = true;
    for (const auto& c : bfsgd::harness::run_verify(suite)) {
      std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << '\n';
      ok = ok && c.passed;
    }
    return ok ? 0 : 3;
  } catch (const bfsgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
