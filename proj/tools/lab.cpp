#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

#include "kpzlab/error.hpp"
#include "kpzlab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weakly asymmetric growth model laboratory"};
  std::string kind, config_path, out;
  std::uint64_t seed = 0;
  app.add_option("kind", kind, "Experiment kind")
      ->required()
      ->check(CLI::IsMember(kpzlab::experiment_kinds()));
  app.add_option("--config", config_path, "Flat key = value run configuration")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out, "Output directory (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto config = kpzlab::RunConfig::load(config_path);
    config.kind = kind;
    if (*seed_opt) config.seed = seed;
    if (!out.empty()) config.out = out;
    const auto record = kpzlab::run_experiment(config);
    for (const auto& c : record.criteria)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
    for (const auto& m : record.metrics) std::printf("%s = %.10g\n", m.name.c_str(), m.value);
    std::cout << "summary digest " << record.summary_digest() << "\n";
    if (!config.out.empty()) std::cout << "report written to " << config.out << "\n";
    return record.passed() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 1;
  }
}
