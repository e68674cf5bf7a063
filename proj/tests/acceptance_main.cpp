#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <vector>

#include "regop/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one pass/fail line per criterion"};
  regop::AcceptanceOptions options;
  app.add_option("--seed", options.seed, "base seed")->required();
  app.add_option("--only", options.only, "criterion ids to run");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  const auto results = regop::run_acceptance(options, [&](const regop::CriterionResult& r) {
    std::cout << regop::format_result(r, true) << std::endl;
    if (!r.passed) ++failed;
  });
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
