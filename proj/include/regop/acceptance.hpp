#ifndef REGOP_ACCEPTANCE_HPP_
#define REGOP_ACCEPTANCE_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace regop {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  std::vector<int> only;  // empty: all criteria
};

int acceptance_criterion_count();

/// Runs the property suite; `on_result` is called after each criterion.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

/// One line: "PASS 03 name: detail", with the runtime appended on request.
std::string format_result(const CriterionResult& r, bool with_time);

}  // namespace regop

#endif  // REGOP_ACCEPTANCE_HPP_
