#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mbm::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

/// Runs the acceptance criteria (all when only is empty), printing one
/// PASS/FAIL line per criterion to log as it completes.  A criterion passes
/// when its numerical check holds and it finishes within its time budget.
std::vector<CriterionResult> run_all(std::ostream& log, const std::vector<int>& only = {});

}  // namespace mbm::acceptance
