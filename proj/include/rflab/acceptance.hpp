#pragma once

// The acceptance suite: eight numbered criteria, each run at a fixed scale
// with fixed seeds and pinned tolerances.

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace rflab {

struct CriterionInfo {
  int id;
  std::string name;
  std::string description;
};

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
};

const std::vector<CriterionInfo>& acceptance_criteria();

/// Runs the selected criteria (all when `only` is empty), writing artifacts
/// to `out/c<id>/` and printing one PASS/FAIL line per criterion to `log`.
/// Criterion 8 re-runs the other selected criteria into `out/rerun/` and
/// compares every CSV byte for byte.
std::vector<CriterionResult> run_acceptance(const std::filesystem::path& out, const std::set<int>& only,
                                            std::ostream& log);

/// Lines of the form "<id>  <name>: <description>".
void list_acceptance(std::ostream& log);

}  // namespace rflab
