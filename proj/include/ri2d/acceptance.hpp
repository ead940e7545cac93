#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ri2d {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured figures and per-gate outcomes, one line
};

struct AcceptanceOptions {
  // Smaller geometries and sample counts with the same gate structure; a
  // smoke run, not the release bar.
  bool quick = false;
  std::uint64_t seed = 0xac2e97ull;
  // When set, potential tables are cached here across runs.
  std::filesystem::path cache_dir;
};

// Runs the eight release gates in order, streaming one PASS/FAIL line per
// criterion to `log` as it completes.  The run is deterministic in the
// options; every tolerance is pinned in the implementation next to the gate
// it guards.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream& log);

// True when every criterion passed.
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace ri2d
