#pragma once

#include <string>
#include <vector>

namespace maskcheck {

struct SelfCheckResult {
  std::string name;
  std::string expected;
  std::string got;
  bool pass = false;
};

/// The 17 mandatory known-answer checks (7 masked Boolean, 4 unmasked,
/// 6 arithmetic-mode circuits) run through classify_structural on the
/// exhaustive backend. The fixed list is documented in docs/selfchecks.md;
/// changing it is a breaking, versioned change.
std::vector<SelfCheckResult> run_selfchecks();

/// Lazy process-wide gate: every analysis entry point calls this; the
/// first failure halts with SelfCheckFailure.
void ensure_selfchecks();

bool selfchecks_passed_this_process();

namespace testing {
/// Clears the cached gate state (negative-control tests).
void reset_selfcheck_gate();
} // namespace testing

} // namespace maskcheck
