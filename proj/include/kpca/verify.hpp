#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace kpca {

/// One verification check: a named mathematical property that either holds or
/// throws with a diagnostic.
struct Check {
  std::string name;
  std::string property;
  std::function<void()> run;
};

/// The property suite of every module. `fast` shrinks Monte Carlo sizes and
/// drops the slowest consistency checks.
std::vector<Check> verification_checks(bool fast);

/// Runs all checks, printing one table row per check. Returns the number of
/// failures.
int run_verification(bool fast, std::ostream& out);

}  // namespace kpca
