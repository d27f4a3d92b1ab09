#pragma once

// Command-line front end: plan, check, seed, simulate.
//
// Exit codes
//   plan      0 ok, 2 config error, 3 horizon too short, 4 smooth robustness below zeta
//   check     0 robustness > 0, 1 otherwise, 2 shape or input error
//   seed      0 ok, 2 config error, 3 horizon too short
//   simulate  0 executed trajectory satisfies the specification, 1 otherwise,
//             2 input error, 3 horizon too short, 5 residual mission infeasible

#include <iosfwd>
#include <string>
#include <vector>

namespace stlplan {

enum ExitCode : int {
  kExitOk = 0,
  kExitViolated = 1,
  kExitInput = 2,
  kExitHorizon = 3,
  kExitBelowZeta = 4,
  kExitResidual = 5,
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stlplan
