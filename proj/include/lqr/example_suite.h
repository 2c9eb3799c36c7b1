#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lqr {

struct ExampleCheck {
  std::string name;
  std::string detail;  // one-line description of what is being verified
  // Runs the check at the given tolerance scale (1.0 = pinned defaults).
  // Returns a failure message, or empty on success.
  std::function<std::string(double tol_scale)> run;
};

// Registry of the worked-example verifications shared by the CLI's `examples`
// subcommand. Each check recomputes a published closed form and compares.
const std::vector<ExampleCheck>& example_checks();

}  // namespace lqr
