#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace afenet::testing {

struct GradCase {
  std::string name;
  std::function<GradCheckReport(const GradCheckOptions&)> run;
};

/// Every differentiable primitive.
std::vector<GradCase> op_gradient_cases();
/// Every composite module, plus the whole network for each variant at a
/// micro configuration (C = 4, 8 x 8 input).
std::vector<GradCase> module_gradient_cases();

}  // namespace afenet::testing
