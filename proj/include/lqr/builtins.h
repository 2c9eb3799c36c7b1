#pragma once

#include <string>
#include <vector>

#include "lqr/plant.h"

namespace lqr {

// Named desk-scale instances used throughout the tests and the CLI.
//
//   single-integrator  scalar A = 0, B = 1, Q = R = 1, W = 1;
//                      J([-k]) = k + 1/k for k > 0, optimum K = -1, J = 2
//   coupled-pair       two symmetric states with coupling a, rank-one noise;
//                      every stabilizing gain of the form [k, k] has equal cost
//   stiff-pair         one fast and one slow mode, factored noise W = B B'
//   unit-integrator    scalar A = 0, B = 1 with x0 = 1, the deterministic instance
//
// coupled-pair takes the coupling a as a parameter; the others ignore it.
Plant builtin_plant(const std::string& name, double a = 0.1);

std::vector<std::string> builtin_names();

}  // namespace lqr
