#pragma once

#include <cstdint>
#include <vector>

#include "lqr/plant.h"

namespace lqr {

// Seeded random plant with n in [n_min, n_max], m in [m_min, m_max]: dense
// (A, B) redrawn until controllable, Q and W positive definite, R positive
// definite. Controllable plus PD weights means the standing assumptions
// always hold. Pass equal bounds to fix a dimension.
Plant random_plant(std::uint64_t seed, int n_max = 6, int m_max = 3,
                   int n_min = 2, int m_min = 1);

// Random stabilizing gains near the optimum of the given plant: Gaussian
// perturbations of K_star, backtracked until the closed loop is Hurwitz.
std::vector<MatrixXd> random_stabilizing_gains(const Plant& plant, int count,
                                               std::uint64_t seed);

}  // namespace lqr
