#pragma once

#include <string>

#include "lqr/plant.h"

namespace lqr {

// Parse a plant from a JSON document with row-major matrix fields
// "A", "B", "Q", "R", "W" and optional "B1", "x0". Dimension and positivity
// checks run through make_plant, so a structurally bad file throws the same
// typed errors as programmatic construction.
Plant plant_from_json(const std::string& text, const Tolerances& tol = default_tol());

Plant load_plant(const std::string& path, const Tolerances& tol = default_tol());

std::string plant_to_json(const Plant& plant);

}  // namespace lqr
