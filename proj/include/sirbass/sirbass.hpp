#pragma once

#include "closed_forms.hpp"
#include "config.hpp"
#include "continuum.hpp"
#include "csv.hpp"
#include "descriptor.hpp"
#include "exact.hpp"
#include "formulas.hpp"
#include "model.hpp"
#include "ode.hpp"
#include "rng.hpp"
#include "special.hpp"
#include "stochastic.hpp"

namespace sirbass {
inline constexpr const char* kVersion = "0.1.0";
}
