#pragma once

#include <cstdint>

#include "savflow/field.hpp"

namespace savflow {

/// Deterministic random initial condition: i.i.d. uniform noise in
/// [-amplitude, amplitude], low-pass filtered to the lowest third of the
/// spectrum per dimension, with the mean then enforced exactly. The same
/// (grid, seed, amplitude, mean) tuple reproduces bit-identical fields on
/// any conforming platform.
Field random_initial(std::shared_ptr<const Grid> grid, std::uint64_t seed,
                     double amplitude, double mean);

/// Uniform double in [0, 1) from a raw 64-bit draw, used everywhere a
/// portable value is needed (std::uniform_real_distribution is
/// implementation-defined).
double uniform01(std::uint64_t raw);

}  // namespace savflow
