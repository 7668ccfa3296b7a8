#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lbm {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// Derives an independent child seed from a parent seed and a path of task
/// coordinates (restart index, grid cell, dataset index, ...). The result only
/// depends on the arguments, so parallel tasks get the same stream no matter
/// which worker runs them.
Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path);

/// Draws a Beta(a, b) variate through two gamma draws.
double sample_beta(Rng& rng, double a, double b);

} // namespace lbm
