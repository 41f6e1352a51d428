#pragma once

#include <cstdio>
#include <cstdint>

namespace sacmil {

// Finite-difference verification of every differentiable operation plus the
// full model on a tiny configuration (double precision, eps 1e-3,
// rel tol 1e-4). Prints one line per check; returns true iff all pass.
bool run_gradient_selfcheck(std::uint64_t seed, std::FILE* out);

}  // namespace sacmil
