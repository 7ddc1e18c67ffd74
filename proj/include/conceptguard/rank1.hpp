#pragma once

#include <span>

#include "conceptguard/types.hpp"

namespace conceptguard {

struct Rank1Options {
    int max_iterations = 10000;
    double tolerance = 1e-10; // successive direction change, L2
};

// Top right singular direction of the N x d matrix given as rows: the unit
// eigenvector of D^T D with the largest eigenvalue. The sign is whatever the
// iteration converges to; callers apply their own sign convention.
//
// Single-row matrices short-circuit to normalize(row), which is exact. The
// general path is power iteration on D^T D with a deterministic start
// (normalized vector of ones, falling back to basis vectors if the start is
// orthogonal to the row space).
//
// Throws errc::all_zero_rows if every row is numerically zero and
// errc::no_convergence if the iteration budget runs out.
EmbeddingVector rank1_principal_direction(std::span<const EmbeddingVector> rows,
                                          const Rank1Options& options = {});

} // namespace conceptguard
