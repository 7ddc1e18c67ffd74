#pragma once

// Test-only oracles, kept independent of the library implementations they
// check: a dense Jacobi eigensolver (vs power iteration) and a direct-count
// Youden search (vs the sorted sweep).

#include <cstdint>
#include <utility>
#include <vector>

#include "conceptguard/types.hpp"

namespace conceptguard::testing {

// Gram matrix D^T D at 64-bit precision.
std::vector<std::vector<double>> gram_matrix(const std::vector<EmbeddingVector>& rows);

// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations;
// returns the unit eigenvector of the largest eigenvalue.
std::vector<double> jacobi_top_eigenvector(std::vector<std::vector<double>> matrix);

// All eigenvalues, descending (for spectral-gap checks).
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> matrix);

// |cos| between a float direction and a double direction.
double abs_cosine(const EmbeddingVector& a, const std::vector<double>& b);

struct YoudenOracleResult {
    double threshold = 0.0;
    double j_stat = 0.0;
};

// Evaluates J = TPR - FPR by direct counting at every candidate threshold
// (midpoints between adjacent distinct scores, plus min-1 and max+1
// sentinels); max J, ties to the smallest threshold.
YoudenOracleResult exhaustive_youden(const std::vector<std::pair<double, bool>>& samples);

// Random matrix with an enforced top-singular-value gap sigma1/sigma2 >=
// min_gap, returned as float rows (gap measured on the float-cast matrix by
// the caller if it matters).
std::vector<EmbeddingVector> random_gapped_matrix(std::uint64_t seed, int max_rows, int max_dim,
                                                  double min_gap);

} // namespace conceptguard::testing
