#include "conceptguard/rank1.hpp"

#include <cmath>
#include <cstddef>

#include "conceptguard/vector_ops.hpp"

namespace conceptguard {

namespace {

// z = D^T (D v), computed matrix-free; returns ||z||.
double gram_apply(std::span<const EmbeddingVector> rows,
                  const std::vector<double>& v,
                  std::vector<double>& z) {
    const std::size_t dim = v.size();
    z.assign(dim, 0.0);
    for (const auto& row : rows) {
        double row_dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            row_dot += static_cast<double>(row[i]) * v[i];
        }
        for (std::size_t i = 0; i < dim; ++i) {
            z[i] += row_dot * static_cast<double>(row[i]);
        }
    }
    double norm_sq = 0.0;
    for (double value : z) norm_sq += value * value;
    return std::sqrt(norm_sq);
}

EmbeddingVector to_unit_float(const std::vector<double>& v) {
    double norm_sq = 0.0;
    for (double value : v) norm_sq += value * value;
    const double length = std::sqrt(norm_sq);
    EmbeddingVector result(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        result[i] = static_cast<float>(v[i] / length);
    }
    return result;
}

} // namespace

EmbeddingVector rank1_principal_direction(std::span<const EmbeddingVector> rows,
                                          const Rank1Options& options) {
    if (rows.empty()) {
        raise(errc::empty_set, "rank-1 direction of an empty matrix");
    }
    const std::size_t dim = rows.front().size();
    if (dim == 0) {
        raise(errc::invalid_argument, "rank-1 direction of zero-width rows");
    }
    bool any_nonzero = false;
    for (const auto& row : rows) {
        if (row.size() != dim) {
            raise(errc::dimension_mismatch, "difference matrix rows have differing lengths");
        }
        if (!any_nonzero && norm(row) >= kZeroNormEpsilon) any_nonzero = true;
    }
    if (!any_nonzero) {
        raise(errc::all_zero_rows, "every difference row is numerically zero");
    }

    // Single row: the direction is the row itself. This is also the
    // detector's per-prompt path, so it must be exact.
    if (rows.size() == 1) {
        return normalize(rows.front());
    }

    std::vector<double> v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<double> z;

    // If the deterministic start is orthogonal to the row space, fall back to
    // the first basis vector the Gram operator does not annihilate.
    if (gram_apply(rows, v, z) < 1e-300) {
        bool found = false;
        for (std::size_t k = 0; k < dim && !found; ++k) {
            v.assign(dim, 0.0);
            v[k] = 1.0;
            if (gram_apply(rows, v, z) >= 1e-300) found = true;
        }
        if (!found) {
            raise(errc::all_zero_rows, "row space is numerically empty");
        }
    }

    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        const double length = gram_apply(rows, v, z);
        if (length < 1e-300) {
            raise(errc::no_convergence, "power iteration collapsed to the null space");
        }
        double change_sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double next = z[i] / length;
            const double diff = next - v[i];
            change_sq += diff * diff;
            v[i] = next;
        }
        if (std::sqrt(change_sq) < options.tolerance) {
            return to_unit_float(v);
        }
    }
    raise(errc::no_convergence,
          "power iteration did not converge in " + std::to_string(options.max_iterations) +
              " iterations (near-degenerate spectrum)");
}

} // namespace conceptguard
