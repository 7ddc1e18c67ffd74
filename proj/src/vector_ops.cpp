#include "conceptguard/vector_ops.hpp"

#include <algorithm>
#include <cmath>

namespace conceptguard {

namespace {

void require_same_length(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        raise(errc::dimension_mismatch, "vector lengths differ: " + std::to_string(a.size()) +
                                            " vs " + std::to_string(b.size()));
    }
}

} // namespace

double dot(std::span<const float> a, std::span<const float> b) {
    require_same_length(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double norm(std::span<const float> a) {
    double acc = 0.0;
    for (float value : a) {
        acc += static_cast<double>(value) * static_cast<double>(value);
    }
    return std::sqrt(acc);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    require_same_length(a, b);
    const double norm_a = norm(a);
    const double norm_b = norm(b);
    if (norm_a < kZeroNormEpsilon || norm_b < kZeroNormEpsilon) {
        raise(errc::zero_vector, "cosine of a numerically zero vector");
    }
    const double value = dot(a, b) / (norm_a * norm_b);
    return std::clamp(value, -1.0, 1.0);
}

EmbeddingVector normalize(std::span<const float> a) {
    const double length = norm(a);
    if (length < kZeroNormEpsilon) {
        raise(errc::zero_vector, "cannot normalize a numerically zero vector");
    }
    EmbeddingVector result(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        result[i] = static_cast<float>(static_cast<double>(a[i]) / length);
    }
    return result;
}

EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vectors) {
    if (vectors.empty()) {
        raise(errc::empty_set, "mean of an empty set of vectors");
    }
    const std::size_t dim = vectors.front().size();
    std::vector<double> acc(dim, 0.0);
    for (const auto& vec : vectors) {
        if (vec.size() != dim) {
            raise(errc::dimension_mismatch, "mean over vectors of differing lengths");
        }
        for (std::size_t i = 0; i < dim; ++i) {
            acc[i] += static_cast<double>(vec[i]);
        }
    }
    EmbeddingVector result(dim);
    const double count = static_cast<double>(vectors.size());
    for (std::size_t i = 0; i < dim; ++i) {
        result[i] = static_cast<float>(acc[i] / count);
    }
    return result;
}

EmbeddingVector subtract(std::span<const float> a, std::span<const float> b) {
    require_same_length(a, b);
    EmbeddingVector result(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        result[i] = a[i] - b[i];
    }
    return result;
}

} // namespace conceptguard
