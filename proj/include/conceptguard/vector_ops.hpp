#pragma once

#include <span>

#include "conceptguard/types.hpp"

namespace conceptguard {

// Norm below which a vector is treated as numerically zero.
inline constexpr double kZeroNormEpsilon = 1e-12;

// Reductions accumulate at 64-bit even though storage is 32-bit.
double dot(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> a);

// cos(a, b) clamped to [-1, 1]. Throws errc::zero_vector if either norm is
// below kZeroNormEpsilon; callers that want a "not activated" policy handle
// that themselves (see detector).
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// a / ||a||. Throws errc::zero_vector on degenerate input.
EmbeddingVector normalize(std::span<const float> a);

// Element-wise arithmetic mean. Throws errc::empty_set on an empty sequence.
EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vectors);

EmbeddingVector subtract(std::span<const float> a, std::span<const float> b);

} // namespace conceptguard
