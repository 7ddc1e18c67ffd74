#pragma once

#include <cstdint>
#include <string>

#include "conceptguard/types.hpp"

namespace conceptguard {

// Planted-concept generator. Ground truth for recovery, detection, and
// mitigation tests: every class separation lies along a known direction at a
// known layer.
//
// Construction per record and layer: shared base vector (norm base_scale)
// plus isotropic noise with expected norm sigma (components are
// N(0, sigma^2/d)). Harmful records add alpha * u_t at toxic_layer; jailbreak
// records add beta * u_j at jailbreak_layer and, unless disabled, retain the
// alpha * u_t toxic offset as well. u_t and u_j are orthonormal by
// construction, as are successive u_j variants.
struct PlantedGeneratorSpec {
    int num_layers = 8;
    int dim = 64;
    int toxic_layer = 5;
    int jailbreak_layer = 6;

    double alpha = 1.0;      // toxic separation magnitude
    double beta = 1.0;       // jailbreak separation magnitude
    double sigma = 0.1;      // expected per-layer noise norm
    double base_scale = 1.0; // norm of the shared per-layer base vector

    std::int64_t benign_count = 30;
    std::int64_t harmful_count = 30;
    std::int64_t jailbreak_count = 30;

    std::uint64_t seed = 0;
    // 0 = derive from seed. Datasets sharing direction_seed share bases, u_t
    // and the u_j chain, which is what cross-attack evaluation needs.
    std::uint64_t direction_seed = 0;
    // Selects u_j from an orthonormal chain; different variants are exactly
    // orthogonal (and orthogonal to u_t).
    int jailbreak_direction_variant = 0;
    // Jailbreak records keep the toxic offset by default; disable to probe
    // the jailbreak-concept-only setting.
    bool jailbreak_retains_toxic = true;

    std::string attack_tag;
    std::string model_id = "planted";
};

struct PlantedDirections {
    EmbeddingVector toxic;     // u_t
    EmbeddingVector jailbreak; // u_j (selected variant)
    std::vector<EmbeddingVector> layer_base;
};

// The directions a spec implies, without generating records. This is the
// oracle side of recovery tests.
PlantedDirections planted_directions(const PlantedGeneratorSpec& spec);

EmbeddingDataset synth(const PlantedGeneratorSpec& spec);

} // namespace conceptguard
