#include "conceptguard/synth.hpp"

#include <cmath>
#include <cstdio>

#include "conceptguard/rng.hpp"
#include "conceptguard/vector_ops.hpp"

namespace conceptguard {

namespace {

void validate_spec(const PlantedGeneratorSpec& spec) {
    if (spec.num_layers <= 0 || spec.dim <= 0) {
        raise(errc::invalid_spec, "generator dimensions must be positive");
    }
    if (spec.toxic_layer < 0 || spec.toxic_layer >= spec.num_layers ||
        spec.jailbreak_layer < 0 || spec.jailbreak_layer >= spec.num_layers) {
        raise(errc::invalid_spec, "planted layers out of range");
    }
    if (spec.alpha < 0.0 || spec.beta < 0.0 || spec.sigma < 0.0 || spec.base_scale < 0.0) {
        raise(errc::invalid_spec, "alpha, beta, sigma and base_scale must be non-negative");
    }
    if (spec.benign_count < 0 || spec.harmful_count < 0 || spec.jailbreak_count < 0) {
        raise(errc::invalid_spec, "record counts must be non-negative");
    }
    if (spec.jailbreak_direction_variant < 0) {
        raise(errc::invalid_spec, "jailbreak direction variant must be non-negative");
    }
}

EmbeddingVector draw_gaussian_vector(Rng& rng, int dim) {
    EmbeddingVector vec(static_cast<std::size_t>(dim));
    for (float& value : vec) {
        value = static_cast<float>(rng.next_gaussian());
    }
    return vec;
}

// Draw a unit vector orthogonal to everything in `against` (Gram-Schmidt,
// redrawing on numerically degenerate samples).
EmbeddingVector draw_orthonormal(Rng& rng, int dim,
                                 const std::vector<const EmbeddingVector*>& against) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        EmbeddingVector candidate = draw_gaussian_vector(rng, dim);
        for (const EmbeddingVector* basis : against) {
            const double projection = dot(candidate, *basis);
            for (std::size_t i = 0; i < candidate.size(); ++i) {
                candidate[i] = static_cast<float>(candidate[i] - projection * (*basis)[i]);
            }
        }
        if (norm(candidate) > 1e-6) {
            return normalize(candidate);
        }
    }
    raise(errc::invalid_spec, "cannot draw an orthonormal direction; dim too small");
}

std::uint64_t effective_direction_seed(const PlantedGeneratorSpec& spec) {
    return spec.direction_seed != 0 ? spec.direction_seed : derive_seed(spec.seed, 0xd14ec7);
}

} // namespace

PlantedDirections planted_directions(const PlantedGeneratorSpec& spec) {
    validate_spec(spec);
    const std::uint64_t direction_seed = effective_direction_seed(spec);

    // Independent sub-streams per piece, so changing the variant index leaves
    // u_t and the layer bases untouched.
    Rng toxic_rng(derive_seed(direction_seed, 1));
    Rng chain_rng(derive_seed(direction_seed, 2));
    Rng base_rng(derive_seed(direction_seed, 3));

    PlantedDirections directions;
    directions.toxic = normalize(draw_gaussian_vector(toxic_rng, spec.dim));

    // The u_j chain: each variant is orthogonal to u_t and to every earlier
    // variant, so distinct variants are exactly orthogonal directions.
    std::vector<EmbeddingVector> chain;
    std::vector<const EmbeddingVector*> against{&directions.toxic};
    for (int variant = 0; variant <= spec.jailbreak_direction_variant; ++variant) {
        chain.push_back(draw_orthonormal(chain_rng, spec.dim, against));
        against.push_back(&chain.back());
    }
    directions.jailbreak = chain.back();

    directions.layer_base.reserve(static_cast<std::size_t>(spec.num_layers));
    for (int layer = 0; layer < spec.num_layers; ++layer) {
        EmbeddingVector base = normalize(draw_gaussian_vector(base_rng, spec.dim));
        for (float& value : base) {
            value = static_cast<float>(value * spec.base_scale);
        }
        directions.layer_base.push_back(std::move(base));
    }
    return directions;
}

EmbeddingDataset synth(const PlantedGeneratorSpec& spec) {
    validate_spec(spec);
    const PlantedDirections directions = planted_directions(spec);

    EmbeddingDataset dataset;
    dataset.model_id = spec.model_id;
    dataset.num_layers = spec.num_layers;
    dataset.dim = spec.dim;
    dataset.records.reserve(
        static_cast<std::size_t>(spec.benign_count + spec.harmful_count + spec.jailbreak_count));

    // sigma is the expected noise norm per layer vector; components are
    // N(0, sigma^2 / d).
    const double component_std = spec.sigma / std::sqrt(static_cast<double>(spec.dim));
    Rng rng(derive_seed(spec.seed, 0x5a3b1e));

    const auto make_record = [&](const std::string& id, PromptCategory category) {
        PromptEmbeddingRecord record;
        record.prompt_id = id;
        record.category = category;
        if (category == PromptCategory::jailbreak) {
            record.attack_tag = spec.attack_tag;
        }
        record.layers.reserve(static_cast<std::size_t>(spec.num_layers));
        for (int layer = 0; layer < spec.num_layers; ++layer) {
            const auto& base = directions.layer_base[static_cast<std::size_t>(layer)];
            EmbeddingVector vec(static_cast<std::size_t>(spec.dim));
            for (int i = 0; i < spec.dim; ++i) {
                vec[static_cast<std::size_t>(i)] = static_cast<float>(
                    static_cast<double>(base[static_cast<std::size_t>(i)]) +
                    component_std * rng.next_gaussian());
            }
            const bool add_toxic =
                layer == spec.toxic_layer &&
                (category == PromptCategory::harmful ||
                 (category == PromptCategory::jailbreak && spec.jailbreak_retains_toxic));
            if (add_toxic) {
                for (int i = 0; i < spec.dim; ++i) {
                    vec[static_cast<std::size_t>(i)] = static_cast<float>(
                        static_cast<double>(vec[static_cast<std::size_t>(i)]) +
                        spec.alpha *
                            static_cast<double>(directions.toxic[static_cast<std::size_t>(i)]));
                }
            }
            if (layer == spec.jailbreak_layer && category == PromptCategory::jailbreak) {
                for (int i = 0; i < spec.dim; ++i) {
                    vec[static_cast<std::size_t>(i)] = static_cast<float>(
                        static_cast<double>(vec[static_cast<std::size_t>(i)]) +
                        spec.beta *
                            static_cast<double>(
                                directions.jailbreak[static_cast<std::size_t>(i)]));
                }
            }
            record.layers.push_back(std::move(vec));
        }
        return record;
    };

    char id_buffer[32];
    for (std::int64_t i = 0; i < spec.benign_count; ++i) {
        std::snprintf(id_buffer, sizeof(id_buffer), "b%04lld", static_cast<long long>(i));
        dataset.records.push_back(make_record(id_buffer, PromptCategory::benign));
    }
    for (std::int64_t i = 0; i < spec.harmful_count; ++i) {
        std::snprintf(id_buffer, sizeof(id_buffer), "h%04lld", static_cast<long long>(i));
        dataset.records.push_back(make_record(id_buffer, PromptCategory::harmful));
    }
    for (std::int64_t i = 0; i < spec.jailbreak_count; ++i) {
        std::snprintf(id_buffer, sizeof(id_buffer), "j%04lld", static_cast<long long>(i));
        dataset.records.push_back(make_record(id_buffer, PromptCategory::jailbreak));
    }
    dataset.validate();
    return dataset;
}

} // namespace conceptguard
