#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conceptguard/error.hpp"

namespace conceptguard {

// Activations are stored at 32-bit precision; reductions over them run at
// 64-bit (see vector_ops).
using EmbeddingVector = std::vector<float>;

enum class PromptCategory { benign, harmful, jailbreak };

std::string_view to_string(PromptCategory category);
std::optional<PromptCategory> category_from_string(std::string_view text);

// Per-prompt last-token hidden vectors, one per transformer layer.
struct PromptEmbeddingRecord {
    std::string prompt_id;
    PromptCategory category = PromptCategory::benign;
    std::string attack_tag;                // empty = untagged
    std::vector<EmbeddingVector> layers;   // [num_layers][dim]
};

struct EmbeddingDataset {
    std::string model_id;
    int num_layers = 0;
    int dim = 0;
    std::vector<PromptEmbeddingRecord> records;

    // Throws on any invariant violation: positive dims, per-record layer
    // count and vector lengths, finite entries, unique prompt ids.
    void validate() const;
};

enum class SignAnchor { positive_class_mean };

// A unit direction at a specific layer. The sign convention is fixed at
// extraction time (oriented toward the positive class mean difference).
struct ConceptSubspace {
    int layer = 0;
    EmbeddingVector direction;
    SignAnchor sign_anchor = SignAnchor::positive_class_mean;
};

} // namespace conceptguard
