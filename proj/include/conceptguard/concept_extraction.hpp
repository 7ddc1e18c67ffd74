#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "conceptguard/types.hpp"

namespace conceptguard {

// Which class pair a concept separates. The positive side is the class the
// direction points toward.
enum class ConceptKind {
    toxic_harmful,   // harmful   vs benign
    toxic_jailbreak, // jailbreak vs benign
    jailbreak,       // jailbreak vs harmful
};

PromptCategory positive_category(ConceptKind kind);
PromptCategory negative_category(ConceptKind kind);

struct CounterfactualPairSet {
    std::vector<PromptEmbeddingRecord> positive;
    std::vector<PromptEmbeddingRecord> negative;
    // (positive_index, negative_index), length min(|positive|, |negative|),
    // each index used at most once per side.
    std::vector<std::pair<std::size_t, std::size_t>> pairing;

    std::size_t pair_count() const { return pairing.size(); }
    int num_layers() const;
    int dim() const;
};

// Seeded uniform random matching, truncated to the smaller side. The same
// inputs and seed always produce the same pairing.
CounterfactualPairSet form_pairs(std::span<const PromptEmbeddingRecord> positive,
                                 std::span<const PromptEmbeddingRecord> negative,
                                 std::uint64_t seed);

// Row i = e^layer(positive_i) - e^layer(negative_i), in pairing order.
std::vector<EmbeddingVector> difference_matrix(const CounterfactualPairSet& pairs, int layer);

// Rank-1 direction of the difference matrix, sign-fixed so the mean
// projection of the difference rows onto it is >= 0.
ConceptSubspace extract_concept(const CounterfactualPairSet& pairs, int layer);

struct TokenProjection {
    int token_id = 0;
    std::string token_text;
    double score = 0.0;
};

// Matches the presentation default of four tokens per concept.
inline constexpr int kDefaultTopTokens = 4;

// scores = W_oe . direction; returns the k best-scoring tokens, descending,
// ties broken by the lower token id. output_embedding is |V| x d row-major.
std::vector<TokenProjection> map_to_tokens(const ConceptSubspace& subspace,
                                           std::span<const float> output_embedding,
                                           std::span<const std::string> vocab,
                                           int k = kDefaultTopTokens);

// A vocabulary projection (W_oe plus token strings), either snapshotted from
// the toy transformer or loaded from a sidecar file: one JSON header line
// {"vocab","dim"}, then `token_text v0 v1 ... v{d-1}` per line.
struct VocabProjection {
    std::vector<std::string> tokens;
    std::vector<float> output_embedding; // |V| x dim, row-major
    int dim = 0;
};

VocabProjection load_vocab_projection(const std::string& path);

} // namespace conceptguard
