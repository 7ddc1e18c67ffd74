#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "conceptguard/calibration.hpp"
#include "conceptguard/types.hpp"

namespace conceptguard {

struct ToyTransformerConfig {
    int num_layers = 8;
    int dim = 64;
    int num_heads = 4;
    int vocab_size = 256;
    int max_seq_len = 64;
    std::uint64_t seed = 0;
};

struct LayerWeights {
    std::vector<float> w_query;  // dim x dim, row-major
    std::vector<float> w_key;    // dim x dim
    std::vector<float> w_value;  // dim x dim
    std::vector<float> w_out;    // dim x dim
    std::vector<float> w_ff_in;  // dim x 4*dim
    std::vector<float> w_ff_out; // 4*dim x dim
};

// Weights are fully determined by (config, seed): same inputs, bit-identical
// state. Pre-norm attention + feed-forward blocks, sinusoidal positions,
// causal mask, no biases, no dropout.
struct ToyTransformerState {
    ToyTransformerConfig config;
    std::vector<float> token_embedding;  // vocab_size x dim
    std::vector<float> positional;       // max_seq_len x dim, sinusoidal
    std::vector<LayerWeights> layers;
    std::vector<float> output_embedding; // W_oe: vocab_size x dim
    std::vector<std::string> vocab;      // "tok0" .. "tok{V-1}"

    std::string model_id() const;
};

enum class EditMode { add, subtract };

// A hidden-state edit applied to the residual stream after one block:
// H^layer +- magnitude * direction, broadcast over every token position.
struct ConceptEdit {
    int layer = 0;
    EmbeddingVector direction; // unit norm
    double magnitude = 0.0;    // >= 0
    EditMode mode = EditMode::add;
};

ToyTransformerState init_toy_transformer(const ToyTransformerConfig& config);

struct ForwardResult {
    std::vector<float> logits; // over the vocabulary, for the last position
    // Last-token residual stream after each block, post-edit.
    std::vector<EmbeddingVector> layer_last_token;
};

ForwardResult forward(const ToyTransformerState& state,
                      std::span<const int> token_ids,
                      std::span<const ConceptEdit> edits = {});

// The two mitigation edits, in order: enhance the toxic direction by
// delta_toxic, then weaken the jailbreak direction by delta_jailbreak.
std::vector<ConceptEdit> apply_mitigation(const CalibrationProfile& profile);

// Greedy decoding; edits are applied on every step's forward pass. Returns
// the prompt plus generated ids.
std::vector<int> generate_greedy(const ToyTransformerState& state,
                                 std::span<const int> prompt_ids,
                                 int max_new_tokens,
                                 std::span<const ConceptEdit> edits = {});

struct PromptSpec {
    std::string prompt_id;
    PromptCategory category = PromptCategory::benign;
    std::string attack_tag; // empty = none
    std::vector<int> token_ids;
};

// Per-layer last-token embeddings for every prompt, no edits applied.
EmbeddingDataset dump_embeddings(const ToyTransformerState& state,
                                 std::span<const PromptSpec> prompts);

} // namespace conceptguard
