#include "conceptguard/toy_transformer.hpp"

#include <cmath>
#include <cstddef>

#include "conceptguard/rng.hpp"
#include "conceptguard/vector_ops.hpp"

namespace conceptguard {

namespace {

constexpr double kLayerNormEpsilon = 1e-5;

std::vector<float> draw_matrix(Rng& rng, int rows, int cols, double scale) {
    std::vector<float> weights(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (float& value : weights) {
        value = static_cast<float>(rng.next_uniform(-scale, scale));
    }
    return weights;
}

// out[m x cols] = in[m x rows] . weights[rows x cols], double accumulation.
void matmul(const std::vector<float>& in, int m, int rows,
            const std::vector<float>& weights, int cols, std::vector<float>& out) {
    out.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(cols), 0.0f);
    for (int r = 0; r < m; ++r) {
        const float* in_row = in.data() + static_cast<std::size_t>(r) * rows;
        float* out_row = out.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int k = 0; k < rows; ++k) {
                acc += static_cast<double>(in_row[k]) *
                       static_cast<double>(weights[static_cast<std::size_t>(k) * cols + c]);
            }
            out_row[c] = static_cast<float>(acc);
        }
    }
}

void layer_norm_rows(const std::vector<float>& in, int m, int dim, std::vector<float>& out) {
    out.resize(in.size());
    for (int r = 0; r < m; ++r) {
        const float* row = in.data() + static_cast<std::size_t>(r) * dim;
        float* out_row = out.data() + static_cast<std::size_t>(r) * dim;
        double mean = 0.0;
        for (int i = 0; i < dim; ++i) mean += row[i];
        mean /= dim;
        double variance = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double centered = row[i] - mean;
            variance += centered * centered;
        }
        variance /= dim;
        const double inv_std = 1.0 / std::sqrt(variance + kLayerNormEpsilon);
        for (int i = 0; i < dim; ++i) {
            out_row[i] = static_cast<float>((row[i] - mean) * inv_std);
        }
    }
}

void validate_config(const ToyTransformerConfig& config) {
    if (config.num_layers <= 0 || config.dim <= 0 || config.num_heads <= 0 ||
        config.vocab_size <= 0 || config.max_seq_len <= 0) {
        raise(errc::invalid_config, "all toy transformer dimensions must be positive");
    }
    if (config.dim % config.num_heads != 0) {
        raise(errc::invalid_config, "dim " + std::to_string(config.dim) +
                                        " not divisible by num_heads " +
                                        std::to_string(config.num_heads));
    }
}

void validate_edits(std::span<const ConceptEdit> edits, const ToyTransformerConfig& config) {
    for (const auto& edit : edits) {
        if (edit.layer < 0 || edit.layer >= config.num_layers) {
            raise(errc::layer_out_of_range,
                  "edit layer " + std::to_string(edit.layer) + " not in [0, " +
                      std::to_string(config.num_layers) + ")");
        }
        if (static_cast<int>(edit.direction.size()) != config.dim) {
            raise(errc::dimension_mismatch, "edit direction length " +
                                                std::to_string(edit.direction.size()) +
                                                " does not match model dim " +
                                                std::to_string(config.dim));
        }
        if (edit.magnitude < 0.0) {
            raise(errc::invalid_argument, "edit magnitude must be non-negative");
        }
    }
}

} // namespace

std::string ToyTransformerState::model_id() const {
    return "toy-L" + std::to_string(config.num_layers) + "-d" + std::to_string(config.dim) +
           "-h" + std::to_string(config.num_heads) + "-v" + std::to_string(config.vocab_size) +
           "-s" + std::to_string(config.seed);
}

ToyTransformerState init_toy_transformer(const ToyTransformerConfig& config) {
    validate_config(config);

    ToyTransformerState state;
    state.config = config;
    const int dim = config.dim;
    const int hidden = 4 * dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));

    // Fixed draw order; changing it changes every seeded fixture.
    Rng rng(config.seed);
    state.token_embedding = draw_matrix(rng, config.vocab_size, dim, scale);
    state.layers.resize(static_cast<std::size_t>(config.num_layers));
    for (auto& layer : state.layers) {
        layer.w_query = draw_matrix(rng, dim, dim, scale);
        layer.w_key = draw_matrix(rng, dim, dim, scale);
        layer.w_value = draw_matrix(rng, dim, dim, scale);
        layer.w_out = draw_matrix(rng, dim, dim, scale);
        layer.w_ff_in = draw_matrix(rng, dim, hidden, scale);
        layer.w_ff_out = draw_matrix(rng, hidden, dim, scale);
    }
    state.output_embedding = draw_matrix(rng, config.vocab_size, dim, scale);

    state.positional.resize(static_cast<std::size_t>(config.max_seq_len) * dim);
    for (int pos = 0; pos < config.max_seq_len; ++pos) {
        for (int i = 0; i < dim; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / dim;
            const double angle = pos / std::pow(10000.0, exponent);
            state.positional[static_cast<std::size_t>(pos) * dim + i] =
                static_cast<float>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    }

    state.vocab.reserve(static_cast<std::size_t>(config.vocab_size));
    for (int token = 0; token < config.vocab_size; ++token) {
        state.vocab.push_back("tok" + std::to_string(token));
    }
    return state;
}

ForwardResult forward(const ToyTransformerState& state,
                      std::span<const int> token_ids,
                      std::span<const ConceptEdit> edits) {
    const auto& config = state.config;
    const int dim = config.dim;
    const int m = static_cast<int>(token_ids.size());
    if (m == 0) {
        raise(errc::invalid_argument, "forward pass over an empty token sequence");
    }
    if (m > config.max_seq_len) {
        raise(errc::sequence_too_long, "sequence length " + std::to_string(m) +
                                           " exceeds max_seq_len " +
                                           std::to_string(config.max_seq_len));
    }
    for (int id : token_ids) {
        if (id < 0 || id >= config.vocab_size) {
            raise(errc::token_out_of_range, "token id " + std::to_string(id) +
                                                " not in [0, " +
                                                std::to_string(config.vocab_size) + ")");
        }
    }
    validate_edits(edits, config);

    // Residual stream, m x dim.
    std::vector<float> stream(static_cast<std::size_t>(m) * dim);
    for (int pos = 0; pos < m; ++pos) {
        const float* token_row =
            state.token_embedding.data() + static_cast<std::size_t>(token_ids[pos]) * dim;
        const float* pos_row = state.positional.data() + static_cast<std::size_t>(pos) * dim;
        float* out_row = stream.data() + static_cast<std::size_t>(pos) * dim;
        for (int i = 0; i < dim; ++i) {
            out_row[i] = token_row[i] + pos_row[i];
        }
    }

    const int num_heads = config.num_heads;
    const int head_dim = dim / num_heads;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const int hidden = 4 * dim;

    ForwardResult result;
    result.layer_last_token.reserve(static_cast<std::size_t>(config.num_layers));

    std::vector<float> normed, q, k, v, context, attn_out, ff_hidden, ff_out;
    std::vector<double> weights(static_cast<std::size_t>(m));

    for (int layer_index = 0; layer_index < config.num_layers; ++layer_index) {
        const auto& layer = state.layers[static_cast<std::size_t>(layer_index)];

        // Pre-norm causal self-attention.
        layer_norm_rows(stream, m, dim, normed);
        matmul(normed, m, dim, layer.w_query, dim, q);
        matmul(normed, m, dim, layer.w_key, dim, k);
        matmul(normed, m, dim, layer.w_value, dim, v);

        context.assign(static_cast<std::size_t>(m) * dim, 0.0f);
        for (int head = 0; head < num_heads; ++head) {
            const int offset = head * head_dim;
            for (int query_pos = 0; query_pos < m; ++query_pos) {
                const float* q_row = q.data() + static_cast<std::size_t>(query_pos) * dim + offset;
                double max_score = -1e300;
                for (int key_pos = 0; key_pos <= query_pos; ++key_pos) {
                    const float* k_row =
                        k.data() + static_cast<std::size_t>(key_pos) * dim + offset;
                    double score = 0.0;
                    for (int i = 0; i < head_dim; ++i) {
                        score += static_cast<double>(q_row[i]) * static_cast<double>(k_row[i]);
                    }
                    score *= attn_scale;
                    weights[static_cast<std::size_t>(key_pos)] = score;
                    if (score > max_score) max_score = score;
                }
                double denom = 0.0;
                for (int key_pos = 0; key_pos <= query_pos; ++key_pos) {
                    const double w = std::exp(weights[static_cast<std::size_t>(key_pos)] - max_score);
                    weights[static_cast<std::size_t>(key_pos)] = w;
                    denom += w;
                }
                float* ctx_row =
                    context.data() + static_cast<std::size_t>(query_pos) * dim + offset;
                for (int i = 0; i < head_dim; ++i) {
                    double acc = 0.0;
                    for (int key_pos = 0; key_pos <= query_pos; ++key_pos) {
                        acc += weights[static_cast<std::size_t>(key_pos)] *
                               static_cast<double>(
                                   v[static_cast<std::size_t>(key_pos) * dim + offset + i]);
                    }
                    ctx_row[i] = static_cast<float>(acc / denom);
                }
            }
        }
        matmul(context, m, dim, layer.w_out, dim, attn_out);
        for (std::size_t i = 0; i < stream.size(); ++i) {
            stream[i] += attn_out[i];
        }

        // Pre-norm feed-forward.
        layer_norm_rows(stream, m, dim, normed);
        matmul(normed, m, dim, layer.w_ff_in, hidden, ff_hidden);
        for (float& value : ff_hidden) {
            if (value < 0.0f) value = 0.0f;
        }
        matmul(ff_hidden, m, hidden, layer.w_ff_out, dim, ff_out);
        for (std::size_t i = 0; i < stream.size(); ++i) {
            stream[i] += ff_out[i];
        }

        // The stream is now H^layer. Edits apply here, to every position,
        // before the next block sees it. Zero magnitudes are skipped so they
        // stay bit-exact identities.
        for (const auto& edit : edits) {
            if (edit.layer != layer_index || edit.magnitude == 0.0) continue;
            const double signed_magnitude =
                edit.mode == EditMode::add ? edit.magnitude : -edit.magnitude;
            for (int pos = 0; pos < m; ++pos) {
                float* row = stream.data() + static_cast<std::size_t>(pos) * dim;
                for (int i = 0; i < dim; ++i) {
                    row[i] = static_cast<float>(
                        static_cast<double>(row[i]) +
                        signed_magnitude * static_cast<double>(edit.direction[i]));
                }
            }
        }

        const float* last_row = stream.data() + static_cast<std::size_t>(m - 1) * dim;
        result.layer_last_token.emplace_back(last_row, last_row + dim);
    }

    // Final norm, then project onto the output embedding.
    std::vector<float> last(stream.end() - dim, stream.end());
    std::vector<float> final_normed;
    layer_norm_rows(last, 1, dim, final_normed);
    result.logits.resize(static_cast<std::size_t>(config.vocab_size));
    for (int token = 0; token < config.vocab_size; ++token) {
        const float* row = state.output_embedding.data() + static_cast<std::size_t>(token) * dim;
        double acc = 0.0;
        for (int i = 0; i < dim; ++i) {
            acc += static_cast<double>(row[i]) * static_cast<double>(final_normed[i]);
        }
        result.logits[static_cast<std::size_t>(token)] = static_cast<float>(acc);
    }
    return result;
}

std::vector<ConceptEdit> apply_mitigation(const CalibrationProfile& profile) {
    profile.validate();
    std::vector<ConceptEdit> edits;
    edits.reserve(2);
    edits.push_back(ConceptEdit{profile.toxic_layer, profile.toxic_direction.direction,
                                profile.delta_toxic, EditMode::add});
    edits.push_back(ConceptEdit{profile.jailbreak_layer, profile.jailbreak_direction.direction,
                                profile.delta_jailbreak, EditMode::subtract});
    return edits;
}

std::vector<int> generate_greedy(const ToyTransformerState& state,
                                 std::span<const int> prompt_ids,
                                 int max_new_tokens,
                                 std::span<const ConceptEdit> edits) {
    if (max_new_tokens < 0) {
        raise(errc::invalid_argument, "max_new_tokens must be non-negative");
    }
    if (static_cast<int>(prompt_ids.size()) + max_new_tokens > state.config.max_seq_len) {
        raise(errc::sequence_too_long,
              "prompt plus " + std::to_string(max_new_tokens) + " new tokens exceeds max_seq_len " +
                  std::to_string(state.config.max_seq_len));
    }
    std::vector<int> sequence(prompt_ids.begin(), prompt_ids.end());
    for (int step = 0; step < max_new_tokens; ++step) {
        const auto result = forward(state, sequence, edits);
        int best = 0;
        for (int token = 1; token < state.config.vocab_size; ++token) {
            if (result.logits[static_cast<std::size_t>(token)] >
                result.logits[static_cast<std::size_t>(best)]) {
                best = token;
            }
        }
        sequence.push_back(best);
    }
    return sequence;
}

EmbeddingDataset dump_embeddings(const ToyTransformerState& state,
                                 std::span<const PromptSpec> prompts) {
    EmbeddingDataset dataset;
    dataset.model_id = state.model_id();
    dataset.num_layers = state.config.num_layers;
    dataset.dim = state.config.dim;
    dataset.records.reserve(prompts.size());
    for (const auto& prompt : prompts) {
        const auto result = forward(state, prompt.token_ids, {});
        PromptEmbeddingRecord record;
        record.prompt_id = prompt.prompt_id;
        record.category = prompt.category;
        record.attack_tag = prompt.attack_tag;
        record.layers = result.layer_last_token;
        dataset.records.push_back(std::move(record));
    }
    dataset.validate();
    return dataset;
}

} // namespace conceptguard
