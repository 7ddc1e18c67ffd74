#include "conceptguard/concept_extraction.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "conceptguard/rank1.hpp"
#include "conceptguard/rng.hpp"
#include "conceptguard/vector_ops.hpp"

namespace conceptguard {

namespace {

void check_record_shapes(std::span<const PromptEmbeddingRecord> records, const char* side,
                         std::size_t expected_layers, std::size_t expected_dim) {
    for (const auto& record : records) {
        if (record.layers.size() != expected_layers) {
            raise(errc::dimension_mismatch, std::string(side) + " record '" + record.prompt_id +
                                                "' has a different layer count");
        }
        for (const auto& layer : record.layers) {
            if (layer.size() != expected_dim) {
                raise(errc::dimension_mismatch, std::string(side) + " record '" +
                                                    record.prompt_id +
                                                    "' has a different embedding size");
            }
        }
        if (record.category != records.front().category) {
            raise(errc::invalid_argument, std::string(side) + " side mixes categories ('" +
                                              record.prompt_id + "')");
        }
    }
}

std::vector<std::size_t> shuffled_indices(std::size_t count, Rng& rng) {
    std::vector<std::size_t> indices(count);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(indices[i - 1], indices[j]);
    }
    return indices;
}

} // namespace

PromptCategory positive_category(ConceptKind kind) {
    switch (kind) {
    case ConceptKind::toxic_harmful: return PromptCategory::harmful;
    case ConceptKind::toxic_jailbreak: return PromptCategory::jailbreak;
    case ConceptKind::jailbreak: return PromptCategory::jailbreak;
    }
    return PromptCategory::harmful;
}

PromptCategory negative_category(ConceptKind kind) {
    switch (kind) {
    case ConceptKind::toxic_harmful: return PromptCategory::benign;
    case ConceptKind::toxic_jailbreak: return PromptCategory::benign;
    case ConceptKind::jailbreak: return PromptCategory::harmful;
    }
    return PromptCategory::benign;
}

int CounterfactualPairSet::num_layers() const {
    return positive.empty() ? 0 : static_cast<int>(positive.front().layers.size());
}

int CounterfactualPairSet::dim() const {
    if (positive.empty() || positive.front().layers.empty()) return 0;
    return static_cast<int>(positive.front().layers.front().size());
}

CounterfactualPairSet form_pairs(std::span<const PromptEmbeddingRecord> positive,
                                 std::span<const PromptEmbeddingRecord> negative,
                                 std::uint64_t seed) {
    if (positive.empty()) raise(errc::empty_category, "positive side is empty");
    if (negative.empty()) raise(errc::empty_category, "negative side is empty");
    if (positive.front().layers.empty()) {
        raise(errc::invalid_argument, "records carry no layers");
    }
    const std::size_t num_layers = positive.front().layers.size();
    const std::size_t dim = positive.front().layers.front().size();
    check_record_shapes(positive, "positive", num_layers, dim);
    check_record_shapes(negative, "negative", num_layers, dim);
    if (positive.front().category == negative.front().category) {
        raise(errc::invalid_argument, "positive and negative sides must be distinct categories");
    }

    CounterfactualPairSet pairs;
    pairs.positive.assign(positive.begin(), positive.end());
    pairs.negative.assign(negative.begin(), negative.end());

    Rng rng(seed);
    const auto pos_order = shuffled_indices(positive.size(), rng);
    const auto neg_order = shuffled_indices(negative.size(), rng);
    const std::size_t pair_count = std::min(positive.size(), negative.size());
    pairs.pairing.reserve(pair_count);
    for (std::size_t i = 0; i < pair_count; ++i) {
        pairs.pairing.emplace_back(pos_order[i], neg_order[i]);
    }
    return pairs;
}

std::vector<EmbeddingVector> difference_matrix(const CounterfactualPairSet& pairs, int layer) {
    if (layer < 0 || layer >= pairs.num_layers()) {
        raise(errc::layer_out_of_range, "layer " + std::to_string(layer) + " not in [0, " +
                                            std::to_string(pairs.num_layers()) + ")");
    }
    std::vector<EmbeddingVector> rows;
    rows.reserve(pairs.pairing.size());
    for (const auto& [pos_index, neg_index] : pairs.pairing) {
        rows.push_back(subtract(pairs.positive[pos_index].layers[layer],
                                pairs.negative[neg_index].layers[layer]));
    }
    return rows;
}

ConceptSubspace extract_concept(const CounterfactualPairSet& pairs, int layer) {
    const auto rows = difference_matrix(pairs, layer);
    EmbeddingVector direction = rank1_principal_direction(rows);

    // Orient toward the positive class: mean projection of the difference
    // rows onto the direction must be non-negative.
    double mean_projection = 0.0;
    for (const auto& row : rows) {
        mean_projection += dot(row, direction);
    }
    mean_projection /= static_cast<double>(rows.size());
    if (mean_projection < 0.0) {
        for (float& value : direction) value = -value;
    }
    return ConceptSubspace{layer, std::move(direction), SignAnchor::positive_class_mean};
}

std::vector<TokenProjection> map_to_tokens(const ConceptSubspace& subspace,
                                           std::span<const float> output_embedding,
                                           std::span<const std::string> vocab,
                                           int k) {
    const std::size_t dim = subspace.direction.size();
    if (dim == 0) raise(errc::invalid_argument, "empty concept direction");
    if (vocab.empty() || output_embedding.size() != vocab.size() * dim) {
        raise(errc::dimension_mismatch,
              "output embedding is not |V| x d for |V|=" + std::to_string(vocab.size()) +
                  ", d=" + std::to_string(dim));
    }
    if (k < 0 || static_cast<std::size_t>(k) > vocab.size()) {
        raise(errc::dimension_mismatch,
              "k=" + std::to_string(k) + " exceeds vocabulary size " + std::to_string(vocab.size()));
    }

    std::vector<TokenProjection> scored;
    scored.reserve(vocab.size());
    for (std::size_t token = 0; token < vocab.size(); ++token) {
        const std::span<const float> row = output_embedding.subspan(token * dim, dim);
        scored.push_back(TokenProjection{static_cast<int>(token), vocab[token],
                                         dot(row, subspace.direction)});
    }
    const auto better = [](const TokenProjection& a, const TokenProjection& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.token_id < b.token_id;
    };
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
    scored.resize(static_cast<std::size_t>(k));
    return scored;
}

VocabProjection load_vocab_projection(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(errc::io_error, "cannot open '" + path + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line)) {
        raise(errc::format_error, path + ": empty vocab file");
    }
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("vocab") ||
        !header.contains("dim")) {
        raise(errc::format_error, path + ":1: expected a JSON header with 'vocab' and 'dim'");
    }
    const int vocab_size = header["vocab"].get<int>();
    const int dim = header["dim"].get<int>();
    if (vocab_size <= 0 || dim <= 0) {
        raise(errc::format_error, path + ":1: vocab and dim must be positive");
    }

    VocabProjection projection;
    projection.dim = dim;
    projection.tokens.reserve(static_cast<std::size_t>(vocab_size));
    projection.output_embedding.reserve(static_cast<std::size_t>(vocab_size) * dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) {
            raise(errc::format_error, path + ":" + std::to_string(line_no) + ": missing token text");
        }
        for (int i = 0; i < dim; ++i) {
            double value = 0.0;
            if (!(fields >> value)) {
                raise(errc::format_error, path + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(dim) + " values after the token text");
            }
            projection.output_embedding.push_back(static_cast<float>(value));
        }
        double extra = 0.0;
        if (fields >> extra) {
            raise(errc::format_error, path + ":" + std::to_string(line_no) + ": more than " +
                                          std::to_string(dim) + " values");
        }
        projection.tokens.push_back(std::move(token));
    }
    if (static_cast<int>(projection.tokens.size()) != vocab_size) {
        raise(errc::format_error, path + ": header says " + std::to_string(vocab_size) +
                                      " tokens, found " + std::to_string(projection.tokens.size()));
    }
    return projection;
}

} // namespace conceptguard
