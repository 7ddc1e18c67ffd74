#include "conceptguard/detector.hpp"

#include "conceptguard/rank1.hpp"
#include "conceptguard/vector_ops.hpp"

namespace conceptguard {

namespace {

const EmbeddingVector& layer_of(const PromptEmbeddingRecord& record, int layer,
                                const CalibrationProfile& profile) {
    if (layer < 0 || layer >= static_cast<int>(record.layers.size())) {
        raise(errc::dimension_mismatch, "record '" + record.prompt_id + "' has " +
                                            std::to_string(record.layers.size()) +
                                            " layers, profile needs layer " +
                                            std::to_string(layer));
    }
    const auto& embedding = record.layers[static_cast<std::size_t>(layer)];
    if (static_cast<int>(embedding.size()) != profile.dim) {
        raise(errc::dimension_mismatch, "record '" + record.prompt_id + "' has dim " +
                                            std::to_string(embedding.size()) +
                                            ", profile has dim " + std::to_string(profile.dim));
    }
    return embedding;
}

} // namespace

double concept_activation_score(const EmbeddingVector& embedding,
                                const EmbeddingVector& anchor,
                                const EmbeddingVector& direction) {
    const EmbeddingVector difference = subtract(embedding, anchor);
    if (norm(difference) < kZeroNormEpsilon) {
        return 0.0; // identical to the anchor mean: not activated
    }
    const std::vector<EmbeddingVector> single_row{difference};
    const EmbeddingVector prompt_direction = rank1_principal_direction(single_row);
    return cosine_similarity(prompt_direction, direction);
}

double toxic_score(const PromptEmbeddingRecord& record, const CalibrationProfile& profile) {
    return concept_activation_score(layer_of(record, profile.toxic_layer, profile),
                                    profile.anchor_benign, profile.toxic_direction.direction);
}

double jailbreak_score(const PromptEmbeddingRecord& record, const CalibrationProfile& profile) {
    return concept_activation_score(layer_of(record, profile.jailbreak_layer, profile),
                                    profile.anchor_harmful,
                                    profile.jailbreak_direction.direction);
}

DetectionVerdict detect(const PromptEmbeddingRecord& record, const CalibrationProfile& profile) {
    DetectionVerdict verdict;
    verdict.prompt_id = record.prompt_id;
    verdict.toxic_score = toxic_score(record, profile);
    verdict.jailbreak_score = jailbreak_score(record, profile);
    verdict.toxic_active = verdict.toxic_score >= profile.toxic_threshold;
    verdict.jailbreak_active = verdict.jailbreak_score >= profile.jailbreak_threshold;
    verdict.is_jailbreak = verdict.toxic_active && verdict.jailbreak_active;
    return verdict;
}

std::vector<DetectionVerdict> detect_batch(const EmbeddingDataset& dataset,
                                           const CalibrationProfile& profile) {
    std::vector<DetectionVerdict> verdicts;
    verdicts.reserve(dataset.records.size());
    for (const auto& record : dataset.records) {
        verdicts.push_back(detect(record, profile));
    }
    return verdicts;
}

DetectionMetrics metrics_from_predictions(std::span<const std::uint8_t> predicted,
                                          std::span<const std::uint8_t> labels) {
    if (predicted.size() != labels.size()) {
        raise(errc::length_mismatch, "predictions and labels differ in length: " +
                                         std::to_string(predicted.size()) + " vs " +
                                         std::to_string(labels.size()));
    }
    DetectionMetrics result;
    auto& counts = result.counts;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool positive = predicted[i] != 0;
        const bool truth = labels[i] != 0;
        if (positive && truth) ++counts.tp;
        else if (positive && !truth) ++counts.fp;
        else if (!positive && truth) ++counts.fn;
        else ++counts.tn;
    }
    const double total = static_cast<double>(counts.total());
    result.accuracy = total > 0.0 ? static_cast<double>(counts.tp + counts.tn) / total : 0.0;
    result.precision = (counts.tp + counts.fp) > 0
                           ? static_cast<double>(counts.tp) /
                                 static_cast<double>(counts.tp + counts.fp)
                           : 0.0;
    result.recall = (counts.tp + counts.fn) > 0
                        ? static_cast<double>(counts.tp) /
                              static_cast<double>(counts.tp + counts.fn)
                        : 0.0;
    result.f1 = (result.precision + result.recall) > 0.0
                    ? 2.0 * result.precision * result.recall / (result.precision + result.recall)
                    : 0.0;
    return result;
}

DetectionMetrics metrics(std::span<const DetectionVerdict> verdicts,
                         std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> predicted;
    predicted.reserve(verdicts.size());
    for (const auto& verdict : verdicts) {
        predicted.push_back(verdict.is_jailbreak ? 1 : 0);
    }
    return metrics_from_predictions(predicted, labels);
}

double baseline_margin(const EmbeddingVector& embedding,
                       const EmbeddingVector& anchor_harmful,
                       const EmbeddingVector& anchor_benign) {
    const auto safe_cosine = [&](const EmbeddingVector& anchor) {
        if (norm(embedding) < kZeroNormEpsilon || norm(anchor) < kZeroNormEpsilon) {
            return 0.0;
        }
        return cosine_similarity(embedding, anchor);
    };
    return safe_cosine(anchor_harmful) - safe_cosine(anchor_benign);
}

bool baseline_embedding_similarity(const PromptEmbeddingRecord& record,
                                   const CalibrationProfile& profile) {
    const auto& embedding = layer_of(record, profile.toxic_layer, profile);
    const double margin =
        baseline_margin(embedding, profile.baseline_anchor_harmful, profile.anchor_benign);
    return margin >= profile.baseline_threshold;
}

} // namespace conceptguard
