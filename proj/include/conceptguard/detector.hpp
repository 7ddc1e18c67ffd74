#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "conceptguard/calibration.hpp"
#include "conceptguard/types.hpp"

namespace conceptguard {

struct DetectionVerdict {
    std::string prompt_id;
    double toxic_score = 0.0;     // s_t in [-1, 1]
    double jailbreak_score = 0.0; // s_j in [-1, 1]
    bool toxic_active = false;    // s_t >= T_t
    bool jailbreak_active = false;
    bool is_jailbreak = false; // toxic_active && jailbreak_active
};

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

struct DetectionMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    ConfusionCounts counts;
};

// cos(e_x - anchor, direction) through the single-row rank-1 path. A
// numerically zero difference scores 0 ("not activated") instead of erroring:
// an input identical to the anchor mean must not take down a serving path.
double concept_activation_score(const EmbeddingVector& embedding,
                                const EmbeddingVector& anchor,
                                const EmbeddingVector& direction);

double toxic_score(const PromptEmbeddingRecord& record, const CalibrationProfile& profile);
double jailbreak_score(const PromptEmbeddingRecord& record, const CalibrationProfile& profile);

// Threshold comparisons are inclusive (score >= T).
DetectionVerdict detect(const PromptEmbeddingRecord& record, const CalibrationProfile& profile);

// Order-preserving; the first incompatible record aborts with its prompt id
// in the error message.
std::vector<DetectionVerdict> detect_batch(const EmbeddingDataset& dataset,
                                           const CalibrationProfile& profile);

// Counting with the usual zero-division policy: precision/recall are 0 when
// undefined, F1 is 0 when precision + recall is 0. Jailbreak is the positive
// class.
DetectionMetrics metrics_from_predictions(std::span<const std::uint8_t> predicted,
                                          std::span<const std::uint8_t> labels);
DetectionMetrics metrics(std::span<const DetectionVerdict> verdicts,
                         std::span<const std::uint8_t> labels);

// Comparison detector: margin between similarity to the harmful anchor and
// similarity to the benign anchor at toxic_layer, thresholded.
double baseline_margin(const EmbeddingVector& embedding,
                       const EmbeddingVector& anchor_harmful,
                       const EmbeddingVector& anchor_benign);
bool baseline_embedding_similarity(const PromptEmbeddingRecord& record,
                                   const CalibrationProfile& profile);

} // namespace conceptguard
