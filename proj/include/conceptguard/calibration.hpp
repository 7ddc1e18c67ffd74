#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "conceptguard/concept_extraction.hpp"
#include "conceptguard/types.hpp"

namespace conceptguard {

// The deployable defense state. Everything the detector and the steering
// edits need, self-contained and immutable once built.
struct CalibrationProfile {
    std::string model_id;
    int num_layers = 0;
    int dim = 0;
    int n_calib = 0;
    std::string attack_tag; // empty = pooled / untagged calibration

    int toxic_layer = 0;     // l_t
    int jailbreak_layer = 0; // l_j

    EmbeddingVector anchor_benign;  // mean benign embedding at toxic_layer
    EmbeddingVector anchor_harmful; // mean harmful embedding at jailbreak_layer

    ConceptSubspace toxic_direction;     // v_t at toxic_layer
    ConceptSubspace jailbreak_direction; // v_j at jailbreak_layer

    double toxic_threshold = 0.0;     // T_t
    double jailbreak_threshold = 0.0; // T_j

    double delta_toxic = 0.0;     // enhancement magnitude, >= 0
    double delta_jailbreak = 0.0; // weakening magnitude, >= 0

    // Direct-embedding-similarity comparison detector: harmful anchor taken
    // at toxic_layer plus a threshold on the anchor-similarity margin.
    EmbeddingVector baseline_anchor_harmful;
    double baseline_threshold = 0.0;

    void validate() const;
};

struct ScoredSample {
    std::string prompt_id;
    double score = 0.0;
    bool label = false; // true = positive class
};

struct LayerSelection {
    int layer = 0;
    std::vector<double> scores; // S^l for every layer
};

// Per-layer mean cross-class cosine over the pairing; returns the argmin
// layer, ties broken by the smallest index.
LayerSelection select_critical_layer(const CounterfactualPairSet& pairs);
LayerSelection select_critical_layer(std::span<const PromptEmbeddingRecord> positive,
                                     std::span<const PromptEmbeddingRecord> negative,
                                     std::uint64_t pairing_seed);

// Mean embedding of one category at a layer.
EmbeddingVector compute_anchor(std::span<const PromptEmbeddingRecord> records, int layer);

struct YoudenResult {
    double threshold = 0.0;
    double j_stat = 0.0; // TPR - FPR at the threshold
};

// Threshold maximizing Youden's J over the candidate set: midpoints between
// adjacent distinct scores plus below-min / above-max sentinels. The rule is
// score >= T => positive; ties on J resolve to the smallest T.
YoudenResult youden_threshold(std::span<const ScoredSample> samples);

// Mean projection difference onto the concept direction at its layer:
// mean_pos<e, v> - mean_neg<e, v>.
double scaling_factor(std::span<const PromptEmbeddingRecord> positive,
                      std::span<const PromptEmbeddingRecord> negative,
                      const ConceptSubspace& subspace);

// Full calibration: critical layers, anchors, concept directions, detection
// thresholds (computed through the detector's own scoring path), scaling
// factors, and the comparison-baseline anchor/threshold. Negative scaling
// factors are clamped to zero with a note appended to `warnings`.
CalibrationProfile build_profile(std::span<const PromptEmbeddingRecord> benign,
                                 std::span<const PromptEmbeddingRecord> harmful,
                                 std::span<const PromptEmbeddingRecord> jailbreak,
                                 std::uint64_t seed,
                                 const std::string& model_id = {},
                                 std::vector<std::string>* warnings = nullptr);

// Profile persistence: one self-describing JSON line, floats in shortest
// round-trip form. Read(write(p)) == p exactly.
CalibrationProfile read_profile(const std::string& path);
void write_profile(const CalibrationProfile& profile, const std::string& path);
std::string profile_to_string(const CalibrationProfile& profile);
CalibrationProfile profile_from_string(const std::string& text, const std::string& origin);

} // namespace conceptguard
