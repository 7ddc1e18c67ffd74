#include "conceptguard/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "conceptguard/detector.hpp"
#include "conceptguard/dump_io.hpp"
#include "conceptguard/rng.hpp"
#include "conceptguard/vector_ops.hpp"

namespace conceptguard {

void CalibrationProfile::validate() const {
    if (num_layers <= 0 || dim <= 0) {
        raise(errc::invalid_argument, "profile dimensions must be positive");
    }
    if (toxic_layer < 0 || toxic_layer >= num_layers || jailbreak_layer < 0 ||
        jailbreak_layer >= num_layers) {
        raise(errc::layer_out_of_range, "profile critical layers out of range");
    }
    if (toxic_direction.layer != toxic_layer || jailbreak_direction.layer != jailbreak_layer) {
        raise(errc::invalid_argument, "concept direction layers disagree with critical layers");
    }
    const auto check_dim = [&](const EmbeddingVector& vec, const char* name) {
        if (static_cast<int>(vec.size()) != dim) {
            raise(errc::dimension_mismatch, std::string("profile vector '") + name +
                                                "' has length " + std::to_string(vec.size()) +
                                                ", expected " + std::to_string(dim));
        }
    };
    check_dim(anchor_benign, "anchor_benign");
    check_dim(anchor_harmful, "anchor_harmful");
    check_dim(toxic_direction.direction, "toxic_direction");
    check_dim(jailbreak_direction.direction, "jailbreak_direction");
    check_dim(baseline_anchor_harmful, "baseline_anchor_harmful");
    const auto check_unit = [&](const EmbeddingVector& vec, const char* name) {
        if (std::fabs(norm(vec) - 1.0) > 1e-6) {
            raise(errc::invalid_argument, std::string("profile direction '") + name +
                                              "' is not unit norm");
        }
    };
    check_unit(toxic_direction.direction, "toxic_direction");
    check_unit(jailbreak_direction.direction, "jailbreak_direction");
    if (toxic_threshold < -1.0 || toxic_threshold > 1.0 || jailbreak_threshold < -1.0 ||
        jailbreak_threshold > 1.0) {
        raise(errc::invalid_argument, "profile thresholds must lie in [-1, 1]");
    }
    if (delta_toxic < 0.0 || delta_jailbreak < 0.0) {
        raise(errc::invalid_argument, "profile scaling factors must be non-negative");
    }
}

LayerSelection select_critical_layer(const CounterfactualPairSet& pairs) {
    const int num_layers = pairs.num_layers();
    if (num_layers == 0) raise(errc::empty_category, "pair set carries no layers");

    LayerSelection selection;
    selection.scores.resize(static_cast<std::size_t>(num_layers));
    for (int layer = 0; layer < num_layers; ++layer) {
        double acc = 0.0;
        for (const auto& [pos_index, neg_index] : pairs.pairing) {
            acc += cosine_similarity(pairs.positive[pos_index].layers[layer],
                                     pairs.negative[neg_index].layers[layer]);
        }
        selection.scores[static_cast<std::size_t>(layer)] =
            acc / static_cast<double>(pairs.pairing.size());
    }
    selection.layer = 0;
    for (int layer = 1; layer < num_layers; ++layer) {
        if (selection.scores[static_cast<std::size_t>(layer)] <
            selection.scores[static_cast<std::size_t>(selection.layer)]) {
            selection.layer = layer;
        }
    }
    return selection;
}

LayerSelection select_critical_layer(std::span<const PromptEmbeddingRecord> positive,
                                     std::span<const PromptEmbeddingRecord> negative,
                                     std::uint64_t pairing_seed) {
    return select_critical_layer(form_pairs(positive, negative, pairing_seed));
}

EmbeddingVector compute_anchor(std::span<const PromptEmbeddingRecord> records, int layer) {
    if (records.empty()) raise(errc::empty_category, "anchor over an empty category");
    std::vector<EmbeddingVector> layer_vectors;
    layer_vectors.reserve(records.size());
    for (const auto& record : records) {
        if (layer < 0 || layer >= static_cast<int>(record.layers.size())) {
            raise(errc::layer_out_of_range,
                  "record '" + record.prompt_id + "' has no layer " + std::to_string(layer));
        }
        layer_vectors.push_back(record.layers[static_cast<std::size_t>(layer)]);
    }
    return mean_embedding(layer_vectors);
}

YoudenResult youden_threshold(std::span<const ScoredSample> samples) {
    std::vector<double> positives;
    std::vector<double> negatives;
    std::vector<double> all_scores;
    all_scores.reserve(samples.size());
    for (const auto& sample : samples) {
        if (!std::isfinite(sample.score)) {
            raise(errc::invalid_argument, "non-finite score for '" + sample.prompt_id + "'");
        }
        (sample.label ? positives : negatives).push_back(sample.score);
        all_scores.push_back(sample.score);
    }
    if (positives.empty() || negatives.empty()) {
        raise(errc::one_class_only, "threshold calibration needs both classes");
    }

    std::sort(all_scores.begin(), all_scores.end());
    all_scores.erase(std::unique(all_scores.begin(), all_scores.end()), all_scores.end());

    // Candidates in ascending order: below-min sentinel, midpoints between
    // adjacent distinct scores, above-max sentinel.
    std::vector<double> candidates;
    candidates.reserve(all_scores.size() + 1);
    candidates.push_back(all_scores.front() - 1.0);
    for (std::size_t i = 0; i + 1 < all_scores.size(); ++i) {
        candidates.push_back((all_scores[i] + all_scores[i + 1]) / 2.0);
    }
    candidates.push_back(all_scores.back() + 1.0);

    std::sort(positives.begin(), positives.end());
    std::sort(negatives.begin(), negatives.end());
    const double positive_count = static_cast<double>(positives.size());
    const double negative_count = static_cast<double>(negatives.size());

    YoudenResult best;
    bool have_best = false;
    for (const double threshold : candidates) {
        // score >= threshold => positive
        const auto pos_below =
            std::lower_bound(positives.begin(), positives.end(), threshold) - positives.begin();
        const auto neg_below =
            std::lower_bound(negatives.begin(), negatives.end(), threshold) - negatives.begin();
        const double tpr = (positive_count - static_cast<double>(pos_below)) / positive_count;
        const double fpr = (negative_count - static_cast<double>(neg_below)) / negative_count;
        const double j_stat = tpr - fpr;
        if (!have_best || j_stat > best.j_stat) {
            best = YoudenResult{threshold, j_stat};
            have_best = true;
        }
    }
    return best;
}

double scaling_factor(std::span<const PromptEmbeddingRecord> positive,
                      std::span<const PromptEmbeddingRecord> negative,
                      const ConceptSubspace& subspace) {
    if (positive.empty() || negative.empty()) {
        raise(errc::empty_category, "scaling factor over an empty category");
    }
    const auto mean_projection = [&](std::span<const PromptEmbeddingRecord> records) {
        double acc = 0.0;
        for (const auto& record : records) {
            if (subspace.layer < 0 || subspace.layer >= static_cast<int>(record.layers.size())) {
                raise(errc::layer_out_of_range, "record '" + record.prompt_id + "' has no layer " +
                                                    std::to_string(subspace.layer));
            }
            acc += dot(record.layers[static_cast<std::size_t>(subspace.layer)],
                       subspace.direction);
        }
        return acc / static_cast<double>(records.size());
    };
    return mean_projection(positive) - mean_projection(negative);
}

CalibrationProfile build_profile(std::span<const PromptEmbeddingRecord> benign,
                                 std::span<const PromptEmbeddingRecord> harmful,
                                 std::span<const PromptEmbeddingRecord> jailbreak,
                                 std::uint64_t seed,
                                 const std::string& model_id,
                                 std::vector<std::string>* warnings) {
    if (benign.empty()) raise(errc::empty_category, "benign calibration set is empty");
    if (harmful.empty()) raise(errc::empty_category, "harmful calibration set is empty");
    if (jailbreak.empty()) raise(errc::empty_category, "jailbreak calibration set is empty");

    std::unordered_set<std::string> ids;
    for (const auto* set : {&benign, &harmful, &jailbreak}) {
        for (const auto& record : *set) {
            if (!ids.insert(record.prompt_id).second) {
                raise(errc::duplicate_id,
                      "prompt id '" + record.prompt_id + "' appears in more than one set");
            }
        }
    }

    CalibrationProfile profile;
    profile.model_id = model_id;
    profile.num_layers = static_cast<int>(benign.front().layers.size());
    profile.dim = benign.front().layers.empty()
                      ? 0
                      : static_cast<int>(benign.front().layers.front().size());
    profile.n_calib = static_cast<int>(std::min({benign.size(), harmful.size(), jailbreak.size()}));

    // One pairing per class pair, shared between layer selection and
    // extraction.
    const auto toxic_pairs = form_pairs(harmful, benign, derive_seed(seed, 0));
    const auto jailbreak_pairs = form_pairs(jailbreak, harmful, derive_seed(seed, 1));

    const auto toxic_selection = select_critical_layer(toxic_pairs);
    const auto jailbreak_selection = select_critical_layer(jailbreak_pairs);
    profile.toxic_layer = toxic_selection.layer;
    profile.jailbreak_layer = jailbreak_selection.layer;

    profile.anchor_benign = compute_anchor(benign, profile.toxic_layer);
    profile.anchor_harmful = compute_anchor(harmful, profile.jailbreak_layer);

    profile.toxic_direction = extract_concept(toxic_pairs, profile.toxic_layer);
    profile.jailbreak_direction = extract_concept(jailbreak_pairs, profile.jailbreak_layer);

    // Thresholds are calibrated on the detector's own scoring path.
    std::vector<ScoredSample> toxic_samples;
    toxic_samples.reserve(harmful.size() + benign.size());
    for (const auto& record : harmful) {
        toxic_samples.push_back(
            {record.prompt_id,
             concept_activation_score(record.layers[static_cast<std::size_t>(profile.toxic_layer)],
                                      profile.anchor_benign, profile.toxic_direction.direction),
             true});
    }
    for (const auto& record : benign) {
        toxic_samples.push_back(
            {record.prompt_id,
             concept_activation_score(record.layers[static_cast<std::size_t>(profile.toxic_layer)],
                                      profile.anchor_benign, profile.toxic_direction.direction),
             false});
    }
    profile.toxic_threshold = std::clamp(youden_threshold(toxic_samples).threshold, -1.0, 1.0);

    std::vector<ScoredSample> jailbreak_samples;
    jailbreak_samples.reserve(jailbreak.size() + harmful.size());
    for (const auto& record : jailbreak) {
        jailbreak_samples.push_back(
            {record.prompt_id,
             concept_activation_score(
                 record.layers[static_cast<std::size_t>(profile.jailbreak_layer)],
                 profile.anchor_harmful, profile.jailbreak_direction.direction),
             true});
    }
    for (const auto& record : harmful) {
        jailbreak_samples.push_back(
            {record.prompt_id,
             concept_activation_score(
                 record.layers[static_cast<std::size_t>(profile.jailbreak_layer)],
                 profile.anchor_harmful, profile.jailbreak_direction.direction),
             false});
    }
    profile.jailbreak_threshold =
        std::clamp(youden_threshold(jailbreak_samples).threshold, -1.0, 1.0);

    const auto clamp_delta = [&](double value, const char* name) {
        if (value < 0.0) {
            if (warnings) {
                std::string note = std::string(name) + " came out negative (";
                append_shortest(note, value);
                note += "); clamped to 0";
                warnings->push_back(std::move(note));
            }
            return 0.0;
        }
        return value;
    };
    profile.delta_toxic =
        clamp_delta(scaling_factor(harmful, benign, profile.toxic_direction), "delta_toxic");
    profile.delta_jailbreak = clamp_delta(
        scaling_factor(jailbreak, harmful, profile.jailbreak_direction), "delta_jailbreak");

    // Comparison baseline: harmful anchor at the toxic layer, margin
    // threshold calibrated on jailbreak (positive) vs benign (negative).
    profile.baseline_anchor_harmful = compute_anchor(harmful, profile.toxic_layer);
    std::vector<ScoredSample> margin_samples;
    margin_samples.reserve(jailbreak.size() + benign.size());
    for (const auto& record : jailbreak) {
        margin_samples.push_back(
            {record.prompt_id,
             baseline_margin(record.layers[static_cast<std::size_t>(profile.toxic_layer)],
                             profile.baseline_anchor_harmful, profile.anchor_benign),
             true});
    }
    for (const auto& record : benign) {
        margin_samples.push_back(
            {record.prompt_id,
             baseline_margin(record.layers[static_cast<std::size_t>(profile.toxic_layer)],
                             profile.baseline_anchor_harmful, profile.anchor_benign),
             false});
    }
    profile.baseline_threshold = youden_threshold(margin_samples).threshold;

    // Attack tag is carried when the jailbreak calibration set is uniformly
    // tagged; mixed or untagged sets produce a pooled profile.
    std::set<std::string> tags;
    for (const auto& record : jailbreak) tags.insert(record.attack_tag);
    if (tags.size() == 1 && !tags.begin()->empty()) {
        profile.attack_tag = *tags.begin();
    }

    profile.validate();
    return profile;
}

namespace {

using nlohmann::json;

void append_float_array(std::string& out, const EmbeddingVector& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        append_shortest(out, values[i]);
    }
    out += ']';
}

EmbeddingVector read_float_array(const json& value, const char* name, int expected_dim,
                                 const std::string& origin) {
    if (!value.is_array() || static_cast<int>(value.size()) != expected_dim) {
        raise(errc::format_error, origin + ": profile field '" + name + "' must be an array of " +
                                      std::to_string(expected_dim) + " numbers");
    }
    EmbeddingVector result;
    result.reserve(value.size());
    for (const json& entry : value) {
        if (!entry.is_number()) {
            raise(errc::format_error, origin + ": non-numeric value in profile field '" +
                                          std::string(name) + "'");
        }
        result.push_back(static_cast<float>(entry.get<double>()));
    }
    return result;
}

} // namespace

std::string profile_to_string(const CalibrationProfile& profile) {
    profile.validate();
    std::string out = "{\"format\":\"conceptguard-profile-v1\",\"model_id\":";
    append_json_string(out, profile.model_id);
    out += ",\"layers\":" + std::to_string(profile.num_layers);
    out += ",\"dim\":" + std::to_string(profile.dim);
    out += ",\"n_calib\":" + std::to_string(profile.n_calib);
    if (!profile.attack_tag.empty()) {
        out += ",\"attack\":";
        append_json_string(out, profile.attack_tag);
    }
    out += ",\"l_t\":" + std::to_string(profile.toxic_layer);
    out += ",\"l_j\":" + std::to_string(profile.jailbreak_layer);
    out += ",\"T_t\":";
    append_shortest(out, profile.toxic_threshold);
    out += ",\"T_j\":";
    append_shortest(out, profile.jailbreak_threshold);
    out += ",\"delta_t\":";
    append_shortest(out, profile.delta_toxic);
    out += ",\"delta_j\":";
    append_shortest(out, profile.delta_jailbreak);
    out += ",\"baseline_T\":";
    append_shortest(out, profile.baseline_threshold);
    out += ",\"e_b\":";
    append_float_array(out, profile.anchor_benign);
    out += ",\"e_h\":";
    append_float_array(out, profile.anchor_harmful);
    out += ",\"v_t\":";
    append_float_array(out, profile.toxic_direction.direction);
    out += ",\"v_j\":";
    append_float_array(out, profile.jailbreak_direction.direction);
    out += ",\"baseline_e_h\":";
    append_float_array(out, profile.baseline_anchor_harmful);
    out += "}\n";
    return out;
}

CalibrationProfile profile_from_string(const std::string& text, const std::string& origin) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        raise(errc::format_error, origin + ": not a JSON object");
    }
    const auto field = [&](const char* key) -> const json& {
        auto it = parsed.find(key);
        if (it == parsed.end()) {
            raise(errc::format_error, origin + ": missing profile field '" + key + "'");
        }
        return *it;
    };
    if (!field("format").is_string() ||
        field("format").get<std::string>() != "conceptguard-profile-v1") {
        raise(errc::format_error, origin + ": unknown profile format");
    }

    CalibrationProfile profile;
    profile.model_id = field("model_id").get<std::string>();
    profile.num_layers = field("layers").get<int>();
    profile.dim = field("dim").get<int>();
    profile.n_calib = field("n_calib").get<int>();
    if (auto it = parsed.find("attack"); it != parsed.end() && it->is_string()) {
        profile.attack_tag = it->get<std::string>();
    }
    profile.toxic_layer = field("l_t").get<int>();
    profile.jailbreak_layer = field("l_j").get<int>();
    profile.toxic_threshold = field("T_t").get<double>();
    profile.jailbreak_threshold = field("T_j").get<double>();
    profile.delta_toxic = field("delta_t").get<double>();
    profile.delta_jailbreak = field("delta_j").get<double>();
    profile.baseline_threshold = field("baseline_T").get<double>();
    profile.anchor_benign = read_float_array(field("e_b"), "e_b", profile.dim, origin);
    profile.anchor_harmful = read_float_array(field("e_h"), "e_h", profile.dim, origin);
    profile.toxic_direction =
        ConceptSubspace{profile.toxic_layer,
                        read_float_array(field("v_t"), "v_t", profile.dim, origin),
                        SignAnchor::positive_class_mean};
    profile.jailbreak_direction =
        ConceptSubspace{profile.jailbreak_layer,
                        read_float_array(field("v_j"), "v_j", profile.dim, origin),
                        SignAnchor::positive_class_mean};
    profile.baseline_anchor_harmful =
        read_float_array(field("baseline_e_h"), "baseline_e_h", profile.dim, origin);
    profile.validate();
    return profile;
}

CalibrationProfile read_profile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(errc::io_error, "cannot open '" + path + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return profile_from_string(buffer.str(), path);
}

void write_profile(const CalibrationProfile& profile, const std::string& path) {
    write_file_atomic(path, profile_to_string(profile));
}

} // namespace conceptguard
