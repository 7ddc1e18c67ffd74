#include "conceptguard.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "conceptguard/calibration.hpp"
#include "conceptguard/concept_extraction.hpp"
#include "conceptguard/detector.hpp"
#include "conceptguard/dump_io.hpp"
#include "conceptguard/rng.hpp"
#include "conceptguard/synth.hpp"
#include "conceptguard/toy_transformer.hpp"
#include "conceptguard/types.hpp"
#include "conceptguard/vector_ops.hpp"

using namespace conceptguard;

struct cg_dataset {
    EmbeddingDataset data;
};

struct cg_profile {
    CalibrationProfile data;
};

struct cg_verdicts {
    std::vector<DetectionVerdict> data;
};

struct cg_model {
    ToyTransformerState state;
    std::string id;
};

struct cg_vocab {
    std::vector<std::string> tokens;
    std::vector<float> output_embedding; // |V| x dim
    int dim = 0;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_warnings;

cg_status status_from(errc code) {
    switch (code) {
    case errc::ok: return CG_OK;
    case errc::zero_vector: return CG_ERR_ZERO_VECTOR;
    case errc::all_zero_rows: return CG_ERR_ALL_ZERO_ROWS;
    case errc::no_convergence: return CG_ERR_NO_CONVERGENCE;
    case errc::empty_set: return CG_ERR_EMPTY_SET;
    case errc::format_error: return CG_ERR_FORMAT;
    case errc::dimension_mismatch: return CG_ERR_DIMENSION_MISMATCH;
    case errc::empty_category: return CG_ERR_EMPTY_CATEGORY;
    case errc::one_class_only: return CG_ERR_ONE_CLASS_ONLY;
    case errc::layer_out_of_range: return CG_ERR_LAYER_OUT_OF_RANGE;
    case errc::duplicate_id: return CG_ERR_DUPLICATE_ID;
    case errc::invalid_config: return CG_ERR_INVALID_CONFIG;
    case errc::token_out_of_range: return CG_ERR_TOKEN_OUT_OF_RANGE;
    case errc::sequence_too_long: return CG_ERR_SEQUENCE_TOO_LONG;
    case errc::invalid_spec: return CG_ERR_INVALID_SPEC;
    case errc::parse_error: return CG_ERR_PARSE;
    case errc::insufficient_records: return CG_ERR_INSUFFICIENT_RECORDS;
    case errc::length_mismatch: return CG_ERR_LENGTH_MISMATCH;
    case errc::missing_vocab: return CG_ERR_MISSING_VOCAB;
    case errc::io_error: return CG_ERR_IO;
    case errc::invalid_argument: return CG_ERR_INVALID_ARGUMENT;
    case errc::internal: return CG_ERR_INTERNAL;
    }
    return CG_ERR_INTERNAL;
}

template <typename Fn>
cg_status wrap(Fn&& fn) {
    g_last_error.clear();
    g_last_warnings.clear();
    try {
        fn();
        return CG_OK;
    } catch (const Error& error) {
        g_last_error = error.what();
        return status_from(error.code());
    } catch (const std::exception& error) {
        g_last_error = error.what();
        return CG_ERR_INTERNAL;
    }
}

cg_status invalid_argument(const char* message) {
    g_last_error = std::string("InvalidArgument: ") + message;
    return CG_ERR_INVALID_ARGUMENT;
}

PromptCategory category_from(cg_category category) {
    switch (category) {
    case CG_CATEGORY_BENIGN: return PromptCategory::benign;
    case CG_CATEGORY_HARMFUL: return PromptCategory::harmful;
    case CG_CATEGORY_JAILBREAK: return PromptCategory::jailbreak;
    }
    raise(errc::invalid_argument, "unknown category value");
}

cg_category category_to(PromptCategory category) {
    switch (category) {
    case PromptCategory::benign: return CG_CATEGORY_BENIGN;
    case PromptCategory::harmful: return CG_CATEGORY_HARMFUL;
    case PromptCategory::jailbreak: return CG_CATEGORY_JAILBREAK;
    }
    return CG_CATEGORY_BENIGN;
}

bool record_index_ok(const cg_dataset* dataset, int64_t index) {
    return dataset != nullptr && index >= 0 &&
           index < static_cast<int64_t>(dataset->data.records.size());
}

std::vector<ConceptEdit> edits_from(const cg_model* model, const cg_edit* edits, int32_t n_edits) {
    std::vector<ConceptEdit> result;
    if (n_edits < 0) raise(errc::invalid_argument, "negative edit count");
    result.reserve(static_cast<std::size_t>(n_edits));
    for (int32_t i = 0; i < n_edits; ++i) {
        const cg_edit& edit = edits[i];
        if (edit.direction == nullptr) {
            raise(errc::invalid_argument, "edit direction is null");
        }
        if (edit.mode != 0 && edit.mode != 1) {
            raise(errc::invalid_argument, "edit mode must be 0 (add) or 1 (subtract)");
        }
        result.push_back(ConceptEdit{
            edit.layer,
            EmbeddingVector(edit.direction, edit.direction + model->state.config.dim),
            edit.magnitude, edit.mode == 0 ? EditMode::add : EditMode::subtract});
    }
    return result;
}

PlantedGeneratorSpec spec_from(const cg_synth_spec* spec) {
    PlantedGeneratorSpec result;
    result.num_layers = spec->num_layers;
    result.dim = spec->dim;
    result.toxic_layer = spec->toxic_layer;
    result.jailbreak_layer = spec->jailbreak_layer;
    result.alpha = spec->alpha;
    result.beta = spec->beta;
    result.sigma = spec->sigma;
    result.base_scale = spec->base_scale;
    result.benign_count = spec->benign_count;
    result.harmful_count = spec->harmful_count;
    result.jailbreak_count = spec->jailbreak_count;
    result.seed = spec->seed;
    result.direction_seed = spec->direction_seed;
    result.jailbreak_direction_variant = spec->jailbreak_direction_variant;
    result.jailbreak_retains_toxic = spec->jailbreak_retains_toxic != 0;
    if (spec->attack_tag != nullptr) result.attack_tag = spec->attack_tag;
    if (spec->model_id != nullptr) result.model_id = spec->model_id;
    return result;
}

const DetectionVerdict* verdict_at(const cg_verdicts* verdicts, int64_t index) {
    if (verdicts == nullptr || index < 0 ||
        index >= static_cast<int64_t>(verdicts->data.size())) {
        return nullptr;
    }
    return &verdicts->data[static_cast<std::size_t>(index)];
}

} // namespace

extern "C" {

const char* cg_status_name(cg_status status) {
    switch (status) {
    case CG_OK: return "Ok";
    case CG_ERR_ZERO_VECTOR: return "ZeroVector";
    case CG_ERR_ALL_ZERO_ROWS: return "AllZeroRows";
    case CG_ERR_NO_CONVERGENCE: return "NoConvergence";
    case CG_ERR_EMPTY_SET: return "EmptySet";
    case CG_ERR_FORMAT: return "FormatError";
    case CG_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case CG_ERR_EMPTY_CATEGORY: return "EmptyCategory";
    case CG_ERR_ONE_CLASS_ONLY: return "OneClassOnly";
    case CG_ERR_LAYER_OUT_OF_RANGE: return "LayerOutOfRange";
    case CG_ERR_DUPLICATE_ID: return "DuplicateId";
    case CG_ERR_INVALID_CONFIG: return "InvalidConfig";
    case CG_ERR_TOKEN_OUT_OF_RANGE: return "TokenOutOfRange";
    case CG_ERR_SEQUENCE_TOO_LONG: return "SequenceTooLong";
    case CG_ERR_INVALID_SPEC: return "InvalidSpec";
    case CG_ERR_PARSE: return "ParseError";
    case CG_ERR_INSUFFICIENT_RECORDS: return "InsufficientRecords";
    case CG_ERR_LENGTH_MISMATCH: return "LengthMismatch";
    case CG_ERR_MISSING_VOCAB: return "MissingVocab";
    case CG_ERR_IO: return "IoError";
    case CG_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case CG_ERR_INTERNAL: return "Internal";
    }
    return "Internal";
}

const char* cg_last_error(void) { return g_last_error.c_str(); }
const char* cg_last_warnings(void) { return g_last_warnings.c_str(); }

/* ---- datasets ----------------------------------------------------------- */

cg_status cg_dataset_create(const char* model_id, int32_t num_layers, int32_t dim,
                            cg_dataset** out) {
    if (out == nullptr) return invalid_argument("out is null");
    return wrap([&] {
        if (num_layers <= 0 || dim <= 0) {
            raise(errc::invalid_argument, "num_layers and dim must be positive");
        }
        auto handle = std::make_unique<cg_dataset>();
        handle->data.model_id = model_id != nullptr ? model_id : "";
        handle->data.num_layers = num_layers;
        handle->data.dim = dim;
        *out = handle.release();
    });
}

cg_status cg_dataset_add_record(cg_dataset* dataset, const char* prompt_id, cg_category category,
                                const char* attack, const float* layer_values) {
    if (dataset == nullptr || prompt_id == nullptr || layer_values == nullptr) {
        return invalid_argument("dataset, prompt_id and layer_values must be non-null");
    }
    return wrap([&] {
        PromptEmbeddingRecord record;
        record.prompt_id = prompt_id;
        record.category = category_from(category);
        record.attack_tag = attack != nullptr ? attack : "";
        const int dim = dataset->data.dim;
        record.layers.reserve(static_cast<std::size_t>(dataset->data.num_layers));
        for (int layer = 0; layer < dataset->data.num_layers; ++layer) {
            const float* begin = layer_values + static_cast<std::size_t>(layer) * dim;
            record.layers.emplace_back(begin, begin + dim);
        }
        for (const auto& existing : dataset->data.records) {
            if (existing.prompt_id == record.prompt_id) {
                raise(errc::duplicate_id, "duplicate prompt id '" + record.prompt_id + "'");
            }
        }
        dataset->data.records.push_back(std::move(record));
    });
}

cg_status cg_dataset_read(const char* path, cg_dataset** out) {
    if (path == nullptr || out == nullptr) return invalid_argument("path and out must be non-null");
    return wrap([&] {
        auto handle = std::make_unique<cg_dataset>();
        handle->data = read_dump(path);
        *out = handle.release();
    });
}

cg_status cg_dataset_write(const cg_dataset* dataset, const char* path) {
    if (dataset == nullptr || path == nullptr) {
        return invalid_argument("dataset and path must be non-null");
    }
    return wrap([&] { write_dump(dataset->data, path); });
}

void cg_dataset_free(cg_dataset* dataset) { delete dataset; }

const char* cg_dataset_model_id(const cg_dataset* dataset) {
    return dataset != nullptr ? dataset->data.model_id.c_str() : "";
}

int32_t cg_dataset_num_layers(const cg_dataset* dataset) {
    return dataset != nullptr ? dataset->data.num_layers : 0;
}

int32_t cg_dataset_dim(const cg_dataset* dataset) {
    return dataset != nullptr ? dataset->data.dim : 0;
}

int64_t cg_dataset_count(const cg_dataset* dataset) {
    return dataset != nullptr ? static_cast<int64_t>(dataset->data.records.size()) : 0;
}

const char* cg_dataset_record_id(const cg_dataset* dataset, int64_t index) {
    if (!record_index_ok(dataset, index)) return nullptr;
    return dataset->data.records[static_cast<std::size_t>(index)].prompt_id.c_str();
}

cg_category cg_dataset_record_category(const cg_dataset* dataset, int64_t index) {
    if (!record_index_ok(dataset, index)) return CG_CATEGORY_BENIGN;
    return category_to(dataset->data.records[static_cast<std::size_t>(index)].category);
}

const char* cg_dataset_record_attack(const cg_dataset* dataset, int64_t index) {
    if (!record_index_ok(dataset, index)) return nullptr;
    const auto& tag = dataset->data.records[static_cast<std::size_t>(index)].attack_tag;
    return tag.empty() ? nullptr : tag.c_str();
}

const float* cg_dataset_record_layer(const cg_dataset* dataset, int64_t index, int32_t layer) {
    if (!record_index_ok(dataset, index)) return nullptr;
    const auto& record = dataset->data.records[static_cast<std::size_t>(index)];
    if (layer < 0 || layer >= static_cast<int32_t>(record.layers.size())) return nullptr;
    return record.layers[static_cast<std::size_t>(layer)].data();
}

/* ---- synth -------------------------------------------------------------- */

void cg_synth_spec_init(cg_synth_spec* spec) {
    if (spec == nullptr) return;
    std::memset(spec, 0, sizeof(*spec));
    spec->num_layers = 8;
    spec->dim = 64;
    spec->toxic_layer = 5;
    spec->jailbreak_layer = 6;
    spec->alpha = 1.0;
    spec->beta = 1.0;
    spec->sigma = 0.1;
    spec->base_scale = 1.0;
    spec->benign_count = 30;
    spec->harmful_count = 30;
    spec->jailbreak_count = 30;
    spec->jailbreak_retains_toxic = 1;
}

cg_status cg_synth(const cg_synth_spec* spec, cg_dataset** out) {
    if (spec == nullptr || out == nullptr) return invalid_argument("spec and out must be non-null");
    return wrap([&] {
        auto handle = std::make_unique<cg_dataset>();
        handle->data = synth(spec_from(spec));
        *out = handle.release();
    });
}

cg_status cg_synth_directions(const cg_synth_spec* spec, float* toxic_direction,
                              float* jailbreak_direction) {
    if (spec == nullptr || toxic_direction == nullptr || jailbreak_direction == nullptr) {
        return invalid_argument("spec and output buffers must be non-null");
    }
    return wrap([&] {
        const PlantedDirections directions = planted_directions(spec_from(spec));
        std::copy(directions.toxic.begin(), directions.toxic.end(), toxic_direction);
        std::copy(directions.jailbreak.begin(), directions.jailbreak.end(), jailbreak_direction);
    });
}

/* ---- profiles ----------------------------------------------------------- */

cg_status cg_calibrate(const cg_dataset* dataset, int32_t n_per_category, uint64_t seed,
                       cg_profile** out) {
    if (dataset == nullptr || out == nullptr) {
        return invalid_argument("dataset and out must be non-null");
    }
    return wrap([&] {
        if (n_per_category <= 0) {
            raise(errc::invalid_argument, "n_per_category must be positive");
        }
        std::vector<std::vector<std::size_t>> by_category(3);
        for (std::size_t i = 0; i < dataset->data.records.size(); ++i) {
            by_category[static_cast<std::size_t>(dataset->data.records[i].category)].push_back(i);
        }
        const char* names[3] = {"benign", "harmful", "jailbreak"};
        std::vector<std::vector<PromptEmbeddingRecord>> sampled(3);
        for (int c = 0; c < 3; ++c) {
            auto& indices = by_category[static_cast<std::size_t>(c)];
            if (static_cast<int32_t>(indices.size()) < n_per_category) {
                raise(errc::insufficient_records,
                      std::string("category '") + names[c] + "' has " +
                          std::to_string(indices.size()) + " records, need " +
                          std::to_string(n_per_category));
            }
            Rng rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(c)));
            for (std::size_t i = indices.size(); i > 1; --i) {
                const std::size_t j = rng.next_below(i);
                std::swap(indices[i - 1], indices[j]);
            }
            for (int32_t i = 0; i < n_per_category; ++i) {
                sampled[static_cast<std::size_t>(c)].push_back(
                    dataset->data.records[indices[static_cast<std::size_t>(i)]]);
            }
        }
        std::vector<std::string> warnings;
        auto handle = std::make_unique<cg_profile>();
        handle->data = build_profile(sampled[0], sampled[1], sampled[2], derive_seed(seed, 200),
                                     dataset->data.model_id, &warnings);
        for (const auto& warning : warnings) {
            if (!g_last_warnings.empty()) g_last_warnings += '\n';
            g_last_warnings += warning;
        }
        *out = handle.release();
    });
}

cg_status cg_profile_read(const char* path, cg_profile** out) {
    if (path == nullptr || out == nullptr) return invalid_argument("path and out must be non-null");
    return wrap([&] {
        auto handle = std::make_unique<cg_profile>();
        handle->data = read_profile(path);
        *out = handle.release();
    });
}

cg_status cg_profile_write(const cg_profile* profile, const char* path) {
    if (profile == nullptr || path == nullptr) {
        return invalid_argument("profile and path must be non-null");
    }
    return wrap([&] { write_profile(profile->data, path); });
}

void cg_profile_free(cg_profile* profile) { delete profile; }

const char* cg_profile_model_id(const cg_profile* profile) {
    return profile != nullptr ? profile->data.model_id.c_str() : "";
}

const char* cg_profile_attack_tag(const cg_profile* profile) {
    if (profile == nullptr || profile->data.attack_tag.empty()) return nullptr;
    return profile->data.attack_tag.c_str();
}

int32_t cg_profile_num_layers(const cg_profile* profile) {
    return profile != nullptr ? profile->data.num_layers : 0;
}

int32_t cg_profile_dim(const cg_profile* profile) {
    return profile != nullptr ? profile->data.dim : 0;
}

int32_t cg_profile_n_calib(const cg_profile* profile) {
    return profile != nullptr ? profile->data.n_calib : 0;
}

int32_t cg_profile_toxic_layer(const cg_profile* profile) {
    return profile != nullptr ? profile->data.toxic_layer : 0;
}

int32_t cg_profile_jailbreak_layer(const cg_profile* profile) {
    return profile != nullptr ? profile->data.jailbreak_layer : 0;
}

double cg_profile_toxic_threshold(const cg_profile* profile) {
    return profile != nullptr ? profile->data.toxic_threshold : 0.0;
}

double cg_profile_jailbreak_threshold(const cg_profile* profile) {
    return profile != nullptr ? profile->data.jailbreak_threshold : 0.0;
}

double cg_profile_delta_toxic(const cg_profile* profile) {
    return profile != nullptr ? profile->data.delta_toxic : 0.0;
}

double cg_profile_delta_jailbreak(const cg_profile* profile) {
    return profile != nullptr ? profile->data.delta_jailbreak : 0.0;
}

double cg_profile_baseline_threshold(const cg_profile* profile) {
    return profile != nullptr ? profile->data.baseline_threshold : 0.0;
}

const float* cg_profile_vector_data(const cg_profile* profile, cg_profile_vector which) {
    if (profile == nullptr) return nullptr;
    switch (which) {
    case CG_VECTOR_ANCHOR_BENIGN: return profile->data.anchor_benign.data();
    case CG_VECTOR_ANCHOR_HARMFUL: return profile->data.anchor_harmful.data();
    case CG_VECTOR_TOXIC_DIRECTION: return profile->data.toxic_direction.direction.data();
    case CG_VECTOR_JAILBREAK_DIRECTION: return profile->data.jailbreak_direction.direction.data();
    case CG_VECTOR_BASELINE_ANCHOR_HARMFUL: return profile->data.baseline_anchor_harmful.data();
    }
    return nullptr;
}

/* ---- detection ---------------------------------------------------------- */

cg_status cg_detect(const cg_dataset* dataset, const cg_profile* profile, cg_verdicts** out) {
    if (dataset == nullptr || profile == nullptr || out == nullptr) {
        return invalid_argument("dataset, profile and out must be non-null");
    }
    return wrap([&] {
        auto handle = std::make_unique<cg_verdicts>();
        handle->data = detect_batch(dataset->data, profile->data);
        *out = handle.release();
    });
}

void cg_verdicts_free(cg_verdicts* verdicts) { delete verdicts; }

int64_t cg_verdicts_count(const cg_verdicts* verdicts) {
    return verdicts != nullptr ? static_cast<int64_t>(verdicts->data.size()) : 0;
}

const char* cg_verdicts_prompt_id(const cg_verdicts* verdicts, int64_t index) {
    const auto* verdict = verdict_at(verdicts, index);
    return verdict != nullptr ? verdict->prompt_id.c_str() : nullptr;
}

double cg_verdicts_toxic_score(const cg_verdicts* verdicts, int64_t index) {
    const auto* verdict = verdict_at(verdicts, index);
    return verdict != nullptr ? verdict->toxic_score : 0.0;
}

double cg_verdicts_jailbreak_score(const cg_verdicts* verdicts, int64_t index) {
    const auto* verdict = verdict_at(verdicts, index);
    return verdict != nullptr ? verdict->jailbreak_score : 0.0;
}

int32_t cg_verdicts_toxic_active(const cg_verdicts* verdicts, int64_t index) {
    const auto* verdict = verdict_at(verdicts, index);
    return verdict != nullptr && verdict->toxic_active ? 1 : 0;
}

int32_t cg_verdicts_jailbreak_active(const cg_verdicts* verdicts, int64_t index) {
    const auto* verdict = verdict_at(verdicts, index);
    return verdict != nullptr && verdict->jailbreak_active ? 1 : 0;
}

int32_t cg_verdicts_is_jailbreak(const cg_verdicts* verdicts, int64_t index) {
    const auto* verdict = verdict_at(verdicts, index);
    return verdict != nullptr && verdict->is_jailbreak ? 1 : 0;
}

cg_status cg_compute_metrics(const int32_t* predicted, const int32_t* labels, int64_t count,
                             cg_metrics* out) {
    if (predicted == nullptr || labels == nullptr || out == nullptr) {
        return invalid_argument("predicted, labels and out must be non-null");
    }
    return wrap([&] {
        if (count < 0) raise(errc::invalid_argument, "negative count");
        std::vector<std::uint8_t> pred(static_cast<std::size_t>(count));
        std::vector<std::uint8_t> truth(static_cast<std::size_t>(count));
        for (int64_t i = 0; i < count; ++i) {
            pred[static_cast<std::size_t>(i)] = predicted[i] != 0 ? 1 : 0;
            truth[static_cast<std::size_t>(i)] = labels[i] != 0 ? 1 : 0;
        }
        const DetectionMetrics metrics = metrics_from_predictions(pred, truth);
        out->accuracy = metrics.accuracy;
        out->precision = metrics.precision;
        out->recall = metrics.recall;
        out->f1 = metrics.f1;
        out->tp = metrics.counts.tp;
        out->fp = metrics.counts.fp;
        out->tn = metrics.counts.tn;
        out->fn = metrics.counts.fn;
    });
}

cg_status cg_baseline_detect(const cg_dataset* dataset, const cg_profile* profile,
                             int32_t* out_flags) {
    if (dataset == nullptr || profile == nullptr || out_flags == nullptr) {
        return invalid_argument("dataset, profile and out_flags must be non-null");
    }
    return wrap([&] {
        for (std::size_t i = 0; i < dataset->data.records.size(); ++i) {
            out_flags[i] =
                baseline_embedding_similarity(dataset->data.records[i], profile->data) ? 1 : 0;
        }
    });
}

/* ---- toy transformer ---------------------------------------------------- */

void cg_model_config_init(cg_model_config* config) {
    if (config == nullptr) return;
    config->num_layers = 8;
    config->dim = 64;
    config->num_heads = 4;
    config->vocab_size = 256;
    config->max_seq_len = 64;
    config->seed = 0;
}

cg_status cg_model_create(const cg_model_config* config, cg_model** out) {
    if (config == nullptr || out == nullptr) {
        return invalid_argument("config and out must be non-null");
    }
    return wrap([&] {
        ToyTransformerConfig cpp_config;
        cpp_config.num_layers = config->num_layers;
        cpp_config.dim = config->dim;
        cpp_config.num_heads = config->num_heads;
        cpp_config.vocab_size = config->vocab_size;
        cpp_config.max_seq_len = config->max_seq_len;
        cpp_config.seed = config->seed;
        auto handle = std::make_unique<cg_model>();
        handle->state = init_toy_transformer(cpp_config);
        handle->id = handle->state.model_id();
        *out = handle.release();
    });
}

void cg_model_free(cg_model* model) { delete model; }

const char* cg_model_id(const cg_model* model) {
    return model != nullptr ? model->id.c_str() : "";
}

int32_t cg_model_vocab_size(const cg_model* model) {
    return model != nullptr ? model->state.config.vocab_size : 0;
}

const char* cg_model_token_text(const cg_model* model, int32_t token_id) {
    if (model == nullptr || token_id < 0 ||
        token_id >= static_cast<int32_t>(model->state.vocab.size())) {
        return nullptr;
    }
    return model->state.vocab[static_cast<std::size_t>(token_id)].c_str();
}

cg_status cg_mitigation_edits(const cg_profile* profile, cg_edit out_edits[2]) {
    if (profile == nullptr || out_edits == nullptr) {
        return invalid_argument("profile and out_edits must be non-null");
    }
    return wrap([&] {
        profile->data.validate();
        out_edits[0] = cg_edit{profile->data.toxic_layer, 0, profile->data.delta_toxic,
                               profile->data.toxic_direction.direction.data()};
        out_edits[1] = cg_edit{profile->data.jailbreak_layer, 1, profile->data.delta_jailbreak,
                               profile->data.jailbreak_direction.direction.data()};
    });
}

cg_status cg_model_embed(const cg_model* model, const int32_t* token_ids, int32_t count,
                         const cg_edit* edits, int32_t n_edits, float* out_layers) {
    if (model == nullptr || token_ids == nullptr || out_layers == nullptr) {
        return invalid_argument("model, token_ids and out_layers must be non-null");
    }
    if (n_edits > 0 && edits == nullptr) return invalid_argument("edits is null");
    return wrap([&] {
        std::vector<int> ids(token_ids, token_ids + count);
        const auto cpp_edits = edits_from(model, edits, n_edits);
        const auto result = forward(model->state, ids, cpp_edits);
        const int dim = model->state.config.dim;
        for (int layer = 0; layer < model->state.config.num_layers; ++layer) {
            const auto& vec = result.layer_last_token[static_cast<std::size_t>(layer)];
            std::copy(vec.begin(), vec.end(),
                      out_layers + static_cast<std::size_t>(layer) * dim);
        }
    });
}

cg_status cg_model_generate(const cg_model* model, const int32_t* token_ids, int32_t count,
                            int32_t max_new_tokens, const cg_edit* edits, int32_t n_edits,
                            int32_t* out_tokens, int32_t* out_count) {
    if (model == nullptr || token_ids == nullptr || out_tokens == nullptr ||
        out_count == nullptr) {
        return invalid_argument("model, token_ids, out_tokens and out_count must be non-null");
    }
    if (n_edits > 0 && edits == nullptr) return invalid_argument("edits is null");
    return wrap([&] {
        std::vector<int> ids(token_ids, token_ids + count);
        const auto cpp_edits = edits_from(model, edits, n_edits);
        const auto sequence = generate_greedy(model->state, ids, max_new_tokens, cpp_edits);
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            out_tokens[i] = sequence[i];
        }
        *out_count = static_cast<int32_t>(sequence.size());
    });
}

/* ---- vocab projections --------------------------------------------------- */

cg_status cg_vocab_read(const char* path, cg_vocab** out) {
    if (path == nullptr || out == nullptr) return invalid_argument("path and out must be non-null");
    return wrap([&] {
        VocabProjection projection = load_vocab_projection(path);
        auto handle = std::make_unique<cg_vocab>();
        handle->tokens = std::move(projection.tokens);
        handle->output_embedding = std::move(projection.output_embedding);
        handle->dim = projection.dim;
        *out = handle.release();
    });
}

cg_status cg_model_vocab(const cg_model* model, cg_vocab** out) {
    if (model == nullptr || out == nullptr) {
        return invalid_argument("model and out must be non-null");
    }
    return wrap([&] {
        auto handle = std::make_unique<cg_vocab>();
        handle->tokens = model->state.vocab;
        handle->output_embedding = model->state.output_embedding;
        handle->dim = model->state.config.dim;
        *out = handle.release();
    });
}

void cg_vocab_free(cg_vocab* vocab) { delete vocab; }

int32_t cg_vocab_size(const cg_vocab* vocab) {
    return vocab != nullptr ? static_cast<int32_t>(vocab->tokens.size()) : 0;
}

int32_t cg_vocab_dim(const cg_vocab* vocab) { return vocab != nullptr ? vocab->dim : 0; }

const char* cg_vocab_token_text(const cg_vocab* vocab, int32_t token_id) {
    if (vocab == nullptr || token_id < 0 ||
        token_id >= static_cast<int32_t>(vocab->tokens.size())) {
        return nullptr;
    }
    return vocab->tokens[static_cast<std::size_t>(token_id)].c_str();
}

cg_status cg_vocab_concept_tokens(const cg_vocab* vocab, const float* direction, int32_t dim,
                                  int32_t k, int32_t* out_ids, double* out_scores) {
    if (vocab == nullptr || direction == nullptr || out_ids == nullptr || out_scores == nullptr) {
        return invalid_argument("vocab, direction and output buffers must be non-null");
    }
    return wrap([&] {
        if (dim != vocab->dim) {
            raise(errc::dimension_mismatch, "direction dim " + std::to_string(dim) +
                                                " does not match vocab dim " +
                                                std::to_string(vocab->dim));
        }
        ConceptSubspace subspace;
        subspace.layer = 0;
        subspace.direction.assign(direction, direction + dim);
        const auto projections =
            map_to_tokens(subspace, vocab->output_embedding, vocab->tokens, k);
        for (std::size_t i = 0; i < projections.size(); ++i) {
            out_ids[i] = projections[i].token_id;
            out_scores[i] = projections[i].score;
        }
    });
}

} // extern "C"
