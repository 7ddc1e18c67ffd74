/*
 * conceptguard C API.
 *
 * Concept-subspace extraction from transformer hidden states, jailbreak
 * detection via subspace-similarity thresholds, and mitigation via linear
 * hidden-state edits, packaged behind opaque handles and status codes.
 *
 * Conventions:
 *   - Every fallible call returns cg_status; CG_OK is 0.
 *   - On failure, cg_last_error() returns a thread-local message describing
 *     what went wrong; output parameters are left untouched.
 *   - Objects returned through cg_*_create/read/... are owned by the caller
 *     and released with the matching cg_*_free.
 *   - Pointers returned by accessors (strings, float arrays) borrow from the
 *     handle and stay valid until it is freed.
 */
#ifndef CONCEPTGUARD_H
#define CONCEPTGUARD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CG_API __declspec(dllexport)
#else
#define CG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cg_status {
    CG_OK = 0,
    CG_ERR_ZERO_VECTOR = 1,
    CG_ERR_ALL_ZERO_ROWS = 2,
    CG_ERR_NO_CONVERGENCE = 3,
    CG_ERR_EMPTY_SET = 4,
    CG_ERR_FORMAT = 5,
    CG_ERR_DIMENSION_MISMATCH = 6,
    CG_ERR_EMPTY_CATEGORY = 7,
    CG_ERR_ONE_CLASS_ONLY = 8,
    CG_ERR_LAYER_OUT_OF_RANGE = 9,
    CG_ERR_DUPLICATE_ID = 10,
    CG_ERR_INVALID_CONFIG = 11,
    CG_ERR_TOKEN_OUT_OF_RANGE = 12,
    CG_ERR_SEQUENCE_TOO_LONG = 13,
    CG_ERR_INVALID_SPEC = 14,
    CG_ERR_PARSE = 15,
    CG_ERR_INSUFFICIENT_RECORDS = 16,
    CG_ERR_LENGTH_MISMATCH = 17,
    CG_ERR_MISSING_VOCAB = 18,
    CG_ERR_IO = 19,
    CG_ERR_INVALID_ARGUMENT = 20,
    CG_ERR_INTERNAL = 21
} cg_status;

typedef enum cg_category {
    CG_CATEGORY_BENIGN = 0,
    CG_CATEGORY_HARMFUL = 1,
    CG_CATEGORY_JAILBREAK = 2
} cg_category;

CG_API const char* cg_status_name(cg_status status);
CG_API const char* cg_last_error(void);
/* Non-fatal notes from the most recent call on this thread (e.g. clamped
 * scaling factors during calibration); empty string when there were none. */
CG_API const char* cg_last_warnings(void);

/* ---- embedding datasets (.ced dumps) ---------------------------------- */

typedef struct cg_dataset cg_dataset;

CG_API cg_status cg_dataset_create(const char* model_id, int32_t num_layers, int32_t dim,
                                   cg_dataset** out);
/* layer_values: num_layers * dim floats, layer-major. attack may be NULL. */
CG_API cg_status cg_dataset_add_record(cg_dataset* dataset, const char* prompt_id,
                                       cg_category category, const char* attack,
                                       const float* layer_values);
CG_API cg_status cg_dataset_read(const char* path, cg_dataset** out);
CG_API cg_status cg_dataset_write(const cg_dataset* dataset, const char* path);
CG_API void cg_dataset_free(cg_dataset* dataset);

CG_API const char* cg_dataset_model_id(const cg_dataset* dataset);
CG_API int32_t cg_dataset_num_layers(const cg_dataset* dataset);
CG_API int32_t cg_dataset_dim(const cg_dataset* dataset);
CG_API int64_t cg_dataset_count(const cg_dataset* dataset);
CG_API const char* cg_dataset_record_id(const cg_dataset* dataset, int64_t index);
CG_API cg_category cg_dataset_record_category(const cg_dataset* dataset, int64_t index);
/* NULL when the record is untagged. */
CG_API const char* cg_dataset_record_attack(const cg_dataset* dataset, int64_t index);
/* dim floats; NULL on bad indices. */
CG_API const float* cg_dataset_record_layer(const cg_dataset* dataset, int64_t index,
                                            int32_t layer);

/* ---- planted-concept synthetic data ----------------------------------- */

typedef struct cg_synth_spec {
    int32_t num_layers;
    int32_t dim;
    int32_t toxic_layer;
    int32_t jailbreak_layer;
    double alpha;      /* toxic separation magnitude */
    double beta;       /* jailbreak separation magnitude */
    double sigma;      /* expected per-layer noise norm */
    double base_scale; /* norm of the shared per-layer base vector */
    int64_t benign_count;
    int64_t harmful_count;
    int64_t jailbreak_count;
    uint64_t seed;
    uint64_t direction_seed; /* 0 = derive from seed */
    int32_t jailbreak_direction_variant;
    int32_t jailbreak_retains_toxic; /* nonzero = jailbreak keeps the toxic offset */
    const char* attack_tag;          /* may be NULL */
    const char* model_id;            /* may be NULL */
} cg_synth_spec;

CG_API void cg_synth_spec_init(cg_synth_spec* spec);
CG_API cg_status cg_synth(const cg_synth_spec* spec, cg_dataset** out);
/* Ground-truth planted directions for a spec: out buffers take dim floats. */
CG_API cg_status cg_synth_directions(const cg_synth_spec* spec, float* toxic_direction,
                                     float* jailbreak_direction);

/* ---- calibration profiles --------------------------------------------- */

typedef struct cg_profile cg_profile;

/* Samples n_per_category records per category (seeded), then calibrates:
 * critical layers, anchors, concept directions, Youden thresholds on the
 * detector's scoring path, scaling factors, and the comparison baseline. */
CG_API cg_status cg_calibrate(const cg_dataset* dataset, int32_t n_per_category, uint64_t seed,
                              cg_profile** out);
CG_API cg_status cg_profile_read(const char* path, cg_profile** out);
CG_API cg_status cg_profile_write(const cg_profile* profile, const char* path);
CG_API void cg_profile_free(cg_profile* profile);

CG_API const char* cg_profile_model_id(const cg_profile* profile);
/* NULL when the calibration pool was mixed or untagged. */
CG_API const char* cg_profile_attack_tag(const cg_profile* profile);
CG_API int32_t cg_profile_num_layers(const cg_profile* profile);
CG_API int32_t cg_profile_dim(const cg_profile* profile);
CG_API int32_t cg_profile_n_calib(const cg_profile* profile);
CG_API int32_t cg_profile_toxic_layer(const cg_profile* profile);
CG_API int32_t cg_profile_jailbreak_layer(const cg_profile* profile);
CG_API double cg_profile_toxic_threshold(const cg_profile* profile);
CG_API double cg_profile_jailbreak_threshold(const cg_profile* profile);
CG_API double cg_profile_delta_toxic(const cg_profile* profile);
CG_API double cg_profile_delta_jailbreak(const cg_profile* profile);
CG_API double cg_profile_baseline_threshold(const cg_profile* profile);

typedef enum cg_profile_vector {
    CG_VECTOR_ANCHOR_BENIGN = 0,
    CG_VECTOR_ANCHOR_HARMFUL = 1,
    CG_VECTOR_TOXIC_DIRECTION = 2,
    CG_VECTOR_JAILBREAK_DIRECTION = 3,
    CG_VECTOR_BASELINE_ANCHOR_HARMFUL = 4
} cg_profile_vector;

/* dim floats, borrowed from the profile. */
CG_API const float* cg_profile_vector_data(const cg_profile* profile, cg_profile_vector which);

/* ---- detection --------------------------------------------------------- */

typedef struct cg_verdicts cg_verdicts;

CG_API cg_status cg_detect(const cg_dataset* dataset, const cg_profile* profile,
                           cg_verdicts** out);
CG_API void cg_verdicts_free(cg_verdicts* verdicts);
CG_API int64_t cg_verdicts_count(const cg_verdicts* verdicts);
CG_API const char* cg_verdicts_prompt_id(const cg_verdicts* verdicts, int64_t index);
CG_API double cg_verdicts_toxic_score(const cg_verdicts* verdicts, int64_t index);
CG_API double cg_verdicts_jailbreak_score(const cg_verdicts* verdicts, int64_t index);
CG_API int32_t cg_verdicts_toxic_active(const cg_verdicts* verdicts, int64_t index);
CG_API int32_t cg_verdicts_jailbreak_active(const cg_verdicts* verdicts, int64_t index);
CG_API int32_t cg_verdicts_is_jailbreak(const cg_verdicts* verdicts, int64_t index);

typedef struct cg_metrics {
    double accuracy;
    double precision;
    double recall;
    double f1;
    int64_t tp;
    int64_t fp;
    int64_t tn;
    int64_t fn;
} cg_metrics;

/* Plain confusion counting: nonzero = positive. */
CG_API cg_status cg_compute_metrics(const int32_t* predicted, const int32_t* labels,
                                    int64_t count, cg_metrics* out);

/* Direct-embedding-similarity comparison detector; out_flags takes one
 * entry per record, nonzero = flagged. */
CG_API cg_status cg_baseline_detect(const cg_dataset* dataset, const cg_profile* profile,
                                    int32_t* out_flags);

/* ---- toy decoder-only transformer -------------------------------------- */

typedef struct cg_model cg_model;

typedef struct cg_model_config {
    int32_t num_layers;
    int32_t dim;
    int32_t num_heads;
    int32_t vocab_size;
    int32_t max_seq_len;
    uint64_t seed;
} cg_model_config;

CG_API void cg_model_config_init(cg_model_config* config);
CG_API cg_status cg_model_create(const cg_model_config* config, cg_model** out);
CG_API void cg_model_free(cg_model* model);
CG_API const char* cg_model_id(const cg_model* model);
CG_API int32_t cg_model_vocab_size(const cg_model* model);
CG_API const char* cg_model_token_text(const cg_model* model, int32_t token_id);

typedef struct cg_edit {
    int32_t layer;
    int32_t mode; /* 0 = add, 1 = subtract */
    double magnitude;
    const float* direction; /* dim floats */
} cg_edit;

/* Fills out_edits[0..1] with the mitigation pair: enhance the toxic
 * direction, weaken the jailbreak direction. Direction pointers borrow from
 * the profile. */
CG_API cg_status cg_mitigation_edits(const cg_profile* profile, cg_edit out_edits[2]);

/* Per-layer last-token embeddings after a forward pass; out_layers takes
 * num_layers * dim floats. Pass edits = NULL / n_edits = 0 for a clean run. */
CG_API cg_status cg_model_embed(const cg_model* model, const int32_t* token_ids, int32_t count,
                                const cg_edit* edits, int32_t n_edits, float* out_layers);

/* Greedy decoding; out_tokens takes count + max_new_tokens entries, the
 * actual length lands in out_count. */
CG_API cg_status cg_model_generate(const cg_model* model, const int32_t* token_ids, int32_t count,
                                   int32_t max_new_tokens, const cg_edit* edits, int32_t n_edits,
                                   int32_t* out_tokens, int32_t* out_count);

/* ---- concept-to-token interpretation ----------------------------------- */

typedef struct cg_vocab cg_vocab;

/* Sidecar vocabulary-projection file: a JSON header {"vocab","dim"} then one
 * line per token ("text v0 v1 ... v{d-1}"). */
CG_API cg_status cg_vocab_read(const char* path, cg_vocab** out);
/* Snapshot of a toy model's output embedding and token strings. */
CG_API cg_status cg_model_vocab(const cg_model* model, cg_vocab** out);
CG_API void cg_vocab_free(cg_vocab* vocab);
CG_API int32_t cg_vocab_size(const cg_vocab* vocab);
CG_API int32_t cg_vocab_dim(const cg_vocab* vocab);
CG_API const char* cg_vocab_token_text(const cg_vocab* vocab, int32_t token_id);

/* Top-k vocabulary tokens aligned with a concept direction, descending score,
 * ties to the lower token id. out_ids/out_scores take k entries. */
CG_API cg_status cg_vocab_concept_tokens(const cg_vocab* vocab, const float* direction,
                                         int32_t dim, int32_t k, int32_t* out_ids,
                                         double* out_scores);

#ifdef __cplusplus
}
#endif

#endif /* CONCEPTGUARD_H */
