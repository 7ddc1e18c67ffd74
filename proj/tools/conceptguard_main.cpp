// conceptguard command-line tool.
//
// Subcommands: synth, embed, calibrate, detect, steer, eval, tokens.
// Everything domain-level goes through the C API in conceptguard.h; this
// file only parses flags, moves buffers around and renders reports.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conceptguard.h"

namespace {

struct CliError {
    cg_status status;
    std::string message;
};

void check(cg_status status) {
    if (status != CG_OK) {
        throw CliError{status, cg_last_error()};
    }
}

[[noreturn]] void fail(cg_status status, const std::string& message) {
    throw CliError{status, message};
}

struct DatasetDeleter {
    void operator()(cg_dataset* p) const { cg_dataset_free(p); }
};
struct ProfileDeleter {
    void operator()(cg_profile* p) const { cg_profile_free(p); }
};
struct VerdictsDeleter {
    void operator()(cg_verdicts* p) const { cg_verdicts_free(p); }
};
struct ModelDeleter {
    void operator()(cg_model* p) const { cg_model_free(p); }
};
struct VocabDeleter {
    void operator()(cg_vocab* p) const { cg_vocab_free(p); }
};

using DatasetPtr = std::unique_ptr<cg_dataset, DatasetDeleter>;
using ProfilePtr = std::unique_ptr<cg_profile, ProfileDeleter>;
using VerdictsPtr = std::unique_ptr<cg_verdicts, VerdictsDeleter>;
using ModelPtr = std::unique_ptr<cg_model, ModelDeleter>;
using VocabPtr = std::unique_ptr<cg_vocab, VocabDeleter>;

DatasetPtr read_dataset(const std::string& path) {
    cg_dataset* raw = nullptr;
    check(cg_dataset_read(path.c_str(), &raw));
    return DatasetPtr(raw);
}

ProfilePtr read_profile(const std::string& path) {
    cg_profile* raw = nullptr;
    check(cg_profile_read(path.c_str(), &raw));
    return ProfilePtr(raw);
}

std::string fmt_shortest(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string fmt_fixed(double value, int digits = 4) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
    return buffer;
}

std::string json_escape(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buffer[8];
                std::snprintf(buffer, sizeof(buffer), "\\u%04x", c);
                out += buffer;
            } else {
                out += c;
            }
        }
    }
    out += '"';
    return out;
}

// Reports are written atomically so a crashed run never leaves a torn file.
void write_output(const std::string& path, const std::string& content) {
    const std::string temp_path = path + ".tmp";
    {
        std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
        if (!out) fail(CG_ERR_IO, "cannot open '" + temp_path + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(CG_ERR_IO, "short write to '" + temp_path + "'");
    }
    std::error_code ec;
    std::filesystem::rename(temp_path, path, ec);
    if (ec) fail(CG_ERR_IO, "cannot move '" + temp_path + "' to '" + path + "'");
}

void emit(const std::optional<std::string>& out_path, const std::string& content) {
    if (out_path) {
        write_output(*out_path, content);
    } else {
        std::cout << content;
    }
}

/* ---- prompts files ------------------------------------------------------ */

struct PromptLine {
    std::string id;
    cg_category category = CG_CATEGORY_BENIGN;
    std::string attack;
    std::vector<int32_t> tokens;
};

// One prompt per line: a label column ("benign", "harmful", "jailbreak",
// optionally "jailbreak:TAG"), then whitespace-separated token ids.
std::vector<PromptLine> read_prompts_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(CG_ERR_IO, "cannot open '" + path + "' for reading");
    std::vector<PromptLine> prompts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string label;
        fields >> label;
        PromptLine prompt;
        const auto colon = label.find(':');
        std::string category_text = label.substr(0, colon);
        if (colon != std::string::npos) prompt.attack = label.substr(colon + 1);
        if (category_text == "benign") prompt.category = CG_CATEGORY_BENIGN;
        else if (category_text == "harmful") prompt.category = CG_CATEGORY_HARMFUL;
        else if (category_text == "jailbreak") prompt.category = CG_CATEGORY_JAILBREAK;
        else {
            fail(CG_ERR_PARSE, path + ":" + std::to_string(line_no) +
                                   ": label must start with benign/harmful/jailbreak, got '" +
                                   label + "'");
        }
        long value = 0;
        while (fields >> value) {
            if (value < 0) {
                fail(CG_ERR_PARSE,
                     path + ":" + std::to_string(line_no) + ": negative token id");
            }
            prompt.tokens.push_back(static_cast<int32_t>(value));
        }
        if (!fields.eof()) {
            fail(CG_ERR_PARSE,
                 path + ":" + std::to_string(line_no) + ": token ids must be integers");
        }
        if (prompt.tokens.empty()) {
            fail(CG_ERR_PARSE, path + ":" + std::to_string(line_no) + ": no token ids");
        }
        char id_buffer[16];
        std::snprintf(id_buffer, sizeof(id_buffer), "p%04zu", prompts.size());
        prompt.id = id_buffer;
        prompts.push_back(std::move(prompt));
    }
    if (prompts.empty()) fail(CG_ERR_PARSE, path + ": no prompts");
    return prompts;
}

/* ---- toy model flags ---------------------------------------------------- */

struct ModelFlags {
    cg_model_config config{};
    bool any_set = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
    cg_model_config_init(&flags.config);
    auto mark = [&flags]() { flags.any_set = true; };
    cmd->add_option("--model-layers", flags.config.num_layers, "toy model layer count")
        ->each([mark](const std::string&) { mark(); });
    cmd->add_option("--model-dim", flags.config.dim, "toy model embedding size")
        ->each([mark](const std::string&) { mark(); });
    cmd->add_option("--model-heads", flags.config.num_heads, "toy model attention heads")
        ->each([mark](const std::string&) { mark(); });
    cmd->add_option("--model-vocab", flags.config.vocab_size, "toy model vocabulary size")
        ->each([mark](const std::string&) { mark(); });
    cmd->add_option("--model-seq", flags.config.max_seq_len, "toy model max sequence length")
        ->each([mark](const std::string&) { mark(); });
    cmd->add_option("--model-seed", flags.config.seed, "toy model weight seed")
        ->each([mark](const std::string&) { mark(); });
}

ModelPtr make_model(const ModelFlags& flags) {
    cg_model* raw = nullptr;
    check(cg_model_create(&flags.config, &raw));
    return ModelPtr(raw);
}

/* ---- detection reports --------------------------------------------------- */

struct MetricsBlock {
    bool present = false;
    int64_t count = 0;
    cg_metrics values{};
};

struct DetectReport {
    VerdictsPtr verdicts;
    MetricsBlock balanced;
    MetricsBlock full;
};

MetricsBlock compute_block(const std::vector<int32_t>& predicted,
                           const std::vector<int32_t>& labels) {
    MetricsBlock block;
    block.count = static_cast<int64_t>(predicted.size());
    if (predicted.empty()) return block;
    check(cg_compute_metrics(predicted.data(), labels.data(),
                             static_cast<int64_t>(predicted.size()), &block.values));
    block.present = true;
    return block;
}

// Balanced protocol: equal numbers of benign and jailbreak records, in
// dataset order; harmful records are excluded. Full protocol: every record,
// jailbreak as the positive class.
DetectReport run_detection(const cg_dataset* dataset, const cg_profile* profile) {
    DetectReport report;
    cg_verdicts* raw = nullptr;
    check(cg_detect(dataset, profile, &raw));
    report.verdicts.reset(raw);

    const int64_t count = cg_verdicts_count(report.verdicts.get());
    std::vector<int32_t> full_predicted, full_labels;
    std::vector<int64_t> benign_indices, jailbreak_indices;
    for (int64_t i = 0; i < count; ++i) {
        const cg_category category = cg_dataset_record_category(dataset, i);
        full_predicted.push_back(cg_verdicts_is_jailbreak(report.verdicts.get(), i));
        full_labels.push_back(category == CG_CATEGORY_JAILBREAK ? 1 : 0);
        if (category == CG_CATEGORY_BENIGN) benign_indices.push_back(i);
        if (category == CG_CATEGORY_JAILBREAK) jailbreak_indices.push_back(i);
    }
    report.full = compute_block(full_predicted, full_labels);

    const std::size_t balanced_count = std::min(benign_indices.size(), jailbreak_indices.size());
    std::vector<int32_t> balanced_predicted, balanced_labels;
    for (std::size_t i = 0; i < balanced_count; ++i) {
        balanced_predicted.push_back(
            cg_verdicts_is_jailbreak(report.verdicts.get(), benign_indices[i]));
        balanced_labels.push_back(0);
        balanced_predicted.push_back(
            cg_verdicts_is_jailbreak(report.verdicts.get(), jailbreak_indices[i]));
        balanced_labels.push_back(1);
    }
    report.balanced = compute_block(balanced_predicted, balanced_labels);
    return report;
}

std::string metrics_line(const char* name, const MetricsBlock& block) {
    if (!block.present) {
        return std::string("[metrics ") + name + "] absent (needs benign and jailbreak records)\n";
    }
    std::string out = std::string("[metrics ") + name + "] n=" + std::to_string(block.count);
    out += " accuracy=" + fmt_fixed(block.values.accuracy);
    out += " precision=" + fmt_fixed(block.values.precision);
    out += " recall=" + fmt_fixed(block.values.recall);
    out += " f1=" + fmt_fixed(block.values.f1);
    out += " tp=" + std::to_string(block.values.tp) + " fp=" + std::to_string(block.values.fp);
    out += " tn=" + std::to_string(block.values.tn) + " fn=" + std::to_string(block.values.fn);
    out += "\n";
    return out;
}

std::string metrics_json(const char* name, const MetricsBlock& block) {
    std::string out = "{\"metrics\":" + json_escape(name);
    out += ",\"present\":" + std::string(block.present ? "true" : "false");
    out += ",\"n\":" + std::to_string(block.count);
    if (block.present) {
        out += ",\"accuracy\":" + fmt_shortest(block.values.accuracy);
        out += ",\"precision\":" + fmt_shortest(block.values.precision);
        out += ",\"recall\":" + fmt_shortest(block.values.recall);
        out += ",\"f1\":" + fmt_shortest(block.values.f1);
        out += ",\"tp\":" + std::to_string(block.values.tp);
        out += ",\"fp\":" + std::to_string(block.values.fp);
        out += ",\"tn\":" + std::to_string(block.values.tn);
        out += ",\"fn\":" + std::to_string(block.values.fn);
    }
    out += "}\n";
    return out;
}

/* ---- subcommand payloads -------------------------------------------------- */

int cmd_synth(const cg_synth_spec& spec, const std::string& out_path) {
    cg_dataset* raw = nullptr;
    check(cg_synth(&spec, &raw));
    DatasetPtr dataset(raw);
    check(cg_dataset_write(dataset.get(), out_path.c_str()));
    std::cout << "wrote " << cg_dataset_count(dataset.get()) << " records to " << out_path
              << "\n";
    return 0;
}

int cmd_embed(const std::string& prompts_path, const ModelFlags& flags,
              const std::string& out_path) {
    const auto prompts = read_prompts_file(prompts_path);
    ModelPtr model = make_model(flags);
    const int32_t num_layers = flags.config.num_layers;
    const int32_t dim = flags.config.dim;

    cg_dataset* raw = nullptr;
    check(cg_dataset_create(cg_model_id(model.get()), num_layers, dim, &raw));
    DatasetPtr dataset(raw);

    std::vector<float> layers(static_cast<std::size_t>(num_layers) * dim);
    for (const auto& prompt : prompts) {
        check(cg_model_embed(model.get(), prompt.tokens.data(),
                             static_cast<int32_t>(prompt.tokens.size()), nullptr, 0,
                             layers.data()));
        check(cg_dataset_add_record(dataset.get(), prompt.id.c_str(), prompt.category,
                                    prompt.attack.empty() ? nullptr : prompt.attack.c_str(),
                                    layers.data()));
    }
    check(cg_dataset_write(dataset.get(), out_path.c_str()));
    std::cout << "embedded " << prompts.size() << " prompts to " << out_path << "\n";
    return 0;
}

int cmd_calibrate(const std::string& dump_path, int32_t n_calib, uint64_t seed,
                  const std::string& out_path) {
    DatasetPtr dataset = read_dataset(dump_path);
    cg_profile* raw = nullptr;
    check(cg_calibrate(dataset.get(), n_calib, seed, &raw));
    ProfilePtr profile(raw);
    const std::string warnings = cg_last_warnings();
    if (!warnings.empty()) {
        std::cerr << "warning: " << warnings << "\n";
    }
    check(cg_profile_write(profile.get(), out_path.c_str()));
    std::cout << "profile: l_t=" << cg_profile_toxic_layer(profile.get())
              << " l_j=" << cg_profile_jailbreak_layer(profile.get())
              << " T_t=" << fmt_fixed(cg_profile_toxic_threshold(profile.get()), 6)
              << " T_j=" << fmt_fixed(cg_profile_jailbreak_threshold(profile.get()), 6)
              << " delta_t=" << fmt_fixed(cg_profile_delta_toxic(profile.get()), 6)
              << " delta_j=" << fmt_fixed(cg_profile_delta_jailbreak(profile.get()), 6)
              << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_detect(const std::string& dump_path, const std::string& profile_path,
               const std::optional<std::string>& out_path,
               const std::optional<std::string>& json_path) {
    DatasetPtr dataset = read_dataset(dump_path);
    ProfilePtr profile = read_profile(profile_path);
    const DetectReport report = run_detection(dataset.get(), profile.get());
    const int64_t count = cg_verdicts_count(report.verdicts.get());

    std::string text = "# conceptguard detect\n";
    text += "# dataset=" + std::string(cg_dataset_model_id(dataset.get())) +
            " records=" + std::to_string(count);
    text += " profile=" + std::string(cg_profile_model_id(profile.get()));
    if (const char* tag = cg_profile_attack_tag(profile.get())) {
        text += " attack=" + std::string(tag);
    }
    text += "\n# id s_t s_j toxic_active jailbreak_active is_jailbreak\n";
    for (int64_t i = 0; i < count; ++i) {
        text += cg_verdicts_prompt_id(report.verdicts.get(), i);
        text += " " + fmt_fixed(cg_verdicts_toxic_score(report.verdicts.get(), i), 6);
        text += " " + fmt_fixed(cg_verdicts_jailbreak_score(report.verdicts.get(), i), 6);
        text += " " + std::to_string(cg_verdicts_toxic_active(report.verdicts.get(), i));
        text += " " + std::to_string(cg_verdicts_jailbreak_active(report.verdicts.get(), i));
        text += " " + std::to_string(cg_verdicts_is_jailbreak(report.verdicts.get(), i));
        text += "\n";
    }
    text += metrics_line("balanced", report.balanced);
    text += metrics_line("full", report.full);
    emit(out_path, text);

    if (json_path) {
        std::string json;
        for (int64_t i = 0; i < count; ++i) {
            json += "{\"id\":" +
                    json_escape(cg_verdicts_prompt_id(report.verdicts.get(), i));
            json += ",\"s_t\":" +
                    fmt_shortest(cg_verdicts_toxic_score(report.verdicts.get(), i));
            json += ",\"s_j\":" +
                    fmt_shortest(cg_verdicts_jailbreak_score(report.verdicts.get(), i));
            json += ",\"toxic_active\":" +
                    std::string(cg_verdicts_toxic_active(report.verdicts.get(), i) ? "true"
                                                                                   : "false");
            json += ",\"jailbreak_active\":" +
                    std::string(cg_verdicts_jailbreak_active(report.verdicts.get(), i)
                                    ? "true"
                                    : "false");
            json += ",\"is_jailbreak\":" +
                    std::string(cg_verdicts_is_jailbreak(report.verdicts.get(), i) ? "true"
                                                                                   : "false");
            json += "}\n";
        }
        json += metrics_json("balanced", report.balanced);
        json += metrics_json("full", report.full);
        write_output(*json_path, json);
    }
    return 0;
}

int cmd_steer(const std::string& prompts_path, const std::string& profile_path,
              const ModelFlags& flags, const std::string& mode, int32_t max_new,
              const std::optional<std::string>& out_path) {
    if (mode != "gated" && mode != "always") {
        fail(CG_ERR_INVALID_ARGUMENT, "--mode must be 'gated' or 'always'");
    }
    const bool gated = mode == "gated";
    const auto prompts = read_prompts_file(prompts_path);
    ProfilePtr profile = read_profile(profile_path);
    ModelPtr model = make_model(flags);

    const int32_t num_layers = flags.config.num_layers;
    const int32_t dim = flags.config.dim;
    if (num_layers != cg_profile_num_layers(profile.get()) ||
        dim != cg_profile_dim(profile.get())) {
        fail(CG_ERR_DIMENSION_MISMATCH,
             "model is " + std::to_string(num_layers) + "x" + std::to_string(dim) +
                 ", profile needs " + std::to_string(cg_profile_num_layers(profile.get())) + "x" +
                 std::to_string(cg_profile_dim(profile.get())));
    }

    // Detect on the unedited pass, through the same path detect uses.
    cg_dataset* raw_dataset = nullptr;
    check(cg_dataset_create(cg_model_id(model.get()), num_layers, dim, &raw_dataset));
    DatasetPtr dataset(raw_dataset);
    std::vector<std::vector<float>> clean_layers;
    clean_layers.reserve(prompts.size());
    for (const auto& prompt : prompts) {
        std::vector<float> layers(static_cast<std::size_t>(num_layers) * dim);
        check(cg_model_embed(model.get(), prompt.tokens.data(),
                             static_cast<int32_t>(prompt.tokens.size()), nullptr, 0,
                             layers.data()));
        check(cg_dataset_add_record(dataset.get(), prompt.id.c_str(), prompt.category,
                                    prompt.attack.empty() ? nullptr : prompt.attack.c_str(),
                                    layers.data()));
        clean_layers.push_back(std::move(layers));
    }
    cg_verdicts* raw_verdicts = nullptr;
    check(cg_detect(dataset.get(), profile.get(), &raw_verdicts));
    VerdictsPtr verdicts(raw_verdicts);

    cg_edit edits[2];
    check(cg_mitigation_edits(profile.get(), edits));

    // Post-edit embeddings go through the same detection path, so the
    // pre/post comparison below is apples to apples.
    cg_dataset* raw_edited = nullptr;
    check(cg_dataset_create(cg_model_id(model.get()), num_layers, dim, &raw_edited));
    DatasetPtr edited_dataset(raw_edited);
    const int32_t l_t = cg_profile_toxic_layer(profile.get());
    const int32_t l_j = cg_profile_jailbreak_layer(profile.get());
    const float* v_t = cg_profile_vector_data(profile.get(), CG_VECTOR_TOXIC_DIRECTION);
    const float* v_j = cg_profile_vector_data(profile.get(), CG_VECTOR_JAILBREAK_DIRECTION);

    const auto project = [dim](const float* layer, const float* direction) {
        double acc = 0.0;
        for (int32_t i = 0; i < dim; ++i) {
            acc += static_cast<double>(layer[i]) * static_cast<double>(direction[i]);
        }
        return acc;
    };
    const auto detok = [&model](const std::vector<int32_t>& ids) {
        std::string out;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i > 0) out += ' ';
            out += cg_model_token_text(model.get(), ids[i]);
        }
        return out;
    };

    std::string text = "# conceptguard steer mode=" + mode + "\n";
    std::vector<float> edited_layers(static_cast<std::size_t>(num_layers) * dim);
    std::vector<std::size_t> steered_prompts; // indices into prompts
    for (std::size_t p = 0; p < prompts.size(); ++p) {
        const auto& prompt = prompts[p];
        const bool flagged =
            cg_verdicts_is_jailbreak(verdicts.get(), static_cast<int64_t>(p)) != 0;
        const bool apply_edits = !gated || flagged;

        std::vector<int32_t> unedited(prompt.tokens.size() + static_cast<std::size_t>(max_new));
        int32_t unedited_len = 0;
        check(cg_model_generate(model.get(), prompt.tokens.data(),
                                static_cast<int32_t>(prompt.tokens.size()), max_new, nullptr, 0,
                                unedited.data(), &unedited_len));
        unedited.resize(static_cast<std::size_t>(unedited_len));

        text += prompt.id;
        text += " verdict=" + std::to_string(flagged ? 1 : 0);
        text += " s_t=" + fmt_fixed(cg_verdicts_toxic_score(verdicts.get(),
                                                            static_cast<int64_t>(p)), 6);
        text += " s_j=" + fmt_fixed(cg_verdicts_jailbreak_score(verdicts.get(),
                                                                static_cast<int64_t>(p)), 6);
        const float* pre = clean_layers[p].data();
        text += " pre_proj_t=" + fmt_fixed(project(pre + static_cast<std::size_t>(l_t) * dim, v_t), 6);
        text += " pre_proj_j=" + fmt_fixed(project(pre + static_cast<std::size_t>(l_j) * dim, v_j), 6);

        if (apply_edits) {
            check(cg_model_embed(model.get(), prompt.tokens.data(),
                                 static_cast<int32_t>(prompt.tokens.size()), edits, 2,
                                 edited_layers.data()));
            const float* post = edited_layers.data();
            text += " post_proj_t=" +
                    fmt_fixed(project(post + static_cast<std::size_t>(l_t) * dim, v_t), 6);
            text += " post_proj_j=" +
                    fmt_fixed(project(post + static_cast<std::size_t>(l_j) * dim, v_j), 6);
            check(cg_dataset_add_record(edited_dataset.get(), prompt.id.c_str(), prompt.category,
                                        prompt.attack.empty() ? nullptr : prompt.attack.c_str(),
                                        edited_layers.data()));
            steered_prompts.push_back(p);

            std::vector<int32_t> steered(prompt.tokens.size() +
                                         static_cast<std::size_t>(max_new));
            int32_t steered_len = 0;
            check(cg_model_generate(model.get(), prompt.tokens.data(),
                                    static_cast<int32_t>(prompt.tokens.size()), max_new, edits, 2,
                                    steered.data(), &steered_len));
            steered.resize(static_cast<std::size_t>(steered_len));
            text += "\n  unedited: " + detok(unedited);
            text += "\n  steered:  " + detok(steered) + "\n";
        } else {
            text += " steering=skipped\n  unedited: " + detok(unedited) + "\n";
        }
    }

    // Desk-scale mitigation proxy (no content-level success judging exists at
    // toy scale): activation rates before/after the edits, and how many
    // flagged verdicts the edits flipped.
    if (!steered_prompts.empty()) {
        cg_verdicts* raw_post = nullptr;
        check(cg_detect(edited_dataset.get(), profile.get(), &raw_post));
        VerdictsPtr post_verdicts(raw_post);
        int64_t pre_flagged = 0, post_flagged = 0, flipped = 0;
        for (std::size_t i = 0; i < steered_prompts.size(); ++i) {
            const bool pre_flag = cg_verdicts_is_jailbreak(
                                      verdicts.get(),
                                      static_cast<int64_t>(steered_prompts[i])) != 0;
            const bool post_flag =
                cg_verdicts_is_jailbreak(post_verdicts.get(), static_cast<int64_t>(i)) != 0;
            pre_flagged += pre_flag ? 1 : 0;
            post_flagged += post_flag ? 1 : 0;
            flipped += (pre_flag && !post_flag) ? 1 : 0;
        }
        const auto rate = [](int64_t count, std::size_t total) {
            return fmt_fixed(static_cast<double>(count) / static_cast<double>(total));
        };
        text += "[mitigation proxy] steered=" + std::to_string(steered_prompts.size()) +
                " pre_activation_rate=" + rate(pre_flagged, steered_prompts.size()) +
                " post_activation_rate=" + rate(post_flagged, steered_prompts.size()) +
                " verdict_flips=" + std::to_string(flipped) + "/" + std::to_string(pre_flagged) +
                "\n";
    }
    emit(out_path, text);
    return 0;
}

int cmd_eval(const std::vector<std::string>& dump_paths,
             const std::vector<std::string>& profile_paths,
             const std::optional<std::string>& out_path,
             const std::optional<std::string>& json_path) {
    struct Cell {
        bool ok = false;
        std::string error;
        MetricsBlock balanced;
        double jailbreak_recall = 0.0;
    };

    const auto start = std::chrono::steady_clock::now();
    std::vector<DatasetPtr> datasets;
    for (const auto& path : dump_paths) datasets.push_back(read_dataset(path));
    std::vector<ProfilePtr> profiles;
    for (const auto& path : profile_paths) profiles.push_back(read_profile(path));

    std::vector<std::vector<Cell>> grid(profiles.size(), std::vector<Cell>(datasets.size()));
    for (std::size_t row = 0; row < profiles.size(); ++row) {
        for (std::size_t col = 0; col < datasets.size(); ++col) {
            Cell& cell = grid[row][col];
            try {
                const DetectReport report =
                    run_detection(datasets[col].get(), profiles[row].get());
                cell.balanced = report.balanced;
                if (report.balanced.present) {
                    const auto& counts = report.balanced.values;
                    cell.jailbreak_recall = counts.recall;
                    cell.ok = true;
                } else {
                    cell.error = "dataset lacks benign/jailbreak records";
                }
            } catch (const CliError& error) {
                cell.error = error.message; // a failed cell is reported, not fatal
            }
        }
    }

    std::string text = "# conceptguard eval (rows=profiles, cols=dumps, balanced accuracy/F1)\n";
    for (std::size_t col = 0; col < dump_paths.size(); ++col) {
        text += "# dump[" + std::to_string(col) + "] = " + dump_paths[col] + "\n";
    }
    for (std::size_t row = 0; row < profile_paths.size(); ++row) {
        text += "# profile[" + std::to_string(row) + "] = " + profile_paths[row];
        if (const char* tag = cg_profile_attack_tag(profiles[row].get())) {
            text += " (attack=" + std::string(tag) + ")";
        }
        text += "\n";
    }
    for (std::size_t row = 0; row < grid.size(); ++row) {
        text += "profile[" + std::to_string(row) + "]";
        for (std::size_t col = 0; col < grid[row].size(); ++col) {
            const Cell& cell = grid[row][col];
            if (cell.ok) {
                text += "  " + fmt_fixed(cell.balanced.values.accuracy) + "/" +
                        fmt_fixed(cell.balanced.values.f1);
            } else {
                text += "  error";
            }
        }
        text += "\n";
    }
    for (std::size_t row = 0; row < grid.size(); ++row) {
        for (std::size_t col = 0; col < grid[row].size(); ++col) {
            const Cell& cell = grid[row][col];
            if (!cell.ok) {
                text += "# cell " + std::to_string(row) + "," + std::to_string(col) +
                        " failed: " + cell.error + "\n";
            }
        }
    }
    emit(out_path, text);

    if (json_path) {
        std::string json;
        for (std::size_t row = 0; row < grid.size(); ++row) {
            for (std::size_t col = 0; col < grid[row].size(); ++col) {
                const Cell& cell = grid[row][col];
                json += "{\"profile\":" + json_escape(profile_paths[row]);
                json += ",\"dump\":" + json_escape(dump_paths[col]);
                json += ",\"ok\":" + std::string(cell.ok ? "true" : "false");
                if (cell.ok) {
                    json += ",\"accuracy\":" + fmt_shortest(cell.balanced.values.accuracy);
                    json += ",\"f1\":" + fmt_shortest(cell.balanced.values.f1);
                    json += ",\"jailbreak_recall\":" + fmt_shortest(cell.jailbreak_recall);
                } else {
                    json += ",\"error\":" + json_escape(cell.error);
                }
                json += "}\n";
            }
        }
        write_output(*json_path, json);
    }

    // timing stays out of the report files so reruns stay byte-identical
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "# eval: " << grid.size() * (grid.empty() ? 0 : grid[0].size()) << " cells in "
              << fmt_fixed(elapsed, 3) << "s\n";
    return 0;
}

int cmd_tokens(const std::string& profile_path, const ModelFlags& flags,
               const std::optional<std::string>& vocab_path, int32_t k) {
    ProfilePtr profile = read_profile(profile_path);
    VocabPtr vocab;
    if (vocab_path) {
        cg_vocab* raw = nullptr;
        check(cg_vocab_read(vocab_path->c_str(), &raw));
        vocab.reset(raw);
    } else if (flags.any_set) {
        ModelPtr model = make_model(flags);
        cg_vocab* raw = nullptr;
        check(cg_model_vocab(model.get(), &raw));
        vocab.reset(raw);
    } else {
        fail(CG_ERR_MISSING_VOCAB,
             "no vocabulary source: pass --vocab FILE or the --model-* flags");
    }
    if (cg_vocab_dim(vocab.get()) != cg_profile_dim(profile.get())) {
        fail(CG_ERR_DIMENSION_MISMATCH,
             "vocab dim " + std::to_string(cg_vocab_dim(vocab.get())) + " does not match profile dim " +
                 std::to_string(cg_profile_dim(profile.get())));
    }

    const auto print_concept = [&](const char* name, cg_profile_vector which) {
        const float* direction = cg_profile_vector_data(profile.get(), which);
        std::vector<int32_t> ids(static_cast<std::size_t>(k));
        std::vector<double> scores(static_cast<std::size_t>(k));
        check(cg_vocab_concept_tokens(vocab.get(), direction, cg_profile_dim(profile.get()), k,
                                      ids.data(), scores.data()));
        std::cout << name << ":";
        for (int32_t i = 0; i < k; ++i) {
            std::cout << " " << cg_vocab_token_text(vocab.get(), ids[static_cast<std::size_t>(i)])
                      << "(" << fmt_fixed(scores[static_cast<std::size_t>(i)], 4) << ")";
        }
        std::cout << "\n";
    };
    print_concept("toxic", CG_VECTOR_TOXIC_DIRECTION);
    print_concept("jailbreak", CG_VECTOR_JAILBREAK_DIRECTION);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"concept-subspace jailbreak detection and steering toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from an INI file; explicit flags win");

    // synth
    cg_synth_spec spec;
    cg_synth_spec_init(&spec);
    std::string synth_out, synth_attack, synth_model_id = "planted";
    bool no_toxic_in_jailbreak = false;
    auto* synth_cmd = app.add_subcommand("synth", "generate a planted-concept dataset");
    synth_cmd->add_option("--out", synth_out, ".ced output path")->required();
    synth_cmd->add_option("--layers", spec.num_layers, "layer count");
    synth_cmd->add_option("--dim", spec.dim, "embedding size");
    synth_cmd->add_option("--toxic-layer", spec.toxic_layer, "layer carrying the toxic offset");
    synth_cmd->add_option("--jailbreak-layer", spec.jailbreak_layer,
                          "layer carrying the jailbreak offset");
    synth_cmd->add_option("--alpha", spec.alpha, "toxic separation magnitude");
    synth_cmd->add_option("--beta", spec.beta, "jailbreak separation magnitude");
    synth_cmd->add_option("--sigma", spec.sigma, "expected per-layer noise norm");
    synth_cmd->add_option("--base-scale", spec.base_scale, "shared base vector norm");
    synth_cmd->add_option("--benign", spec.benign_count, "benign record count");
    synth_cmd->add_option("--harmful", spec.harmful_count, "harmful record count");
    synth_cmd->add_option("--jailbreak", spec.jailbreak_count, "jailbreak record count");
    synth_cmd->add_option("--seed", spec.seed, "noise seed");
    synth_cmd->add_option("--direction-seed", spec.direction_seed,
                          "direction seed (0 = derive from --seed)");
    synth_cmd->add_option("--jailbreak-variant", spec.jailbreak_direction_variant,
                          "index into the orthonormal jailbreak-direction chain");
    synth_cmd->add_flag("--no-toxic-in-jailbreak", no_toxic_in_jailbreak,
                        "drop the toxic offset from jailbreak records");
    synth_cmd->add_option("--attack", synth_attack, "attack tag for jailbreak records");
    synth_cmd->add_option("--model-id", synth_model_id, "model id written to the dump header");

    // embed
    std::string embed_prompts, embed_out;
    ModelFlags embed_flags;
    auto* embed_cmd = app.add_subcommand("embed", "run prompts through the toy model");
    embed_cmd->add_option("--prompts", embed_prompts, "prompts file (label + token ids per line)")
        ->required();
    embed_cmd->add_option("--out", embed_out, ".ced output path")->required();
    add_model_flags(embed_cmd, embed_flags);

    // calibrate
    std::string calibrate_dump, calibrate_out;
    int32_t n_calib = 30;
    uint64_t calibrate_seed = 0;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "build a profile from a dump");
    calibrate_cmd->add_option("--dump", calibrate_dump, ".ced input")->required();
    calibrate_cmd->add_option("--out", calibrate_out, "profile output path")->required();
    calibrate_cmd->add_option("--n-calib", n_calib, "records sampled per category (default 30)");
    calibrate_cmd->add_option("--seed", calibrate_seed, "sampling / pairing seed");

    // detect
    std::string detect_dump, detect_profile;
    std::string detect_out, detect_json;
    auto* detect_cmd = app.add_subcommand("detect", "score a dump against a profile");
    detect_cmd->add_option("--dump", detect_dump, ".ced input")->required();
    detect_cmd->add_option("--profile", detect_profile, "profile input")->required();
    detect_cmd->add_option("--out", detect_out, "report path (default stdout)");
    detect_cmd->add_option("--json", detect_json, "machine-readable report path");

    // steer
    std::string steer_prompts, steer_profile, steer_mode = "gated";
    std::string steer_out;
    int32_t steer_max_new = 16;
    ModelFlags steer_flags;
    auto* steer_cmd = app.add_subcommand("steer", "generate with mitigation edits");
    steer_cmd->add_option("--prompts", steer_prompts, "prompts file")->required();
    steer_cmd->add_option("--profile", steer_profile, "profile input")->required();
    steer_cmd->add_option("--mode", steer_mode, "gated (edit only flagged prompts) or always");
    steer_cmd->add_option("--max-new", steer_max_new, "tokens to generate per prompt");
    steer_cmd->add_option("--out", steer_out, "report path (default stdout)");
    add_model_flags(steer_cmd, steer_flags);

    // eval
    std::vector<std::string> eval_dumps, eval_profiles;
    std::string eval_out, eval_json;
    auto* eval_cmd = app.add_subcommand("eval", "cross-evaluate dumps against profiles");
    eval_cmd->add_option("--dumps", eval_dumps, ".ced inputs")->required()->expected(-1);
    eval_cmd->add_option("--profiles", eval_profiles, "profile inputs")->required()->expected(-1);
    eval_cmd->add_option("--out", eval_out, "report path (default stdout)");
    eval_cmd->add_option("--json", eval_json, "machine-readable report path");

    // tokens
    std::string tokens_profile, tokens_vocab;
    int32_t tokens_k = 4;
    ModelFlags tokens_flags;
    auto* tokens_cmd = app.add_subcommand("tokens", "top-k tokens aligned with each concept");
    tokens_cmd->add_option("--profile", tokens_profile, "profile input")->required();
    tokens_cmd->add_option("--vocab", tokens_vocab, "sidecar vocab projection file");
    tokens_cmd->add_option("--k", tokens_k, "tokens per concept (default 4)");
    add_model_flags(tokens_cmd, tokens_flags);

    CLI11_PARSE(app, argc, argv);

    const auto opt = [](const std::string& value) -> std::optional<std::string> {
        if (value.empty()) return std::nullopt;
        return value;
    };

    try {
        if (synth_cmd->parsed()) {
            spec.jailbreak_retains_toxic = no_toxic_in_jailbreak ? 0 : 1;
            spec.attack_tag = synth_attack.empty() ? nullptr : synth_attack.c_str();
            spec.model_id = synth_model_id.c_str();
            return cmd_synth(spec, synth_out);
        }
        if (embed_cmd->parsed()) return cmd_embed(embed_prompts, embed_flags, embed_out);
        if (calibrate_cmd->parsed()) {
            return cmd_calibrate(calibrate_dump, n_calib, calibrate_seed, calibrate_out);
        }
        if (detect_cmd->parsed()) {
            return cmd_detect(detect_dump, detect_profile, opt(detect_out), opt(detect_json));
        }
        if (steer_cmd->parsed()) {
            return cmd_steer(steer_prompts, steer_profile, steer_flags, steer_mode,
                             steer_max_new, opt(steer_out));
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_dumps, eval_profiles, opt(eval_out), opt(eval_json));
        }
        if (tokens_cmd->parsed()) {
            return cmd_tokens(tokens_profile, tokens_flags, opt(tokens_vocab), tokens_k);
        }
    } catch (const CliError& error) {
        const std::string prefix = std::string(cg_status_name(error.status)) + ": ";
        if (error.message.rfind(prefix, 0) == 0) {
            std::cerr << "error: " << error.message << "\n";
        } else {
            std::cerr << "error: " << prefix << error.message << "\n";
        }
        return static_cast<int>(error.status);
    }
    return 0;
}
