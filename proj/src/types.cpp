#include "conceptguard/types.hpp"

#include <cmath>
#include <unordered_set>

namespace conceptguard {

std::string_view errc_name(errc code) {
    switch (code) {
    case errc::ok: return "Ok";
    case errc::zero_vector: return "ZeroVector";
    case errc::all_zero_rows: return "AllZeroRows";
    case errc::no_convergence: return "NoConvergence";
    case errc::empty_set: return "EmptySet";
    case errc::format_error: return "FormatError";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::empty_category: return "EmptyCategory";
    case errc::one_class_only: return "OneClassOnly";
    case errc::layer_out_of_range: return "LayerOutOfRange";
    case errc::duplicate_id: return "DuplicateId";
    case errc::invalid_config: return "InvalidConfig";
    case errc::token_out_of_range: return "TokenOutOfRange";
    case errc::sequence_too_long: return "SequenceTooLong";
    case errc::invalid_spec: return "InvalidSpec";
    case errc::parse_error: return "ParseError";
    case errc::insufficient_records: return "InsufficientRecords";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::missing_vocab: return "MissingVocab";
    case errc::io_error: return "IoError";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::internal: return "Internal";
    }
    return "Internal";
}

std::string_view to_string(PromptCategory category) {
    switch (category) {
    case PromptCategory::benign: return "benign";
    case PromptCategory::harmful: return "harmful";
    case PromptCategory::jailbreak: return "jailbreak";
    }
    return "benign";
}

std::optional<PromptCategory> category_from_string(std::string_view text) {
    if (text == "benign") return PromptCategory::benign;
    if (text == "harmful") return PromptCategory::harmful;
    if (text == "jailbreak") return PromptCategory::jailbreak;
    return std::nullopt;
}

void EmbeddingDataset::validate() const {
    if (num_layers <= 0) raise(errc::invalid_argument, "num_layers must be positive");
    if (dim <= 0) raise(errc::invalid_argument, "dim must be positive");
    std::unordered_set<std::string> seen;
    seen.reserve(records.size());
    for (const auto& record : records) {
        if (!seen.insert(record.prompt_id).second) {
            raise(errc::duplicate_id, "duplicate prompt id '" + record.prompt_id + "'");
        }
        if (static_cast<int>(record.layers.size()) != num_layers) {
            raise(errc::dimension_mismatch,
                  "record '" + record.prompt_id + "' has " + std::to_string(record.layers.size()) +
                      " layers, expected " + std::to_string(num_layers));
        }
        for (const auto& layer : record.layers) {
            if (static_cast<int>(layer.size()) != dim) {
                raise(errc::dimension_mismatch,
                      "record '" + record.prompt_id + "' has a layer vector of length " +
                          std::to_string(layer.size()) + ", expected " + std::to_string(dim));
            }
            for (float value : layer) {
                if (!std::isfinite(value)) {
                    raise(errc::invalid_argument,
                          "record '" + record.prompt_id + "' contains a non-finite value");
                }
            }
        }
    }
}

} // namespace conceptguard
