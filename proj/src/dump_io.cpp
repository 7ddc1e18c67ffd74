#include "conceptguard/dump_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace conceptguard {

namespace {

using nlohmann::json;

json parse_line(const std::string& line, const std::string& origin, std::size_t line_no) {
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        raise(errc::format_error, origin + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    return parsed;
}

const json& require_field(const json& object, const char* key, const std::string& origin,
                          std::size_t line_no) {
    auto it = object.find(key);
    if (it == object.end()) {
        raise(errc::format_error, origin + ":" + std::to_string(line_no) + ": missing field '" +
                                      key + "'");
    }
    return *it;
}

float to_float_checked(const json& value, const std::string& origin, std::size_t line_no) {
    if (!value.is_number()) {
        raise(errc::format_error,
              origin + ":" + std::to_string(line_no) + ": non-numeric embedding value");
    }
    const float result = static_cast<float>(value.get<double>());
    if (!std::isfinite(result)) {
        raise(errc::format_error,
              origin + ":" + std::to_string(line_no) + ": non-finite embedding value");
    }
    return result;
}

} // namespace

void append_shortest(std::string& out, float value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    out.append(buffer, result.ptr);
}

void append_shortest(std::string& out, double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    out.append(buffer, result.ptr);
}

void append_json_string(std::string& out, std::string_view text) {
    out += json(text).dump();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string temp_path = path + ".tmp";
    {
        std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            raise(errc::io_error, "cannot open '" + temp_path + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            raise(errc::io_error, "short write to '" + temp_path + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp_path, path, ec);
    if (ec) {
        raise(errc::io_error, "cannot move '" + temp_path + "' to '" + path + "': " + ec.message());
    }
}

EmbeddingDataset read_dump(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        raise(errc::format_error, origin + ": empty file");
    }
    ++line_no;
    const json header = parse_line(line, origin, line_no);

    EmbeddingDataset dataset;
    const json& model_id = require_field(header, "model_id", origin, line_no);
    if (!model_id.is_string()) {
        raise(errc::format_error, origin + ":1: model_id must be a string");
    }
    dataset.model_id = model_id.get<std::string>();
    const json& layers_field = require_field(header, "layers", origin, line_no);
    const json& dim_field = require_field(header, "dim", origin, line_no);
    const json& count_field = require_field(header, "count", origin, line_no);
    if (!layers_field.is_number_integer() || !dim_field.is_number_integer() ||
        !count_field.is_number_integer()) {
        raise(errc::format_error, origin + ":1: layers/dim/count must be integers");
    }
    dataset.num_layers = layers_field.get<int>();
    dataset.dim = dim_field.get<int>();
    const std::int64_t count = count_field.get<std::int64_t>();
    if (dataset.num_layers <= 0 || dataset.dim <= 0 || count < 0) {
        raise(errc::format_error, origin + ":1: header dimensions out of range");
    }

    dataset.records.reserve(static_cast<std::size_t>(count));
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json entry = parse_line(line, origin, line_no);

        PromptEmbeddingRecord record;
        const json& id = require_field(entry, "id", origin, line_no);
        if (!id.is_string()) {
            raise(errc::format_error, origin + ":" + std::to_string(line_no) + ": id must be a string");
        }
        record.prompt_id = id.get<std::string>();

        const json& category = require_field(entry, "category", origin, line_no);
        const auto parsed_category =
            category.is_string() ? category_from_string(category.get<std::string>()) : std::nullopt;
        if (!parsed_category) {
            raise(errc::format_error, origin + ":" + std::to_string(line_no) +
                                          ": category must be one of benign/harmful/jailbreak");
        }
        record.category = *parsed_category;

        if (auto it = entry.find("attack"); it != entry.end() && !it->is_null()) {
            if (!it->is_string()) {
                raise(errc::format_error,
                      origin + ":" + std::to_string(line_no) + ": attack must be a string");
            }
            record.attack_tag = it->get<std::string>();
        }

        const json& layers = require_field(entry, "layers", origin, line_no);
        if (!layers.is_array() || static_cast<int>(layers.size()) != dataset.num_layers) {
            raise(errc::dimension_mismatch,
                  origin + ":" + std::to_string(line_no) + ": record '" + record.prompt_id +
                      "' has " + std::to_string(layers.is_array() ? layers.size() : 0) +
                      " layers, header says " + std::to_string(dataset.num_layers));
        }
        record.layers.reserve(layers.size());
        for (const json& layer : layers) {
            if (!layer.is_array() || static_cast<int>(layer.size()) != dataset.dim) {
                raise(errc::dimension_mismatch,
                      origin + ":" + std::to_string(line_no) + ": record '" + record.prompt_id +
                          "' has a layer of length " +
                          std::to_string(layer.is_array() ? layer.size() : 0) +
                          ", header says " + std::to_string(dataset.dim));
            }
            EmbeddingVector vec;
            vec.reserve(layer.size());
            for (const json& value : layer) {
                vec.push_back(to_float_checked(value, origin, line_no));
            }
            record.layers.push_back(std::move(vec));
        }
        dataset.records.push_back(std::move(record));
    }

    if (static_cast<std::int64_t>(dataset.records.size()) != count) {
        raise(errc::format_error, origin + ": header count " + std::to_string(count) +
                                      " does not match " + std::to_string(dataset.records.size()) +
                                      " record lines");
    }
    dataset.validate();
    return dataset;
}

EmbeddingDataset read_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(errc::io_error, "cannot open '" + path + "' for reading");
    }
    return read_dump(in, path);
}

void write_dump(const EmbeddingDataset& dataset, std::ostream& out) {
    dataset.validate();
    std::string buffer;
    buffer += "{\"model_id\":";
    append_json_string(buffer, dataset.model_id);
    buffer += ",\"layers\":" + std::to_string(dataset.num_layers);
    buffer += ",\"dim\":" + std::to_string(dataset.dim);
    buffer += ",\"count\":" + std::to_string(dataset.records.size());
    buffer += "}\n";

    for (const auto& record : dataset.records) {
        buffer += "{\"id\":";
        append_json_string(buffer, record.prompt_id);
        buffer += ",\"category\":\"";
        buffer += to_string(record.category);
        buffer += "\"";
        if (!record.attack_tag.empty()) {
            buffer += ",\"attack\":";
            append_json_string(buffer, record.attack_tag);
        }
        buffer += ",\"layers\":[";
        for (std::size_t l = 0; l < record.layers.size(); ++l) {
            if (l > 0) buffer += ',';
            buffer += '[';
            const auto& layer = record.layers[l];
            for (std::size_t i = 0; i < layer.size(); ++i) {
                if (i > 0) buffer += ',';
                append_shortest(buffer, layer[i]);
            }
            buffer += ']';
        }
        buffer += "]}\n";
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!out) {
        raise(errc::io_error, "short write while dumping dataset");
    }
}

void write_dump(const EmbeddingDataset& dataset, const std::string& path) {
    std::ostringstream out;
    write_dump(dataset, out);
    write_file_atomic(path, out.str());
}

} // namespace conceptguard
