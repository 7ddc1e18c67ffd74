#pragma once

#include <iosfwd>
#include <string>

#include "conceptguard/types.hpp"

namespace conceptguard {

// Embedding dump format (".ced"): line-oriented text. The first line is a
// JSON header {"model_id","layers","dim","count"}; each following line is one
// record {"id","category","attack"?,"layers":[[...],...]}. Floats are printed
// with their shortest round-trip representation, so write -> read is
// bit-exact at 32-bit precision.
EmbeddingDataset read_dump(const std::string& path);
EmbeddingDataset read_dump(std::istream& in, const std::string& origin);

// Validates the dataset, then writes atomically (temp file + rename).
void write_dump(const EmbeddingDataset& dataset, const std::string& path);
void write_dump(const EmbeddingDataset& dataset, std::ostream& out);

// Shortest round-trip decimal forms, shared by the dump/profile/report
// writers (digits only; no padding).
void append_shortest(std::string& out, float value);
void append_shortest(std::string& out, double value);

// JSON string escaping for the writers above.
void append_json_string(std::string& out, std::string_view text);

// Atomic whole-file write used by everything that persists state or reports.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace conceptguard
