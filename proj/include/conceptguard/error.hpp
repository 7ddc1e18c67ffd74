#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conceptguard {

// Error categories surfaced to callers. Each maps 1:1 onto a C API status
// code, so values must stay stable.
enum class errc {
    ok = 0,
    zero_vector,
    all_zero_rows,
    no_convergence,
    empty_set,
    format_error,
    dimension_mismatch,
    empty_category,
    one_class_only,
    layer_out_of_range,
    duplicate_id,
    invalid_config,
    token_out_of_range,
    sequence_too_long,
    invalid_spec,
    parse_error,
    insufficient_records,
    length_mismatch,
    missing_vocab,
    io_error,
    invalid_argument,
    internal,
};

std::string_view errc_name(errc code);

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& detail) {
    throw Error(code, detail);
}

} // namespace conceptguard
