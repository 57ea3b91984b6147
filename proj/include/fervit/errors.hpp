#pragma once

#include <stdexcept>
#include <string>

namespace fervit {

enum class Errc {
    empty_class,
    insufficient_samples,
    degenerate_split,
    format_error,
    unknown_label,
    channels_mismatch,
    dimension_mismatch,
    range_error,
    invalid_target,
    shape_mismatch,
    missing_parameter,
    invalid_accumulation,
    length_mismatch,
    empty_evaluation,
    config_error,
};

const char* errc_name(Errc code);

// Domain error carrying a machine-checkable code next to the message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

} // namespace fervit
