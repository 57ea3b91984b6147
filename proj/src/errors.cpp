#include "fervit/errors.hpp"

namespace fervit {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::empty_class: return "EmptyClass";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::degenerate_split: return "DegenerateSplit";
    case Errc::format_error: return "FormatError";
    case Errc::unknown_label: return "UnknownLabel";
    case Errc::channels_mismatch: return "ChannelsMismatch";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::range_error: return "RangeError";
    case Errc::invalid_target: return "InvalidTarget";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::missing_parameter: return "MissingParameter";
    case Errc::invalid_accumulation: return "InvalidAccumulation";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_evaluation: return "EmptyEvaluation";
    case Errc::config_error: return "ConfigError";
    }
    return "UnknownError";
}

} // namespace fervit
