#pragma once

#include <cstddef>
#include <vector>

#include "fervit/errors.hpp"

namespace fervit {

// Value-range tag. Transitions only raw -> unit -> normalized.
enum class ValueRange {
    raw_0_255,
    unit_0_1,
    normalized,
};

// Dense float image, CHW layout. 1 channel before replication, 3 after.
struct ImageTensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    ValueRange range = ValueRange::raw_0_255;
    std::vector<float> data; // channels * height * width

    ImageTensor() = default;
    ImageTensor(std::size_t c, std::size_t h, std::size_t w,
                ValueRange r = ValueRange::raw_0_255)
        : channels(c), height(h), width(w), range(r), data(c * h * w, 0.0f) {}

    float& at(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * height + y) * width + x];
    }
    float at(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * height + y) * width + x];
    }

    std::size_t size() const { return data.size(); }
};

} // namespace fervit
