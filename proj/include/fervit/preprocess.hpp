#pragma once

#include <array>
#include <cstddef>

#include "fervit/image.hpp"

namespace fervit {

// Per-channel normalization constants on unit scale. The defaults are the
// widely used large-corpus statistics; override via config when the backbone
// expects different ones.
struct NormalizationSpec {
    std::array<float, 3> mean = {0.485f, 0.456f, 0.406f};
    std::array<float, 3> std = {0.229f, 0.224f, 0.225f};
};

enum class ResizeConvention {
    half_pixel,    // src = (dst + 0.5) * scale - 0.5
    align_corners, // src = dst * (in - 1) / (out - 1)
};

// Full deterministic pipeline: resize -> optional vertical white pad ->
// unit scale -> per-channel normalization. pad_to_height == resize height
// disables padding (toy preset); the reference preset is 768x768 padded to
// 768x1024 (width x height).
struct PreprocessConfig {
    std::size_t resize_height = 768;
    std::size_t resize_width = 768;
    std::size_t pad_to_height = 1024;
    float pad_value = 255.0f; // on raw scale; scaled with the image
    NormalizationSpec norm;
    ResizeConvention convention = ResizeConvention::half_pixel;
};

// Replicate a single channel to 3 identical channels.
ImageTensor gray_to_rgb(const ImageTensor& img);

// Bilinear resample with the chosen coordinate convention. Constant images
// map to constant images; identity target size is an exact copy.
ImageTensor resize_bilinear(const ImageTensor& img, std::size_t out_h, std::size_t out_w,
                            ResizeConvention conv = ResizeConvention::half_pixel);

// Pad a 768x768 image to height 1024 with white rows, split evenly top and
// bottom. White is the maximum of the current value range.
ImageTensor pad_vertical_white(const ImageTensor& img);

// General form used by the pipeline; requires out_h >= height. pad_value is
// on raw 0..255 scale and is rescaled when the image is on unit scale.
ImageTensor pad_vertical_white(const ImageTensor& img, std::size_t out_h,
                               float pad_value_raw = 255.0f);

// raw_0_255 -> unit_0_1 (divide by 255).
ImageTensor to_unit(const ImageTensor& img);

// unit_0_1 -> normalized: out[c] = (in[c] - mean[c]) / std[c].
ImageTensor normalize(const ImageTensor& img, const NormalizationSpec& spec);

// decode output (raw or unit) -> model-ready normalized tensor.
ImageTensor preprocess(const ImageTensor& img, const PreprocessConfig& cfg);

} // namespace fervit
