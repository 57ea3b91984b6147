#include "fervit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fervit {

ImageTensor gray_to_rgb(const ImageTensor& img) {
    if (img.channels != 1)
        raise(Errc::channels_mismatch,
              "gray_to_rgb expects 1 channel, got " + std::to_string(img.channels));
    ImageTensor out(3, img.height, img.width, img.range);
    for (std::size_t c = 0; c < 3; ++c)
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + c * img.height * img.width);
    return out;
}

ImageTensor resize_bilinear(const ImageTensor& img, std::size_t out_h, std::size_t out_w,
                            ResizeConvention conv) {
    if (out_h == 0 || out_w == 0)
        raise(Errc::dimension_mismatch, "resize target must be positive");
    if (out_h == img.height && out_w == img.width) return img;

    ImageTensor out(img.channels, out_h, out_w, img.range);
    const std::size_t in_h = img.height, in_w = img.width;

    auto src_coord = [conv](std::size_t dst, std::size_t out_n, std::size_t in_n) {
        if (in_n == 1) return 0.0;
        if (conv == ResizeConvention::align_corners && out_n > 1)
            return static_cast<double>(dst) * static_cast<double>(in_n - 1) /
                   static_cast<double>(out_n - 1);
        const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
        return (static_cast<double>(dst) + 0.5) * scale - 0.5;
    };

    for (std::size_t y = 0; y < out_h; ++y) {
        const double sy = std::clamp(src_coord(y, out_h, in_h), 0.0, double(in_h - 1));
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, in_h - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double sx = std::clamp(src_coord(x, out_w, in_w), 0.0, double(in_w - 1));
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, in_w - 1);
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < img.channels; ++c) {
                // Lerp form keeps constant inputs exact and the result inside
                // [min, max] of the four neighbors.
                const double a = img.at(c, y0, x0);
                const double b = img.at(c, y0, x1);
                const double d = img.at(c, y1, x0);
                const double e = img.at(c, y1, x1);
                const double top = a + fx * (b - a);
                const double bot = d + fx * (e - d);
                out.at(c, y, x) = static_cast<float>(top + fy * (bot - top));
            }
        }
    }
    return out;
}

ImageTensor pad_vertical_white(const ImageTensor& img, std::size_t out_h, float pad_value_raw) {
    if (img.range == ValueRange::normalized)
        raise(Errc::range_error, "pad_vertical_white requires raw or unit range");
    if (out_h < img.height)
        raise(Errc::dimension_mismatch, "pad target height " + std::to_string(out_h) +
                                            " smaller than image height " +
                                            std::to_string(img.height));
    if (out_h == img.height) return img;

    // pad_value is given on raw scale and follows the image's range.
    const float white =
        img.range == ValueRange::raw_0_255 ? pad_value_raw : pad_value_raw / 255.0f;
    const std::size_t top = (out_h - img.height) / 2;

    ImageTensor out(img.channels, out_h, img.width, img.range);
    for (std::size_t c = 0; c < img.channels; ++c) {
        for (std::size_t y = 0; y < out_h; ++y) {
            float* row = &out.at(c, y, 0);
            if (y < top || y >= top + img.height) {
                std::fill(row, row + img.width, white);
            } else {
                const float* src = &img.at(c, y - top, 0);
                std::copy(src, src + img.width, row);
            }
        }
    }
    return out;
}

ImageTensor pad_vertical_white(const ImageTensor& img) {
    if (img.channels != 3 || img.height != 768 || img.width != 768)
        raise(Errc::dimension_mismatch,
              "pad_vertical_white expects 3x768x768, got " + std::to_string(img.channels) + "x" +
                  std::to_string(img.height) + "x" + std::to_string(img.width));
    return pad_vertical_white(img, 1024);
}

ImageTensor to_unit(const ImageTensor& img) {
    if (img.range != ValueRange::raw_0_255)
        raise(Errc::range_error, "to_unit expects raw_0_255 input");
    ImageTensor out = img;
    out.range = ValueRange::unit_0_1;
    for (float& v : out.data) v = v / 255.0f;
    return out;
}

ImageTensor normalize(const ImageTensor& img, const NormalizationSpec& spec) {
    if (img.range != ValueRange::unit_0_1)
        raise(Errc::range_error, "normalize expects unit_0_1 input");
    if (img.channels != 3)
        raise(Errc::channels_mismatch, "normalize expects 3 channels");
    for (float s : spec.std)
        if (!(s > 0.0f)) raise(Errc::range_error, "normalization std must be positive");

    ImageTensor out = img;
    out.range = ValueRange::normalized;
    const std::size_t plane = img.height * img.width;
    for (std::size_t c = 0; c < 3; ++c) {
        float* p = out.data.data() + c * plane;
        const float m = spec.mean[c], s = spec.std[c];
        for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m) / s;
    }
    return out;
}

ImageTensor preprocess(const ImageTensor& img, const PreprocessConfig& cfg) {
    ImageTensor x = img;
    if (x.channels == 1) x = gray_to_rgb(x);
    if (x.channels != 3)
        raise(Errc::channels_mismatch,
              "preprocess expects 1 or 3 channels, got " + std::to_string(x.channels));
    x = resize_bilinear(x, cfg.resize_height, cfg.resize_width, cfg.convention);
    if (cfg.pad_to_height > cfg.resize_height)
        x = pad_vertical_white(x, cfg.pad_to_height, cfg.pad_value);
    if (x.range == ValueRange::raw_0_255) x = to_unit(x);
    return normalize(x, cfg.norm);
}

} // namespace fervit
