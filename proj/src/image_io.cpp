#include "fervit/image_io.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fervit/adapters.hpp"

namespace fervit {

namespace {

ImageTensor from_cv_mat(const cv::Mat& mat, const std::string& origin) {
    if (mat.empty()) raise(Errc::format_error, "cannot decode image: " + origin);

    cv::Mat m;
    if (mat.depth() != CV_8U) {
        // 16-bit sources scale down to 8-bit.
        const double scale = mat.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
        mat.convertTo(m, CV_8U, scale);
    } else {
        m = mat;
    }

    const std::size_t h = static_cast<std::size_t>(m.rows);
    const std::size_t w = static_cast<std::size_t>(m.cols);

    if (m.channels() == 1) {
        ImageTensor img(1, h, w, ValueRange::raw_0_255);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                img.at(0, y, x) = static_cast<float>(m.at<std::uint8_t>(int(y), int(x)));
        return img;
    }
    if (m.channels() == 3 || m.channels() == 4) {
        ImageTensor img(3, h, w, ValueRange::raw_0_255);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                // OpenCV is BGR(A); store RGB.
                const std::uint8_t* px = m.ptr<std::uint8_t>(int(y)) + x * m.channels();
                img.at(0, y, x) = static_cast<float>(px[2]);
                img.at(1, y, x) = static_cast<float>(px[1]);
                img.at(2, y, x) = static_cast<float>(px[0]);
            }
        }
        return img;
    }
    raise(Errc::format_error,
          "unsupported channel count " + std::to_string(m.channels()) + " in " + origin);
}

// splitmix64; deterministic per-pixel variation for synthetic images.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

ImageTensor render_synthetic(std::size_t label, std::size_t index, std::size_t size) {
    ImageTensor img(3, size, size, ValueRange::raw_0_255);
    const float base = kSyntheticBase + kSyntheticStep * static_cast<float>(label);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                const std::uint64_t h =
                    mix64(mix64(mix64(index * 3 + c) ^ (y * 0x10001ull)) ^ x);
                // variation in [-step/4, step/4) keeps the label bands separated
                const float noise =
                    (static_cast<float>(h >> 40) / 16777216.0f - 0.5f) * (kSyntheticStep / 2.0f);
                img.at(c, y, x) = base + noise;
            }
        }
    }
    return img;
}

std::uint64_t parse_ref_field(const std::string& ref, const std::string& key) {
    const auto pos = ref.find(key + "=");
    if (pos == std::string::npos)
        raise(Errc::format_error, "synthetic ref missing field '" + key + "': " + ref);
    return std::stoull(ref.substr(pos + key.size() + 1));
}

ImageTensor load_fer2013_row(const std::string& ref) {
    const auto hash = ref.find("#row=");
    if (hash == std::string::npos)
        raise(Errc::format_error, "malformed fer2013 ref: " + ref);
    const std::string csv_path = ref.substr(std::string("fer2013://").size(),
                                            hash - std::string("fer2013://").size());
    const std::size_t row = std::stoull(ref.substr(hash + 5));

    // Cache per file: pixel strings keyed by data-row index. thread_local so
    // concurrent loaders stay independent.
    thread_local std::unordered_map<std::string, std::vector<std::string>> cache;
    auto it = cache.find(csv_path);
    if (it == cache.end()) {
        std::ifstream is(csv_path);
        if (!is) raise(Errc::format_error, "cannot open FER-2013 csv: " + csv_path);
        std::string header;
        std::getline(is, header);
        // locate the pixels column
        std::size_t pix_col = 1;
        {
            std::stringstream ss(header);
            std::string col;
            std::size_t i = 0;
            while (std::getline(ss, col, ',')) {
                std::string lc = col;
                for (char& ch : lc) ch = char(std::tolower((unsigned char)ch));
                if (lc == "pixels" || lc == "pixels\r") pix_col = i;
                ++i;
            }
        }
        std::vector<std::string> rows;
        std::string line;
        while (std::getline(is, line)) {
            std::size_t start = 0, col = 0;
            std::string pixels;
            while (start <= line.size()) {
                auto comma = line.find(',', start);
                if (comma == std::string::npos) comma = line.size();
                if (col == pix_col) {
                    pixels = line.substr(start, comma - start);
                    break;
                }
                start = comma + 1;
                ++col;
            }
            rows.push_back(std::move(pixels));
        }
        it = cache.emplace(csv_path, std::move(rows)).first;
    }

    if (row == 0 || row > it->second.size())
        raise(Errc::format_error, "fer2013 row out of range: " + ref);

    const std::string& pixels = it->second[row - 1];
    ImageTensor img(1, 48, 48, ValueRange::raw_0_255);
    std::size_t idx = 0;
    std::size_t pos = 0;
    while (pos < pixels.size() && idx < 48 * 48) {
        while (pos < pixels.size() && pixels[pos] == ' ') ++pos;
        if (pos >= pixels.size()) break;
        std::size_t end = pos;
        int v = 0;
        while (end < pixels.size() && pixels[end] != ' ') {
            v = v * 10 + (pixels[end] - '0');
            ++end;
        }
        img.data[idx++] = static_cast<float>(v);
        pos = end;
    }
    if (idx != 48 * 48)
        raise(Errc::format_error, "fer2013 row has " + std::to_string(idx) +
                                      " pixels, expected 2304: " + ref);
    return img;
}

} // namespace

ImageTensor decode_image_file(const std::string& path) {
    const cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
    return from_cv_mat(mat, path);
}

ImageTensor load_sample_image(const Sample& sample) {
    const std::string& ref = sample.image_ref;
    if (ref.rfind("synthetic://", 0) == 0) {
        const std::size_t label = parse_ref_field(ref, "c");
        const std::size_t index = parse_ref_field(ref, "i");
        const std::size_t size = parse_ref_field(ref, "s");
        return render_synthetic(label, index, size);
    }
    if (ref.rfind("fer2013://", 0) == 0) return load_fer2013_row(ref);
    return decode_image_file(ref);
}

} // namespace fervit
