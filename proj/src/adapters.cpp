#include "fervit/adapters.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace fervit {

namespace {

std::string to_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Minimal CSV field splitter with double-quote support.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool is_image_file(const fs::path& p) {
    const std::string ext = to_lower(p.extension().string());
    return ext == ".tiff" || ext == ".tif" || ext == ".png" || ext == ".jpg" ||
           ext == ".jpeg" || ext == ".bmp" || ext == ".pgm" || ext == ".ppm";
}

} // namespace

// ---------------------------------------------------------------------------
// AffectNet
// ---------------------------------------------------------------------------

namespace {

// AffectNet's expression coding matches the canonical order for ids 0..6;
// id 7 is contempt and is dropped.
DatasetManifest parse_affectnet_csv(const std::string& root, const std::string& csv_path) {
    std::ifstream is(csv_path);
    if (!is) raise(Errc::format_error, "cannot open AffectNet annotations: " + csv_path);

    std::string header;
    if (!std::getline(is, header))
        raise(Errc::format_error, "empty AffectNet annotation file: " + csv_path);

    const auto cols = split_csv_line(header);
    std::optional<std::size_t> path_col, expr_col;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const std::string name = to_lower(cols[i]);
        if (name == "subdirectory_filepath" || name == "image" || name == "path")
            path_col = i;
        else if (name == "expression")
            expr_col = i;
    }
    if (!path_col || !expr_col)
        raise(Errc::format_error,
              csv_path + ": header must contain subDirectory_filePath and expression columns");

    DatasetManifest m;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() <= std::max(*path_col, *expr_col))
            raise(Errc::format_error, csv_path + ":" + std::to_string(lineno) + ": short row");
        int expr = 0;
        try {
            expr = std::stoi(fields[*expr_col]);
        } catch (const std::exception&) {
            raise(Errc::format_error,
                  csv_path + ":" + std::to_string(lineno) + ": bad expression id");
        }
        if (expr < 0 || expr > 7)
            raise(Errc::unknown_label, csv_path + ":" + std::to_string(lineno) +
                                           ": expression id " + std::to_string(expr) +
                                           " outside 0..7");
        if (expr == 7) continue; // contempt
        Sample s;
        s.image_ref = (fs::path(root) / fields[*path_col]).string();
        s.label = emotion_from_id(expr);
        s.source = Source::affectnet;
        m.add(std::move(s));
    }
    return m;
}

} // namespace

AffectNetData load_affectnet(const std::string& root, const AffectNetOptions& opts) {
    if (!fs::exists(root) || !fs::is_directory(root))
        raise(Errc::format_error, "AffectNet root is not a directory: " + root);

    const fs::path train_csv = fs::path(root) / opts.train_annotations;
    if (!fs::exists(train_csv))
        raise(Errc::format_error, "missing AffectNet annotation file: " + train_csv.string());

    AffectNetData out;
    out.train = parse_affectnet_csv(root, train_csv.string());

    const fs::path val_csv = fs::path(root) / opts.val_annotations;
    if (fs::exists(val_csv)) {
        out.test = parse_affectnet_csv(root, val_csv.string());
        const auto c = out.test.counts();
        for (std::size_t i = 0; i < kNumEmotions; ++i) {
            if (c[i] != 500)
                raise(Errc::format_error,
                      "AffectNet presampled validation set must have 500 samples per label; '" +
                          std::string(kEmotionNames[i]) + "' has " + std::to_string(c[i]));
        }
    } else if (opts.require_val) {
        raise(Errc::format_error,
              "missing AffectNet validation annotations: " + val_csv.string());
    }
    return out;
}

// ---------------------------------------------------------------------------
// JAFFE
// ---------------------------------------------------------------------------

DatasetManifest load_jaffe(const std::string& root) {
    if (!fs::exists(root) || !fs::is_directory(root))
        raise(Errc::format_error, "JAFFE root is not a directory: " + root);

    static const std::map<std::string, Emotion> kCodes = {
        {"AN", Emotion::anger}, {"DI", Emotion::disgust},  {"FE", Emotion::fear},
        {"HA", Emotion::happy}, {"NE", Emotion::neutral},  {"SA", Emotion::sad},
        {"SU", Emotion::surprise},
    };

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    DatasetManifest m;
    for (const auto& p : files) {
        // Filename convention: <subject>.<code><index>.<number>.<ext>
        const std::string stem = p.filename().string();
        const auto dot1 = stem.find('.');
        if (dot1 == std::string::npos || stem.size() < dot1 + 3) continue;
        const std::string code = stem.substr(dot1 + 1, 2);
        const auto it = kCodes.find(code);
        if (it == kCodes.end())
            raise(Errc::unknown_label, "unrecognized JAFFE emotion code '" + code + "' in " +
                                           p.filename().string());
        Sample s;
        s.image_ref = p.string();
        s.label = it->second;
        s.source = Source::jaffe;
        m.add(std::move(s));
    }
    if (m.empty()) raise(Errc::format_error, "no JAFFE images found under " + root);
    return m;
}

// ---------------------------------------------------------------------------
// CK+
// ---------------------------------------------------------------------------

namespace {

// CK+ emotion coding. Code 2 (contempt) is outside the canonical set and is
// reported as nullopt; anything above 7 is an error.
std::optional<Emotion> ckplus_emotion(int code, const std::string& where) {
    switch (code) {
    case 0: return Emotion::neutral;
    case 1: return Emotion::anger;
    case 2: return std::nullopt; // contempt
    case 3: return Emotion::disgust;
    case 4: return Emotion::fear;
    case 5: return Emotion::happy;
    case 6: return Emotion::sad;
    case 7: return Emotion::surprise;
    default:
        raise(Errc::unknown_label,
              where + ": CK+ emotion code " + std::to_string(code) + " outside 0..7");
    }
}

} // namespace

DatasetManifest load_ckplus(const std::string& root, const CkplusOptions& opts) {
    if (!fs::exists(root) || !fs::is_directory(root))
        raise(Errc::format_error, "CK+ root is not a directory: " + root);

    const fs::path emotion_dir = fs::path(root) / "Emotion";
    if (!fs::exists(emotion_dir))
        raise(Errc::format_error, "CK+ root has no Emotion/ directory: " + root);

    fs::path images_root;
    for (const char* cand : {"cohn-kanade-images", "images", "extended-cohn-kanade-images"}) {
        if (fs::exists(fs::path(root) / cand)) {
            images_root = fs::path(root) / cand;
            break;
        }
    }
    if (images_root.empty())
        raise(Errc::format_error, "CK+ root has no image directory: " + root);

    std::vector<fs::path> label_files;
    for (const auto& entry : fs::recursive_directory_iterator(emotion_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            label_files.push_back(entry.path());
    std::sort(label_files.begin(), label_files.end());

    DatasetManifest m;
    for (const auto& lf : label_files) {
        std::ifstream is(lf);
        double raw = -1.0;
        if (!(is >> raw))
            raise(Errc::format_error, "unreadable CK+ emotion file: " + lf.string());
        const auto label = ckplus_emotion(static_cast<int>(raw + 0.5), lf.string());
        if (!label) continue; // contempt sequence

        // Emotion/Sxxx/yyy/..._emotion.txt -> images_root/Sxxx/yyy/
        const fs::path seq_rel = fs::relative(lf.parent_path(), emotion_dir);
        const fs::path seq_dir = images_root / seq_rel;
        if (!fs::exists(seq_dir))
            raise(Errc::format_error, "CK+ sequence directory missing: " + seq_dir.string());

        std::vector<fs::path> frames;
        for (const auto& f : fs::directory_iterator(seq_dir))
            if (f.is_regular_file() && is_image_file(f.path())) frames.push_back(f.path());
        if (frames.empty())
            raise(Errc::format_error, "CK+ sequence has no frames: " + seq_dir.string());
        // Frame numbers are zero padded, so lexicographic max is the last frame.
        std::sort(frames.begin(), frames.end());

        Sample s;
        s.image_ref = frames.back().string();
        s.label = *label;
        s.source = Source::ckplus;
        m.add(std::move(s));

        if (opts.neutral_from_first_frame) {
            Sample n;
            n.image_ref = frames.front().string();
            n.label = Emotion::neutral;
            n.source = Source::ckplus;
            m.add(std::move(n));
        }
    }
    if (m.empty()) raise(Errc::format_error, "no labeled CK+ sequences found under " + root);
    return m;
}

// ---------------------------------------------------------------------------
// FER-2013
// ---------------------------------------------------------------------------

namespace {

// FER-2013 coding: 0=angry 1=disgust 2=fear 3=happy 4=sad 5=surprise 6=neutral.
Emotion fer2013_emotion(int code, const std::string& where) {
    switch (code) {
    case 0: return Emotion::anger;
    case 1: return Emotion::disgust;
    case 2: return Emotion::fear;
    case 3: return Emotion::happy;
    case 4: return Emotion::sad;
    case 5: return Emotion::surprise;
    case 6: return Emotion::neutral;
    default:
        raise(Errc::unknown_label,
              where + ": FER-2013 emotion id " + std::to_string(code) + " outside 0..6");
    }
}

} // namespace

DatasetManifest load_fer2013(const std::string& csv_path, const std::string& usage_filter) {
    std::ifstream is(csv_path);
    if (!is) raise(Errc::format_error, "cannot open FER-2013 csv: " + csv_path);

    std::string header;
    if (!std::getline(is, header)) raise(Errc::format_error, "empty FER-2013 csv: " + csv_path);
    const auto cols = split_csv_line(header);
    std::optional<std::size_t> emo_col, pix_col, usage_col;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const std::string name = to_lower(cols[i]);
        if (name == "emotion") emo_col = i;
        else if (name == "pixels") pix_col = i;
        else if (name == "usage") usage_col = i;
    }
    if (!emo_col || !pix_col)
        raise(Errc::format_error, csv_path + ": header must contain emotion and pixels columns");

    DatasetManifest m;
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() <= std::max(*emo_col, *pix_col))
            raise(Errc::format_error, csv_path + ":" + std::to_string(row + 1) + ": short row");
        if (!usage_filter.empty() && usage_col && fields.size() > *usage_col &&
            fields[*usage_col] != usage_filter)
            continue;
        int code = 0;
        try {
            code = std::stoi(fields[*emo_col]);
        } catch (const std::exception&) {
            raise(Errc::format_error,
                  csv_path + ":" + std::to_string(row + 1) + ": bad emotion id");
        }
        // Validate the pixel count up front so a malformed file fails at load
        // time, not at first image fetch.
        std::size_t n_values = 0;
        bool in_token = false;
        for (const char c : fields[*pix_col]) {
            if (c == ' ') {
                in_token = false;
            } else if (!in_token) {
                in_token = true;
                ++n_values;
            }
        }
        if (n_values != 48 * 48)
            raise(Errc::format_error, csv_path + ":" + std::to_string(row + 1) + ": expected " +
                                          std::to_string(48 * 48) + " pixels, got " +
                                          std::to_string(n_values));
        Sample s;
        s.image_ref = "fer2013://" + csv_path + "#row=" + std::to_string(row);
        s.label = fer2013_emotion(code, csv_path + ":" + std::to_string(row + 1));
        s.source = Source::fer2013;
        m.add(std::move(s));
    }
    if (m.empty()) raise(Errc::format_error, "no usable FER-2013 rows in " + csv_path);
    return m;
}

// ---------------------------------------------------------------------------
// Synthetic
// ---------------------------------------------------------------------------

DatasetManifest make_synthetic_manifest(const std::array<std::size_t, kNumEmotions>& per_class,
                                        std::size_t image_size) {
    DatasetManifest m;
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
        for (std::size_t i = 0; i < per_class[c]; ++i) {
            Sample s;
            s.image_ref = "synthetic://c=" + std::to_string(c) + "/i=" + std::to_string(i) +
                          "/s=" + std::to_string(image_size);
            s.label = static_cast<Emotion>(c);
            s.source = Source::synthetic;
            m.add(std::move(s));
        }
    }
    return m;
}

DatasetManifest make_synthetic_manifest(std::size_t total, std::size_t image_size) {
    std::array<std::size_t, kNumEmotions> per_class{};
    for (std::size_t i = 0; i < total; ++i) ++per_class[i % kNumEmotions];
    return make_synthetic_manifest(per_class, image_size);
}

} // namespace fervit
