#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "fervit/manifest.hpp"

namespace fervit {

struct AffectNetOptions {
    // The manual and automatic partitions ship as different annotation files;
    // point train_annotations at whichever one is in use.
    std::string train_annotations = "training.csv";
    std::string val_annotations = "validation.csv";
    bool require_val = true; // presampled 500/class validation must be present
};

struct AffectNetData {
    DatasetManifest train;
    // The presampled validation set (500 per label) exposed as the held-out
    // test manifest; never used for model selection.
    DatasetManifest test;
};

// AffectNet annotation CSVs -> canonical manifests. Contempt rows are
// dropped; expression ids outside 0..7 raise UnknownLabel.
AffectNetData load_affectnet(const std::string& root, const AffectNetOptions& opts = {});

// JAFFE directory: label code embedded in the filename (e.g. KA.AN1.39.tiff).
DatasetManifest load_jaffe(const std::string& root);

struct CkplusOptions {
    // CK+ has no per-sequence neutral label; optionally emit each labeled
    // sequence's first frame as neutral.
    bool neutral_from_first_frame = false;
};

// CK+ tree: Emotion/Sxxx/yyy/*_emotion.txt label files plus per-sequence
// frame directories. Emits one sample per labeled sequence, referencing the
// final frame; contempt sequences are dropped.
DatasetManifest load_ckplus(const std::string& root, const CkplusOptions& opts = {});

// FER-2013 CSV (header emotion,pixels,usage): 48x48 grayscale rows. The
// native label order is remapped into the canonical one; usage_filter keeps
// only matching rows when non-empty (e.g. "PublicTest").
DatasetManifest load_fer2013(const std::string& csv_path, const std::string& usage_filter = "");

// Procedural dataset for desk-scale runs: per-label intensity bands with
// deterministic per-pixel variation, decodable from pixels alone.
DatasetManifest make_synthetic_manifest(const std::array<std::size_t, kNumEmotions>& per_class,
                                        std::size_t image_size = 32);
DatasetManifest make_synthetic_manifest(std::size_t total, std::size_t image_size = 32);

// Band layout used by the synthetic renderer: label c has mean intensity
// kSyntheticBase + c * kSyntheticStep on raw scale, variation < step/4.
inline constexpr float kSyntheticBase = 16.0f;
inline constexpr float kSyntheticStep = 32.0f;

} // namespace fervit
