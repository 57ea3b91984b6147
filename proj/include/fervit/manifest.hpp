#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fervit/emotion.hpp"

namespace fervit {

struct Sample {
    std::string image_ref; // filesystem path or a scheme ref (csv row / synthetic)
    Emotion label = Emotion::neutral;
    Source source = Source::synthetic;

    bool operator==(const Sample&) const = default;
};

// Ordered sample list plus per-label counts. The object the sampler and the
// splitter act on; serializes to a newline-delimited text file so sampling
// stays auditable without touching any image.
class DatasetManifest {
public:
    DatasetManifest() = default;
    explicit DatasetManifest(std::vector<Sample> samples) : samples_(std::move(samples)) {}

    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }

    void add(Sample s) { samples_.push_back(std::move(s)); }

    // Count per canonical label, recomputed from the sample list so the
    // counts[c] invariant holds by construction.
    std::array<std::size_t, kNumEmotions> counts() const;

    void save(const std::string& path) const;
    void write(std::ostream& os) const;
    static DatasetManifest load(const std::string& path);
    static DatasetManifest read(std::istream& is, const std::string& origin);

    bool operator==(const DatasetManifest&) const = default;

private:
    std::vector<Sample> samples_;
};

// Per-class draw size for class-balanced simple random sampling.
struct SamplingSpec {
    std::size_t n = 0;
    std::uint64_t seed = 42;
    // Replacement is intentionally not configurable: draws are always without
    // replacement.
};

// Exact integer train ratio (e.g. 8/10) so split arithmetic never goes
// through floating point.
struct Ratio {
    std::int64_t num = 8;
    std::int64_t den = 10;
};

Ratio parse_ratio(const std::string& text); // "8/10" or "0.8"

// min over the 7 canonical labels of counts[c]; throws EmptyClass when a
// label has no samples.
std::size_t compute_balanced_n(const DatasetManifest& manifest);

// Draw spec.n samples per label, uniformly without replacement, deterministic
// under spec.seed. Output is grouped by label in canonical order.
DatasetManifest balanced_sample(const DatasetManifest& manifest, const SamplingSpec& spec);

// Per-label random partition: train gets floor(count * ratio), validation the
// remainder. Deterministic under seed.
std::pair<DatasetManifest, DatasetManifest>
stratified_split(const DatasetManifest& manifest, Ratio train_ratio, std::uint64_t seed);

} // namespace fervit
