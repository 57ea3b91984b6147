#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fervit/tensor.hpp"

namespace fervit {

// Flat archive of named arrays: little-endian binary with a dtype header per
// entry. f64 entries round-trip bitwise; f32 entries widen to double on load;
// u8 entries carry opaque blobs (RNG state, embedded config text).
struct ArchiveEntry {
    enum class Dtype : std::uint8_t { f64 = 0, f32 = 1, u8 = 2 };

    std::string name;
    Dtype dtype = Dtype::f64;
    std::vector<std::size_t> shape;
    Tensor numeric;             // for f64 / f32
    std::vector<std::uint8_t> bytes; // for u8

    static ArchiveEntry tensor(std::string name, Tensor t);
    static ArchiveEntry blob(std::string name, const std::string& text);
    std::string text() const;
};

void save_archive(const std::string& path, const std::vector<ArchiveEntry>& entries);
std::vector<ArchiveEntry> load_archive(const std::string& path);

const ArchiveEntry* find_entry(const std::vector<ArchiveEntry>& entries,
                               const std::string& name);

} // namespace fervit
