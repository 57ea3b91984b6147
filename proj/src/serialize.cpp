#include "fervit/serialize.hpp"

#include <cstring>
#include <fstream>

#include "fervit/errors.hpp"

namespace fervit {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'T', '1'};

template <typename T>
void write_le(std::ostream& os, T v) {
    // Host is little-endian on every supported target; write raw.
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) raise(Errc::format_error, "truncated archive: " + path);
    return v;
}

} // namespace

ArchiveEntry ArchiveEntry::tensor(std::string name, Tensor t) {
    ArchiveEntry e;
    e.name = std::move(name);
    e.dtype = Dtype::f64;
    e.shape = t.shape();
    e.numeric = std::move(t);
    return e;
}

ArchiveEntry ArchiveEntry::blob(std::string name, const std::string& text) {
    ArchiveEntry e;
    e.name = std::move(name);
    e.dtype = Dtype::u8;
    e.shape = {text.size()};
    e.bytes.assign(text.begin(), text.end());
    return e;
}

std::string ArchiveEntry::text() const {
    return std::string(bytes.begin(), bytes.end());
}

void save_archive(const std::string& path, const std::vector<ArchiveEntry>& entries) {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(Errc::format_error, "cannot open archive for writing: " + path);
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(entries.size()));
    for (const ArchiveEntry& e : entries) {
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_le<std::uint8_t>(os, static_cast<std::uint8_t>(e.dtype));
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
        for (std::size_t d : e.shape) write_le<std::uint64_t>(os, d);
        if (e.dtype == ArchiveEntry::Dtype::u8) {
            os.write(reinterpret_cast<const char*>(e.bytes.data()),
                     static_cast<std::streamsize>(e.bytes.size()));
        } else if (e.dtype == ArchiveEntry::Dtype::f64) {
            os.write(reinterpret_cast<const char*>(e.numeric.data()),
                     static_cast<std::streamsize>(e.numeric.size() * sizeof(double)));
        } else {
            for (std::size_t i = 0; i < e.numeric.size(); ++i)
                write_le<float>(os, static_cast<float>(e.numeric[i]));
        }
    }
    if (!os) raise(Errc::format_error, "failed writing archive: " + path);
}

std::vector<ArchiveEntry> load_archive(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(Errc::format_error, "cannot open archive: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        raise(Errc::format_error, "not a weight archive: " + path);

    const auto count = read_le<std::uint32_t>(is, path);
    std::vector<ArchiveEntry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ArchiveEntry e;
        const auto name_len = read_le<std::uint32_t>(is, path);
        e.name.resize(name_len);
        is.read(e.name.data(), name_len);
        e.dtype = static_cast<ArchiveEntry::Dtype>(read_le<std::uint8_t>(is, path));
        const auto ndim = read_le<std::uint32_t>(is, path);
        e.shape.resize(ndim);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            e.shape[d] = static_cast<std::size_t>(read_le<std::uint64_t>(is, path));
            numel *= e.shape[d];
        }
        if (ndim == 0) numel = 0;
        if (e.dtype == ArchiveEntry::Dtype::u8) {
            e.bytes.resize(numel);
            is.read(reinterpret_cast<char*>(e.bytes.data()),
                    static_cast<std::streamsize>(numel));
            if (!is) raise(Errc::format_error, "truncated archive: " + path);
        } else {
            Tensor t(e.shape);
            if (e.dtype == ArchiveEntry::Dtype::f64) {
                is.read(reinterpret_cast<char*>(t.data()),
                        static_cast<std::streamsize>(numel * sizeof(double)));
                if (!is) raise(Errc::format_error, "truncated archive: " + path);
            } else {
                for (std::size_t j = 0; j < numel; ++j)
                    t[j] = static_cast<double>(read_le<float>(is, path));
            }
            e.numeric = std::move(t);
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

const ArchiveEntry* find_entry(const std::vector<ArchiveEntry>& entries,
                               const std::string& name) {
    for (const ArchiveEntry& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

} // namespace fervit
