#include "fervit/manifest.hpp"

#include <fstream>
#include <sstream>

#include "fervit/rng.hpp"

namespace fervit {

Emotion emotion_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kNumEmotions; ++i)
        if (name == kEmotionNames[i]) return static_cast<Emotion>(i);
    raise(Errc::unknown_label, "not a canonical emotion name: '" + name + "'");
}

const char* source_name(Source s) {
    switch (s) {
    case Source::affectnet: return "affectnet";
    case Source::jaffe: return "jaffe";
    case Source::ckplus: return "ckplus";
    case Source::fer2013: return "fer2013";
    case Source::synthetic: return "synthetic";
    }
    return "unknown";
}

Source source_from_name(const std::string& name) {
    for (Source s : {Source::affectnet, Source::jaffe, Source::ckplus, Source::fer2013,
                     Source::synthetic})
        if (name == source_name(s)) return s;
    raise(Errc::format_error, "unknown dataset source: '" + name + "'");
}

std::array<std::size_t, kNumEmotions> DatasetManifest::counts() const {
    std::array<std::size_t, kNumEmotions> c{};
    for (const Sample& s : samples_) ++c[static_cast<std::size_t>(s.label)];
    return c;
}

void DatasetManifest::write(std::ostream& os) const {
    os << "# path\tlabel\tsource\n";
    for (const Sample& s : samples_)
        os << s.image_ref << '\t' << static_cast<int>(s.label) << '\t' << source_name(s.source)
           << '\n';
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) raise(Errc::format_error, "cannot open manifest for writing: " + path);
    write(os);
}

DatasetManifest DatasetManifest::read(std::istream& is, const std::string& origin) {
    DatasetManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            raise(Errc::format_error,
                  origin + ":" + std::to_string(lineno) + ": expected path<TAB>label<TAB>source");
        Sample s;
        s.image_ref = line.substr(0, t1);
        int id = 0;
        try {
            id = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
        } catch (const std::exception&) {
            raise(Errc::format_error, origin + ":" + std::to_string(lineno) + ": bad label id");
        }
        s.label = emotion_from_id(id);
        s.source = source_from_name(line.substr(t2 + 1));
        m.add(std::move(s));
    }
    return m;
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(Errc::format_error, "cannot open manifest: " + path);
    return read(is, path);
}

Ratio parse_ratio(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            Ratio r;
            r.num = std::stoll(text.substr(0, slash));
            r.den = std::stoll(text.substr(slash + 1));
            if (r.den <= 0 || r.num <= 0 || r.num >= r.den)
                raise(Errc::config_error, "ratio must satisfy 0 < num/den < 1: " + text);
            return r;
        }
        // Decimal form: scale to a power-of-ten fraction.
        const double v = std::stod(text);
        if (!(v > 0.0 && v < 1.0)) raise(Errc::config_error, "ratio must be in (0,1): " + text);
        Ratio r;
        r.den = 1000000;
        r.num = static_cast<std::int64_t>(v * 1000000.0 + 0.5);
        return r;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        raise(Errc::config_error, "cannot parse ratio: '" + text + "'");
    }
}

std::size_t compute_balanced_n(const DatasetManifest& manifest) {
    const auto c = manifest.counts();
    std::size_t n = SIZE_MAX;
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
        if (c[i] == 0)
            raise(Errc::empty_class,
                  std::string("label '") + kEmotionNames[i] + "' has no samples");
        n = std::min(n, c[i]);
    }
    return n;
}

DatasetManifest balanced_sample(const DatasetManifest& manifest, const SamplingSpec& spec) {
    const auto counts = manifest.counts();
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
        if (spec.n > counts[c])
            raise(Errc::insufficient_samples,
                  "label '" + std::string(kEmotionNames[c]) + "' has " +
                      std::to_string(counts[c]) + " samples, need " + std::to_string(spec.n));
    }

    // Group sample indices by label in manifest order, then draw per label in
    // canonical order from one seeded stream.
    std::array<std::vector<std::size_t>, kNumEmotions> by_label;
    for (std::size_t c = 0; c < kNumEmotions; ++c) by_label[c].reserve(counts[c]);
    for (std::size_t i = 0; i < manifest.size(); ++i)
        by_label[static_cast<std::size_t>(manifest[i].label)].push_back(i);

    Rng rng(spec.seed);
    std::vector<Sample> out;
    out.reserve(spec.n * kNumEmotions);
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
        const auto drawn = rng.sample_without_replacement(by_label[c].size(), spec.n);
        for (std::size_t d : drawn) out.push_back(manifest[by_label[c][d]]);
    }
    return DatasetManifest(std::move(out));
}

std::pair<DatasetManifest, DatasetManifest>
stratified_split(const DatasetManifest& manifest, Ratio train_ratio, std::uint64_t seed) {
    if (train_ratio.num <= 0 || train_ratio.den <= 0 || train_ratio.num >= train_ratio.den)
        raise(Errc::config_error, "train ratio must be in (0,1)");

    std::array<std::vector<std::size_t>, kNumEmotions> by_label;
    for (std::size_t i = 0; i < manifest.size(); ++i)
        by_label[static_cast<std::size_t>(manifest[i].label)].push_back(i);

    Rng rng(seed);
    std::vector<Sample> train, val;
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
        auto& idx = by_label[c];
        if (idx.empty()) continue;
        const std::size_t n = idx.size();
        const std::size_t n_train = static_cast<std::size_t>(
            (static_cast<std::int64_t>(n) * train_ratio.num) / train_ratio.den);
        const std::size_t n_val = n - n_train;
        if (n_train == 0 || n_val == 0)
            raise(Errc::degenerate_split,
                  "label '" + std::string(kEmotionNames[c]) + "' would get " +
                      std::to_string(n_train) + " train / " + std::to_string(n_val) + " val");
        rng.shuffle(idx);
        for (std::size_t i = 0; i < n_train; ++i) train.push_back(manifest[idx[i]]);
        for (std::size_t i = n_train; i < n; ++i) val.push_back(manifest[idx[i]]);
    }
    return {DatasetManifest(std::move(train)), DatasetManifest(std::move(val))};
}

} // namespace fervit
