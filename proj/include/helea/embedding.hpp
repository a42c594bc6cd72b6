#pragma once

// Unit-norm entity embeddings, the provider abstraction, a deterministic
// hashed bag-of-tokens provider, and the on-disk embedding cache.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "helea/error.hpp"
#include "helea/hashing.hpp"

namespace helea {

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dimension() const { return values.size(); }
    double norm() const {
        double s = 0.0;
        for (float v : values) s += static_cast<double>(v) * v;
        return std::sqrt(s);
    }
};

inline constexpr double kUnitNormTolerance = 1e-6;

// Scales `raw` to unit L2 norm. A zero vector cannot be normalized.
inline EmbeddingVector normalize(std::span<const double> raw) {
    double s = 0.0;
    for (double v : raw) s += v * v;
    const double n = std::sqrt(s);
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("cannot normalize a zero or non-finite vector");
    EmbeddingVector out;
    out.values.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = static_cast<float>(raw[i] / n);
    return out;
}

inline EmbeddingVector normalize(std::span<const float> raw) {
    std::vector<double> d(raw.begin(), raw.end());
    return normalize(std::span<const double>(d));
}

inline double dot(const EmbeddingVector& x, const EmbeddingVector& y) {
    if (x.dimension() != y.dimension()) {
        throw DimensionMismatch("dimension " + std::to_string(x.dimension()) + " vs " + std::to_string(y.dimension()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) s += static_cast<double>(x.values[i]) * y.values[i];
    return s;
}

// s_ab = e_a^T e_b for unit vectors; clamped against float rounding.
inline double cosine(const EmbeddingVector& x, const EmbeddingVector& y) {
    const double s = dot(x, y);
    return s > 1.0 ? 1.0 : (s < -1.0 ? -1.0 : s);
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    // One unit-norm vector per input, same order.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const = 0;
};

inline std::vector<EmbeddingVector> embed(const EmbeddingProvider& provider, const std::vector<std::string>& texts) {
    return provider.embed_batch(texts);
}

inline EmbeddingVector embed_one(const EmbeddingProvider& provider, const std::string& text) {
    return provider.embed_batch({text}).front();
}

// Lower-cased ASCII alphanumeric runs; bytes >= 0x80 count as word characters
// so UTF-8 text stays in one token.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Sparse hashed token counts: bucket -> count. Ordered for determinism.
using SparseFeatures = std::map<std::uint32_t, double>;

inline SparseFeatures hashed_features(std::string_view text, std::size_t dimension, std::uint64_t seed) {
    SparseFeatures f;
    for (const auto& tok : tokenize(text)) {
        const auto bucket = static_cast<std::uint32_t>(fnv1a64(tok, seed) % dimension);
        f[bucket] += 1.0;
    }
    return f;
}

// Deterministic bag-of-tokens embedder: hashed counts, L2-normalized.
class HashedFeatureProvider : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDimension = 256;
    static constexpr std::uint64_t kDefaultSeed = 0x48454C4541ULL;

    explicit HashedFeatureProvider(std::size_t dimension = kDefaultDimension, std::uint64_t seed = kDefaultSeed)
        : dimension_(dimension), seed_(seed) {
        if (dimension_ == 0) throw InvalidArgument("dimension must be positive");
    }

    std::size_t dimension() const override { return dimension_; }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            std::vector<double> dense(dimension_, 0.0);
            for (const auto& [bucket, count] : hashed_features(t, dimension_, seed_)) dense[bucket] = count;
            try {
                out.push_back(normalize(std::span<const double>(dense)));
            } catch (const InvalidArgument&) {
                throw ProviderError("text has no tokens to embed: \"" + t + "\"");
            }
        }
        return out;
    }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

// Embedding cache: header {magic u32, dimension u32, count u64} then
// count*dimension little-endian float32, plus a JSON-lines id manifest.
inline constexpr std::uint32_t kEmbeddingCacheMagic = 0x424D4548;  // "HEMB" on disk

namespace detail {

template <class T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IoError("truncated embedding cache");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

} // namespace detail

struct EmbeddingCache {
    std::vector<std::string> ids;
    std::vector<EmbeddingVector> vectors;
    std::size_t dimension = 0;
};

inline void write_embedding_cache(const std::string& path, const EmbeddingCache& cache) {
    if (cache.ids.size() != cache.vectors.size()) throw LengthMismatch("ids and vectors differ in length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embedding cache: " + path);
    detail::write_le<std::uint32_t>(out, kEmbeddingCacheMagic);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cache.dimension));
    detail::write_le<std::uint64_t>(out, cache.vectors.size());
    for (const auto& v : cache.vectors) {
        if (v.dimension() != cache.dimension) throw DimensionMismatch("cache vector has wrong dimension");
        for (float f : v.values) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            detail::write_le<std::uint32_t>(out, bits);
        }
    }
    std::ofstream manifest(path + ".ids.jsonl", std::ios::binary);
    if (!manifest) throw IoError("cannot write id manifest: " + path + ".ids.jsonl");
    for (std::size_t i = 0; i < cache.ids.size(); ++i) {
        nlohmann::ordered_json j;
        j["row"] = i;
        j["id"] = cache.ids[i];
        manifest << j.dump() << '\n';
    }
}

inline EmbeddingCache read_embedding_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding cache: " + path);
    if (detail::read_le<std::uint32_t>(in) != kEmbeddingCacheMagic) throw IoError("bad embedding cache magic: " + path);
    EmbeddingCache cache;
    cache.dimension = detail::read_le<std::uint32_t>(in);
    const auto count = detail::read_le<std::uint64_t>(in);
    cache.vectors.resize(count);
    for (auto& v : cache.vectors) {
        v.values.resize(cache.dimension);
        for (auto& f : v.values) {
            const auto bits = detail::read_le<std::uint32_t>(in);
            std::memcpy(&f, &bits, sizeof f);
        }
    }
    std::ifstream manifest(path + ".ids.jsonl");
    if (!manifest) throw IoError("cannot open id manifest: " + path + ".ids.jsonl");
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        cache.ids.push_back(nlohmann::json::parse(line).at("id").get<std::string>());
    }
    if (cache.ids.size() != cache.vectors.size()) throw IoError("id manifest does not match cache row count");
    return cache;
}

} // namespace helea
