#pragma once

// Exact top-K cosine retrieval over an immutable matrix of unit vectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "helea/embedding.hpp"
#include "helea/entity_store.hpp"
#include "helea/error.hpp"
#include "helea/hn_pipeline.hpp"

namespace helea {

struct Hit {
    std::string id;
    double score = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

struct RetrievalResult {
    std::string query_id;
    std::vector<Hit> hits;  // score descending, ties by ascending id
};

// Score descending, then id ascending.
inline bool hit_before(const Hit& x, const Hit& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.id < y.id;
}

class VectorIndex {
public:
    VectorIndex() = default;

    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dimension_; }
    const std::vector<std::string>& ids() const { return ids_; }

    EmbeddingVector row(std::size_t i) const {
        EmbeddingVector v;
        v.values.assign(matrix_.begin() + static_cast<std::ptrdiff_t>(i * dimension_),
                        matrix_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dimension_));
        return v;
    }

    friend VectorIndex build_index(std::vector<std::string> ids, const std::vector<EmbeddingVector>& vectors);

    // Exhaustive scan; exactly min(k, size()) hits.
    RetrievalResult query_topk(const EmbeddingVector& q, std::size_t k, std::string query_id = {}) const {
        if (k == 0) throw InvalidArgument("K must be at least 1");
        if (q.dimension() != dimension_ && size() > 0) {
            throw DimensionMismatch("query dimension " + std::to_string(q.dimension()) + " vs index " +
                                    std::to_string(dimension_));
        }
        std::vector<Hit> all;
        all.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            const float* r = &matrix_[i * dimension_];
            double s = 0.0;
            for (std::size_t d = 0; d < dimension_; ++d) s += static_cast<double>(q.values[d]) * r[d];
            all.push_back(Hit{ids_[i], std::clamp(s, -1.0, 1.0)});
        }
        const std::size_t n = std::min(k, all.size());
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), hit_before);
        all.resize(n);
        return RetrievalResult{std::move(query_id), std::move(all)};
    }

    // Queries split across threads; result order matches input order.
    std::vector<RetrievalResult> query_batch(const std::vector<EmbeddingVector>& queries, std::size_t k,
                                             const std::vector<std::string>& query_ids = {},
                                             std::size_t threads = 0) const {
        std::vector<RetrievalResult> out(queries.size());
        if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
        threads = std::min(threads, std::max<std::size_t>(1, queries.size()));
        auto work = [&](std::size_t t) {
            for (std::size_t i = t; i < queries.size(); i += threads) {
                out[i] = query_topk(queries[i], k, i < query_ids.size() ? query_ids[i] : std::string());
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work, t);
        work(0);
        for (auto& th : pool) th.join();
        return out;
    }

private:
    std::vector<std::string> ids_;
    std::vector<float> matrix_;
    std::size_t dimension_ = 0;
};

inline VectorIndex build_index(std::vector<std::string> ids, const std::vector<EmbeddingVector>& vectors) {
    if (ids.size() != vectors.size()) throw LengthMismatch("ids and vectors differ in length");
    VectorIndex index;
    index.dimension_ = vectors.empty() ? 0 : vectors.front().dimension();
    std::unordered_set<std::string> seen;
    index.matrix_.reserve(vectors.size() * index.dimension_);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (!seen.insert(ids[i]).second) throw DuplicateId("duplicate index id: " + ids[i]);
        if (vectors[i].dimension() != index.dimension_) throw DimensionMismatch("vector " + ids[i] + " has wrong dimension");
        if (std::abs(vectors[i].norm() - 1.0) > kUnitNormTolerance) throw NonUnitVector("vector " + ids[i] + " is not unit norm");
        index.matrix_.insert(index.matrix_.end(), vectors[i].values.begin(), vectors[i].values.end());
    }
    index.ids_ = std::move(ids);
    return index;
}

inline RetrievalResult query_topk(const VectorIndex& index, const EmbeddingVector& q, std::size_t k) {
    return index.query_topk(q, k);
}

// Distinct side-B entities of every benchmark row, in first-seen order.
inline std::vector<EntityKey> hn_pool_members(const std::vector<AlignmentPair>& benchmark) {
    std::vector<EntityKey> members;
    std::unordered_set<EntityKey, EntityKeyHash> seen;
    for (const auto& p : benchmark) {
        if (seen.insert(p.b).second) members.push_back(p.b);
    }
    return members;
}

// Index over the union of all side-B entities of a benchmark, so every
// positive query is ranked against its same-name distractors. Ids are
// EntityKey::str().
inline VectorIndex build_hn_pool(const std::vector<AlignmentPair>& benchmark, const EntityStore& store,
                                 const EmbeddingProvider& provider,
                                 std::size_t budget = kDefaultSerializationBudget) {
    const auto members = hn_pool_members(benchmark);
    std::vector<std::string> ids, texts;
    for (const auto& k : members) {
        ids.push_back(k.str());
        texts.push_back(serialize_entity(store.at(k), budget));
    }
    return build_index(std::move(ids), provider.embed_batch(texts));
}

} // namespace helea
