#pragma once

// Same-name hard-negative mining: collision groups, positive / hard-negative
// pair generation for training and evaluation, leakage filtering and
// dataset statistics.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <tuple>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "helea/entity_store.hpp"
#include "helea/error.hpp"
#include "helea/hashing.hpp"
#include "helea/kg_model.hpp"

namespace helea {

struct CollisionGroup {
    std::string key;                  // case-folded canonical name
    std::vector<EntityKey> members;   // sorted, distinct

    bool singleton() const { return members.size() < 2; }
};

// Groups entities by case-folded canonical name. Singletons are kept.
// Output is sorted by key; members are sorted by (kg, id).
inline std::vector<CollisionGroup> build_collision_groups(const std::vector<Entity>& entities) {
    std::map<std::string, std::set<EntityKey>> buckets;
    for (const auto& e : entities) buckets[e.key].insert(e.entity_key());
    std::vector<CollisionGroup> groups;
    groups.reserve(buckets.size());
    for (auto& [key, members] : buckets) {
        groups.push_back(CollisionGroup{key, std::vector<EntityKey>(members.begin(), members.end())});
    }
    return groups;
}

// 1:1 cross-graph identity links (seed alignments / sameAs export).
class IdentityLinks {
public:
    void add(const std::string& a_id, const std::string& b_id) {
        if (a_to_b_.count(a_id)) throw DuplicateId("KG_A id linked twice: " + a_id);
        if (b_to_a_.count(b_id)) throw DuplicateId("KG_B id linked twice: " + b_id);
        a_to_b_.emplace(a_id, b_id);
        b_to_a_.emplace(b_id, a_id);
        order_.emplace_back(a_id, b_id);
    }

    bool linked(const EntityKey& x, const EntityKey& y) const {
        if (x.kg == y.kg) return false;
        const EntityKey& a = x.kg == KgSide::A ? x : y;
        const EntityKey& b = x.kg == KgSide::A ? y : x;
        auto it = a_to_b_.find(a.id);
        return it != a_to_b_.end() && it->second == b.id;
    }

    const std::string* partner_of_a(const std::string& a_id) const {
        auto it = a_to_b_.find(a_id);
        return it == a_to_b_.end() ? nullptr : &it->second;
    }

    const std::vector<std::pair<std::string, std::string>>& links() const { return order_; }
    std::size_t size() const { return order_.size(); }

    // All endpoints as entity keys.
    std::set<EntityKey> endpoints() const {
        std::set<EntityKey> out;
        for (const auto& [a, b] : order_) {
            out.insert(EntityKey{KgSide::A, a});
            out.insert(EntityKey{KgSide::B, b});
        }
        return out;
    }

private:
    std::unordered_map<std::string, std::string> a_to_b_;
    std::unordered_map<std::string, std::string> b_to_a_;
    std::vector<std::pair<std::string, std::string>> order_;
};

// TSV "a_id \t b_id". Blank lines and '#' comments are skipped.
inline IdentityLinks read_links(std::istream& in) {
    IdentityLinks links;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto tab = t.find('\t');
        if (tab == std::string::npos) throw IoError("link file line " + std::to_string(lineno) + ": missing tab");
        const std::string a = trim(t.substr(0, tab));
        const std::string b = trim(t.substr(tab + 1));
        if (a.empty() || b.empty() || b.find('\t') != std::string::npos) {
            throw IoError("link file line " + std::to_string(lineno) + ": expected two fields");
        }
        links.add(a, b);
    }
    return links;
}

inline IdentityLinks read_links_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open link file: " + path);
    return read_links(in);
}

enum class PairLabel { positive, hard_negative };
enum class PairOrigin { cross_kg, within_kg_a, within_kg_b };

inline std::string_view to_string(PairLabel l) { return l == PairLabel::positive ? "positive" : "hard_negative"; }

inline std::string_view to_string(PairOrigin o) {
    switch (o) {
    case PairOrigin::cross_kg: return "cross_kg";
    case PairOrigin::within_kg_a: return "within_kg_a";
    case PairOrigin::within_kg_b: return "within_kg_b";
    }
    return "cross_kg";
}

inline PairLabel parse_pair_label(std::string_view s) {
    if (s == "positive") return PairLabel::positive;
    if (s == "hard_negative") return PairLabel::hard_negative;
    throw InvalidArgument("unknown pair label: " + std::string(s));
}

inline PairOrigin parse_pair_origin(std::string_view s) {
    if (s == "cross_kg") return PairOrigin::cross_kg;
    if (s == "within_kg_a") return PairOrigin::within_kg_a;
    if (s == "within_kg_b") return PairOrigin::within_kg_b;
    throw InvalidArgument("unknown pair origin: " + std::string(s));
}

struct AlignmentPair {
    EntityKey a;
    EntityKey b;
    PairLabel label = PairLabel::positive;
    PairOrigin origin = PairOrigin::cross_kg;

    friend bool operator==(const AlignmentPair&, const AlignmentPair&) = default;
};

inline PairOrigin origin_of(const EntityKey& x, const EntityKey& y) {
    if (x.kg != y.kg) return PairOrigin::cross_kg;
    return x.kg == KgSide::A ? PairOrigin::within_kg_a : PairOrigin::within_kg_b;
}

namespace detail {

// Row-major enumeration of the pairs (i, j), i < j, of n items.
inline std::uint64_t pair_row_offset(std::uint64_t n, std::uint64_t i) { return i * n - i * (i + 1) / 2; }

inline std::pair<std::size_t, std::size_t> decode_pair_index(std::uint64_t n, std::uint64_t idx) {
    std::uint64_t lo = 0, hi = n - 1;  // find largest i with offset(i) <= idx
    while (lo + 1 < hi) {
        const std::uint64_t mid = (lo + hi) / 2;
        if (pair_row_offset(n, mid) <= idx) lo = mid;
        else hi = mid;
    }
    const std::uint64_t i = lo;
    const std::uint64_t j = i + 1 + (idx - pair_row_offset(n, i));
    return {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
}

inline AlignmentPair oriented_pair(const EntityKey& x, const EntityKey& y, PairLabel label) {
    // Members are sorted with KG_A first, so cross pairs come out as (A, B).
    return AlignmentPair{x, y, label, origin_of(x, y)};
}

} // namespace detail

inline constexpr std::size_t kDefaultNegativeCap = 50;

// Training-mode generation over full-dump collision groups. Cross-graph
// member pairs in `links` become positives; every other same-name pair is a
// hard negative, at most `cap` per group (uniform seeded subsample).
inline std::vector<AlignmentPair> generate_training_pairs(const std::vector<CollisionGroup>& groups,
                                                          const IdentityLinks& links,
                                                          std::size_t cap = kDefaultNegativeCap,
                                                          std::uint64_t seed = 42) {
    std::vector<AlignmentPair> out;
    for (const auto& g : groups) {
        const std::uint64_t n = g.members.size();
        if (n < 2) continue;

        std::vector<std::uint64_t> positive_idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (g.members[i].kg != KgSide::A) break;
            const std::string* partner = links.partner_of_a(g.members[i].id);
            if (!partner) continue;
            const EntityKey b{KgSide::B, *partner};
            auto it = std::lower_bound(g.members.begin(), g.members.end(), b);
            if (it != g.members.end() && *it == b) {
                const auto j = static_cast<std::uint64_t>(it - g.members.begin());
                positive_idx.push_back(detail::pair_row_offset(n, i) + (j - i - 1));
            }
        }
        std::sort(positive_idx.begin(), positive_idx.end());
        for (auto idx : positive_idx) {
            auto [i, j] = detail::decode_pair_index(n, idx);
            out.push_back(detail::oriented_pair(g.members[i], g.members[j], PairLabel::positive));
        }

        const std::uint64_t total = n * (n - 1) / 2;
        const std::uint64_t n_neg = total - positive_idx.size();
        Rng rng(mix64(seed ^ fnv1a64(g.key)));
        const auto ranks = sample_without_replacement(n_neg, std::min<std::uint64_t>(n_neg, cap), rng);
        for (std::uint64_t rank : ranks) {
            std::uint64_t idx = rank;
            for (auto p : positive_idx) {
                if (p <= idx) ++idx;
                else break;
            }
            auto [i, j] = detail::decode_pair_index(n, idx);
            out.push_back(detail::oriented_pair(g.members[i], g.members[j], PairLabel::hard_negative));
        }
    }
    return out;
}

struct EvalPairs {
    std::vector<AlignmentPair> pairs;  // positives first, then negatives
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    std::size_t n_candidates = 0;      // hard-negative candidates before subsampling
    bool shortfall = false;            // fewer candidates than requested
};

inline constexpr std::uint64_t kEvalSamplingSeed = 42;

// Evaluation-mode generation. Positives are the links whose endpoints are
// both seeds and both survived cleaning (appear in some group). Hard
// negatives are same-name non-link pairs touching at least one seed,
// subsampled to `n_negatives` without replacement.
inline EvalPairs generate_eval_pairs(const std::vector<CollisionGroup>& groups, const IdentityLinks& links,
                                     const std::set<EntityKey>& seed_entities, std::size_t n_negatives,
                                     std::uint64_t seed = kEvalSamplingSeed) {
    EvalPairs result;
    std::unordered_set<EntityKey, EntityKeyHash> present;
    for (const auto& g : groups) present.insert(g.members.begin(), g.members.end());

    std::vector<AlignmentPair> positives;
    for (const auto& [a_id, b_id] : links.links()) {
        const EntityKey a{KgSide::A, a_id}, b{KgSide::B, b_id};
        if (!seed_entities.count(a) || !seed_entities.count(b)) continue;
        if (!present.count(a) || !present.count(b)) continue;
        positives.push_back(AlignmentPair{a, b, PairLabel::positive, PairOrigin::cross_kg});
    }
    std::sort(positives.begin(), positives.end(),
              [](const AlignmentPair& x, const AlignmentPair& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });

    // Groups are sorted by key and members by (kg, id), so candidates come
    // out ordered by (name key, id pair).
    std::vector<AlignmentPair> candidates;
    for (const auto& g : groups) {
        const std::size_t n = g.members.size();
        for (std::size_t i = 0; i < n; ++i) {
            const bool i_seed = seed_entities.count(g.members[i]) != 0;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!i_seed && !seed_entities.count(g.members[j])) continue;
                if (links.linked(g.members[i], g.members[j])) continue;
                candidates.push_back(detail::oriented_pair(g.members[i], g.members[j], PairLabel::hard_negative));
            }
        }
    }
    result.n_candidates = candidates.size();
    result.shortfall = candidates.size() < n_negatives;

    Rng rng(seed);
    const auto chosen = sample_without_replacement(candidates.size(), n_negatives, rng);
    result.pairs = std::move(positives);
    result.n_positive = result.pairs.size();
    for (auto idx : chosen) result.pairs.push_back(candidates[idx]);
    result.n_negative = result.pairs.size() - result.n_positive;
    return result;
}

struct LeakageResult {
    std::vector<AlignmentPair> kept;
    std::size_t removed = 0;
};

// Drops every training pair that mentions any entity seen in `eval`.
inline LeakageResult filter_leakage(const std::vector<AlignmentPair>& train, const std::vector<AlignmentPair>& eval) {
    std::unordered_set<EntityKey, EntityKeyHash> eval_entities;
    for (const auto& p : eval) {
        eval_entities.insert(p.a);
        eval_entities.insert(p.b);
    }
    LeakageResult r;
    for (const auto& p : train) {
        if (eval_entities.count(p.a) || eval_entities.count(p.b)) ++r.removed;
        else r.kept.push_back(p);
    }
    return r;
}

struct DatasetStats {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::size_t pos_name_match = 0;
    std::size_t neg_name_match = 0;
    double pos_exact_name_overlap = 0.0;
    double neg_exact_name_overlap = 0.0;
    std::map<std::string, std::size_t> origin_histogram;
};

// Exact-name overlap on case-folded canonical names, per label.
inline DatasetStats compute_stats(const std::vector<AlignmentPair>& pairs, const EntityStore& store) {
    DatasetStats s;
    for (auto o : {PairOrigin::cross_kg, PairOrigin::within_kg_a, PairOrigin::within_kg_b}) {
        s.origin_histogram[std::string(to_string(o))] = 0;
    }
    for (const auto& p : pairs) {
        const bool same = store.at(p.a).key == store.at(p.b).key;
        if (p.label == PairLabel::positive) {
            ++s.n_pos;
            s.pos_name_match += same;
        } else {
            ++s.n_neg;
            s.neg_name_match += same;
        }
        ++s.origin_histogram[std::string(to_string(p.origin))];
    }
    s.pos_exact_name_overlap = s.n_pos ? static_cast<double>(s.pos_name_match) / static_cast<double>(s.n_pos) : 0.0;
    s.neg_exact_name_overlap = s.n_neg ? static_cast<double>(s.neg_name_match) / static_cast<double>(s.n_neg) : 0.0;
    return s;
}

inline nlohmann::ordered_json stats_to_json(const DatasetStats& s) {
    nlohmann::ordered_json j;
    j["n_pos"] = s.n_pos;
    j["n_neg"] = s.n_neg;
    j["pos_name_match"] = s.pos_name_match;
    j["neg_name_match"] = s.neg_name_match;
    j["pos_exact_name_overlap"] = s.pos_exact_name_overlap;
    j["neg_exact_name_overlap"] = s.neg_exact_name_overlap;
    nlohmann::ordered_json hist;
    for (const auto& [k, v] : s.origin_histogram) hist[k] = v;
    j["origin_histogram"] = std::move(hist);
    return j;
}

// Seeded partition by fractions (e.g. {0.2, 0.1, 0.7}). The last part takes
// the rounding remainder; each part keeps input order.
inline std::vector<std::vector<AlignmentPair>> split_pairs(const std::vector<AlignmentPair>& pairs,
                                                           const std::vector<double>& fractions,
                                                           std::uint64_t seed) {
    if (fractions.empty()) throw InvalidArgument("split needs at least one fraction");
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    seeded_shuffle(order, rng);

    std::vector<std::vector<AlignmentPair>> parts(fractions.size());
    std::size_t begin = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        std::size_t count = k + 1 == fractions.size()
                                ? pairs.size() - begin
                                : static_cast<std::size_t>(fractions[k] * static_cast<double>(pairs.size()));
        count = std::min(count, pairs.size() - begin);
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(begin + count));
        std::sort(idx.begin(), idx.end());
        for (auto i : idx) parts[k].push_back(pairs[i]);
        begin += count;
    }
    return parts;
}

// Pair file: {"a_kg","a_id","b_kg","b_id","label","origin"} per line.
inline nlohmann::ordered_json pair_to_json(const AlignmentPair& p) {
    nlohmann::ordered_json j;
    j["a_kg"] = to_string(p.a.kg);
    j["a_id"] = p.a.id;
    j["b_kg"] = to_string(p.b.kg);
    j["b_id"] = p.b.id;
    j["label"] = to_string(p.label);
    j["origin"] = to_string(p.origin);
    return j;
}

inline AlignmentPair pair_from_json(const nlohmann::json& j) {
    AlignmentPair p;
    p.a = EntityKey{parse_kg_side(j.at("a_kg").get<std::string>()), j.at("a_id").get<std::string>()};
    p.b = EntityKey{parse_kg_side(j.at("b_kg").get<std::string>()), j.at("b_id").get<std::string>()};
    p.label = parse_pair_label(j.at("label").get<std::string>());
    p.origin = parse_pair_origin(j.at("origin").get<std::string>());
    return p;
}

inline void write_pairs(std::ostream& out, const std::vector<AlignmentPair>& pairs) {
    for (const auto& p : pairs) out << pair_to_json(p).dump() << '\n';
}

inline std::vector<AlignmentPair> read_pairs(std::istream& in) {
    std::vector<AlignmentPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(pair_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("pair file line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

inline void write_pairs_file(const std::string& path, const std::vector<AlignmentPair>& pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write pair file: " + path);
    write_pairs(out, pairs);
}

inline std::vector<AlignmentPair> read_pairs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pair file: " + path);
    return read_pairs(in);
}

} // namespace helea
