#pragma once

// Core knowledge-graph types shared by every stage: triples, entities,
// name canonicalization and the `name | rel: tail | ...` serialization.

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "helea/error.hpp"
#include "helea/unicode.hpp"

namespace helea {

enum class KgSide { A, B };

inline std::string_view to_string(KgSide kg) { return kg == KgSide::A ? "KG_A" : "KG_B"; }

inline KgSide parse_kg_side(std::string_view s) {
    if (s == "KG_A" || s == "A" || s == "a") return KgSide::A;
    if (s == "KG_B" || s == "B" || s == "b") return KgSide::B;
    throw InvalidArgument("unknown KG side: " + std::string(s));
}

struct Triple {
    std::string relation;
    std::string tail;

    friend bool operator==(const Triple&, const Triple&) = default;
};

// Identity of an entity across both graphs.
struct EntityKey {
    KgSide kg = KgSide::A;
    std::string id;

    friend bool operator==(const EntityKey&, const EntityKey&) = default;
    friend auto operator<=>(const EntityKey& x, const EntityKey& y) {
        if (x.kg != y.kg) return x.kg <=> y.kg;
        return x.id.compare(y.id) <=> 0;
    }

    std::string str() const { return std::string(to_string(kg)) + ":" + id; }
};

struct EntityKeyHash {
    std::size_t operator()(const EntityKey& k) const noexcept {
        return std::hash<std::string>{}(k.id) ^ (k.kg == KgSide::A ? 0x9e3779b9U : 0x7f4a7c15U);
    }
};

namespace detail {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

// If `s` ends in " (...)" with balanced parentheses and something before it,
// returns the prefix without the group.
inline std::optional<std::string> strip_trailing_group(const std::string& s) {
    if (s.empty() || s.back() != ')') return std::nullopt;
    int depth = 0;
    for (std::size_t i = s.size(); i-- > 0;) {
        if (s[i] == ')') {
            ++depth;
        } else if (s[i] == '(') {
            if (--depth == 0) {
                if (i < 2 || s[i - 1] != ' ') return std::nullopt;
                return s.substr(0, i - 1);
            }
        }
    }
    return std::nullopt;
}

} // namespace detail

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && detail::is_ascii_space(s[b])) ++b;
    while (e > b && detail::is_ascii_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

// NFKC, underscores to spaces, whitespace collapsed, trailing parenthetical
// qualifiers removed. Case is preserved.
//
// Trailing groups are stripped until none remains ("A (b) (c)" -> "A"), which
// keeps the function idempotent. Groups that are not at the very end are
// left alone.
inline std::string canonicalize_name(std::string_view raw) {
    std::string s = unicode::nfkc(raw);
    for (char& c : s) {
        if (c == '_') c = ' ';
    }
    s = detail::collapse_whitespace(s);
    while (auto stripped = detail::strip_trailing_group(s)) {
        s = detail::collapse_whitespace(*stripped);
    }
    return s;
}

// Case-insensitive grouping key over an already canonical name.
inline std::string name_key(std::string_view canonical) { return unicode::nfkc_casefold(canonical); }

// Matches opaque identifiers such as "Q12345". The default is a fast
// hand-written check; a custom regex can be supplied for other graphs.
class IdentifierPattern {
public:
    IdentifierPattern() = default;
    explicit IdentifierPattern(const std::string& regex) : regex_(std::regex(regex)) {}

    bool matches(std::string_view token) const {
        if (regex_) return std::regex_match(token.begin(), token.end(), *regex_);
        if (token.size() < 2 || token[0] != 'Q') return false;
        for (std::size_t i = 1; i < token.size(); ++i) {
            if (token[i] < '0' || token[i] > '9') return false;
        }
        return true;
    }

private:
    std::optional<std::regex> regex_;
};

struct Entity {
    KgSide kg = KgSide::A;
    std::string id;
    std::string raw_name;
    std::string canonical_name;
    std::string key;  // name_key(canonical_name)
    std::vector<Triple> triples;

    EntityKey entity_key() const { return EntityKey{kg, id}; }
};

inline Entity make_entity(KgSide kg, std::string id, std::string raw_name, std::vector<Triple> triples) {
    Entity e;
    e.kg = kg;
    e.id = std::move(id);
    e.canonical_name = canonicalize_name(raw_name);
    e.key = name_key(e.canonical_name);
    e.raw_name = std::move(raw_name);
    e.triples = std::move(triples);
    return e;
}

inline constexpr std::size_t kDefaultSerializationBudget = 1000;

// Joins triples as "rel: tail | rel: tail", starting from `prefix`, stopping
// before the first triple that would push the length (in code points) past
// `budget`. The prefix is always kept.
inline std::string serialize_with_prefix(std::string prefix, const std::vector<Triple>& triples,
                                         std::size_t budget, std::string_view separator) {
    std::string out = std::move(prefix);
    std::size_t length = unicode::codepoint_length(out);
    bool first = out.empty();
    for (const auto& t : triples) {
        std::string piece;
        if (!first) piece.append(separator);
        piece.append(t.relation).append(": ").append(t.tail);
        const std::size_t piece_len = unicode::codepoint_length(piece);
        if (length + piece_len > budget) break;
        out += piece;
        length += piece_len;
        first = false;
    }
    return out;
}

// rep(e): "<canonical_name> | <rel1>: <tail1> | ..."
inline std::string serialize_entity(const Entity& e, std::size_t budget = kDefaultSerializationBudget) {
    return serialize_with_prefix(e.canonical_name, e.triples, budget, " | ");
}

// Triples only, for the reranking prompt where the name sits on its own line.
inline std::string serialize_context(const Entity& e, std::size_t budget = kDefaultSerializationBudget) {
    return serialize_with_prefix(std::string(), e.triples, budget, " | ");
}

} // namespace helea
