#pragma once

// Dump ingestion and cleaning: TSV records in, cleaned entities out.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "helea/error.hpp"
#include "helea/kg_model.hpp"

namespace helea {

// One dump line as-is: subject_id, subject_label, relation,
// object_id_or_literal, object_label, language_tag.
struct RawRecord {
    std::string subject_id;
    std::optional<std::string> subject_label;
    std::string relation;
    std::string object_id_or_literal;
    std::optional<std::string> object_label;
    std::optional<std::string> language_tag;
};

struct CleanReport {
    std::size_t entities_in = 0;
    std::size_t rejected_bare_qid = 0;
    std::size_t rejected_empty_neighborhood = 0;
    std::size_t rejected_empty_name = 0;
    std::size_t triples_dropped_unresolved = 0;
    std::size_t triples_dropped_non_english = 0;
    std::size_t malformed_records = 0;
    std::size_t entities_out = 0;

    bool consistent() const {
        return entities_out + rejected_bare_qid + rejected_empty_neighborhood + rejected_empty_name ==
               entities_in;
    }
};

inline nlohmann::ordered_json clean_report_to_json(const CleanReport& r) {
    nlohmann::ordered_json j;
    j["entities_in"] = r.entities_in;
    j["rejected_bare_qid"] = r.rejected_bare_qid;
    j["rejected_empty_neighborhood"] = r.rejected_empty_neighborhood;
    j["rejected_empty_name"] = r.rejected_empty_name;
    j["triples_dropped_unresolved"] = r.triples_dropped_unresolved;
    j["triples_dropped_non_english"] = r.triples_dropped_non_english;
    j["malformed_records"] = r.malformed_records;
    j["entities_out"] = r.entities_out;
    return j;
}

struct IngestOptions {
    IdentifierPattern unresolved_pattern;
};

namespace detail {

inline std::optional<std::string> optional_field(std::string_view s) {
    std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    return t;
}

} // namespace detail

// Parses one TSV line. Exactly six tab-separated fields; subject_id,
// relation and object must be non-empty after trimming.
inline RawRecord parse_record(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (fields.size() != 6) {
        throw MalformedRecord("expected 6 tab-separated fields, got " + std::to_string(fields.size()));
    }
    RawRecord r;
    r.subject_id = trim(fields[0]);
    r.subject_label = detail::optional_field(fields[1]);
    r.relation = trim(fields[2]);
    r.object_id_or_literal = trim(fields[3]);
    r.object_label = detail::optional_field(fields[4]);
    r.language_tag = detail::optional_field(fields[5]);
    if (r.subject_id.empty()) throw MalformedRecord("empty subject_id");
    if (r.relation.empty()) throw MalformedRecord("empty relation");
    if (r.object_id_or_literal.empty() && !r.object_label) throw MalformedRecord("empty object");
    return r;
}

inline bool is_english_tag(std::string_view tag) {
    if (tag.size() < 2) return false;
    const auto lower = [](char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c); };
    if (lower(tag[0]) != 'e' || lower(tag[1]) != 'n') return false;
    return tag.size() == 2 || tag[2] == '-' || tag[2] == '_';
}

// Accumulates records per subject and produces cleaned entities.
class DumpIngestor {
public:
    explicit DumpIngestor(KgSide kg, IngestOptions options = {}) : kg_(kg), options_(std::move(options)) {}

    void add_line(std::string_view line) {
        if (trim(line).empty()) return;
        try {
            add(parse_record(line));
        } catch (const MalformedRecord&) {
            ++report_.malformed_records;
        }
    }

    void add(RawRecord r) {
        auto& acc = subjects_[r.subject_id];
        if (!acc.label && r.subject_label) acc.label = r.subject_label;

        if (r.language_tag && !is_english_tag(*r.language_tag)) {
            ++report_.triples_dropped_non_english;
            return;
        }
        std::string tail = r.object_label ? *r.object_label : r.object_id_or_literal;
        if (options_.unresolved_pattern.matches(tail)) {
            ++report_.triples_dropped_unresolved;
            return;
        }
        Triple t{std::move(r.relation), std::move(tail)};
        if (acc.seen.insert({t.relation, t.tail}).second) acc.triples.push_back(std::move(t));
    }

    void add_stream(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) add_line(line);
    }

    // Entities sorted by id, plus the cleaning report.
    std::pair<std::vector<Entity>, CleanReport> finish() && {
        CleanReport report = report_;
        std::vector<Entity> out;
        report.entities_in = subjects_.size();
        for (auto& [id, acc] : subjects_) {
            const std::string raw_name = acc.label ? *acc.label : id;
            if (options_.unresolved_pattern.matches(raw_name)) {
                ++report.rejected_bare_qid;
                continue;
            }
            if (acc.triples.empty()) {
                ++report.rejected_empty_neighborhood;
                continue;
            }
            Entity e = make_entity(kg_, id, raw_name, std::move(acc.triples));
            if (e.canonical_name.empty()) {
                ++report.rejected_empty_name;
                continue;
            }
            out.push_back(std::move(e));
        }
        report.entities_out = out.size();
        return {std::move(out), report};
    }

private:
    struct Accumulator {
        std::optional<std::string> label;
        std::vector<Triple> triples;
        std::set<std::pair<std::string, std::string>> seen;
    };

    KgSide kg_;
    IngestOptions options_;
    CleanReport report_;
    std::map<std::string, Accumulator> subjects_;  // ordered: output sorted by id
};

inline std::pair<std::vector<Entity>, CleanReport> ingest_dump(std::istream& in, KgSide kg,
                                                               IngestOptions options = {}) {
    DumpIngestor ingestor(kg, std::move(options));
    ingestor.add_stream(in);
    return std::move(ingestor).finish();
}

} // namespace helea
