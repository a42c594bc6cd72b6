#pragma once

// End-to-end evaluation: retrieve top-K, rerank listwise, fuse, and score
// the retrieval, binary and hard-negative-pool retrieval tasks. Also hosts
// the name-dependent baselines.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "helea/embedding.hpp"
#include "helea/entity_store.hpp"
#include "helea/error.hpp"
#include "helea/fusion.hpp"
#include "helea/hn_pipeline.hpp"
#include "helea/reranker.hpp"
#include "helea/retriever.hpp"

namespace helea {

inline EntityKey parse_entity_key(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw InvalidArgument("bad entity key: " + std::string(s));
    return EntityKey{parse_kg_side(s.substr(0, colon)), std::string(s.substr(colon + 1))};
}

// ---- name-dependent baselines ----------------------------------------------

inline bool baseline_string_match(const Entity& a, const Entity& b) { return a.key == b.key; }

inline constexpr std::size_t kSubstringMinLength = 2;

// Exact match, or the shorter case-folded name is a contiguous substring of
// the longer one. Raw substring semantics: "rome" matches "romeo and juliet".
inline bool baseline_substring_match(const Entity& a, const Entity& b) {
    if (a.key == b.key) return true;
    const std::string& shorter = a.key.size() <= b.key.size() ? a.key : b.key;
    const std::string& longer = a.key.size() <= b.key.size() ? b.key : a.key;
    if (unicode::codepoint_length(shorter) < kSubstringMinLength) return false;
    return longer.find(shorter) != std::string::npos;
}

inline double name_only_similarity(const Entity& a, const Entity& b, const EmbeddingProvider& provider) {
    const auto v = provider.embed_batch({a.canonical_name, b.canonical_name});
    return cosine(v[0], v[1]);
}

inline bool baseline_name_only(const Entity& a, const Entity& b, const EmbeddingProvider& provider, double threshold) {
    return name_only_similarity(a, b, provider) >= threshold;
}

// ---- two-stage pipeline -----------------------------------------------------

struct RankedCandidate {
    EntityKey key;
    std::size_t retriever_rank = 0;
    double cosine = 0.0;
    double llm_score = 0.0;
    double fused = 0.0;
};

struct PipelineConfig {
    std::size_t top_k = 10;
    double alpha = FusionConfig::kRetrievalAlpha;
    std::size_t budget = kDefaultSerializationBudget;
    RerankPolicy rerank;
};

struct QueryOutcome {
    std::vector<RankedCandidate> ranking;  // fused score descending
    bool fallback_used = false;
    std::size_t llm_calls = 0;
    std::optional<AuditRecord> audit;
};

// Retriever over a candidate index, optionally followed by the listwise
// reranker. Without an LLM client the fused score is the cosine (alpha = 1).
class AlignmentPipeline {
public:
    AlignmentPipeline(const EntityStore& store, const EmbeddingProvider& provider, const VectorIndex& index,
                      LlmClient* llm, PipelineConfig config)
        : store_(store), provider_(provider), index_(index), llm_(llm), config_(config) {
        FusionConfig{config_.alpha}.validate();
        if (config_.top_k == 0) throw InvalidArgument("top_k must be at least 1");
        for (std::size_t i = 0; i < index_.size(); ++i) row_of_[index_.ids()[i]] = i;
    }

    const PipelineConfig& config() const { return config_; }
    bool reranks() const { return llm_ != nullptr; }

    // Ranks candidates for `query`. Entities in `must_include` that retrieval
    // missed are appended after the top-K so they receive an LLM score.
    QueryOutcome rank(const Entity& query, const std::vector<EntityKey>& must_include = {}) const {
        const EmbeddingVector q = embed_one(provider_, serialize_entity(query, config_.budget));
        const RetrievalResult hits = index_.query_topk(q, config_.top_k, query.entity_key().str());

        std::vector<RankedCandidate> cands;
        std::set<std::string> present;
        for (const auto& h : hits.hits) {
            cands.push_back(RankedCandidate{parse_entity_key(h.id), cands.size() + 1, h.score, 0.0, 0.0});
            present.insert(h.id);
        }
        for (const auto& k : must_include) {
            const std::string id = k.str();
            if (present.count(id)) continue;
            auto it = row_of_.find(id);
            const double s = it != row_of_.end()
                                 ? cosine(q, index_.row(it->second))
                                 : cosine(q, embed_one(provider_, serialize_entity(store_.at(k), config_.budget)));
            cands.push_back(RankedCandidate{k, cands.size() + 1, s, 0.0, 0.0});
            present.insert(id);
        }

        QueryOutcome out;
        if (llm_ && !cands.empty()) {
            RerankRequest req;
            req.query_id = query.entity_key().str();
            req.query = &query;
            req.budget = config_.budget;
            for (const auto& c : cands) req.candidates.push_back(RerankCandidate{&store_.at(c.key), c.retriever_rank, c.cosine});
            const auto t0 = std::chrono::steady_clock::now();
            const RerankResult rr = rerank(req, *llm_, config_.rerank);
            const auto t1 = std::chrono::steady_clock::now();
            out.fallback_used = rr.fallback_used;
            out.llm_calls = rr.calls;
            for (std::size_t i = 0; i < cands.size(); ++i) cands[i].llm_score = rr.scores[i];
            out.audit = AuditRecord{req.query_id, prompt_hash(build_prompt(req)), rr.raw_response, rr.fallback_used,
                                    std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()};
        }
        const double alpha = llm_ ? config_.alpha : 1.0;
        for (auto& c : cands) c.fused = fuse(c.cosine, c.llm_score, alpha);
        std::stable_sort(cands.begin(), cands.end(), [](const RankedCandidate& x, const RankedCandidate& y) {
            if (x.fused != y.fused) return x.fused > y.fused;
            return x.retriever_rank < y.retriever_rank;
        });
        out.ranking = std::move(cands);
        return out;
    }

private:
    const EntityStore& store_;
    const EmbeddingProvider& provider_;
    const VectorIndex& index_;
    LlmClient* llm_;
    PipelineConfig config_;
    std::unordered_map<std::string, std::size_t> row_of_;
};

// ---- reports ----------------------------------------------------------------

enum class EvalTask { retrieval, binary, hn_retrieval };

inline std::string_view to_string(EvalTask t) {
    switch (t) {
    case EvalTask::retrieval: return "retrieval";
    case EvalTask::binary: return "binary";
    case EvalTask::hn_retrieval: return "hn_retrieval";
    }
    return "retrieval";
}

inline EvalTask parse_eval_task(std::string_view s) {
    if (s == "retrieval") return EvalTask::retrieval;
    if (s == "binary") return EvalTask::binary;
    if (s == "hn-retrieval" || s == "hn_retrieval") return EvalTask::hn_retrieval;
    throw ConfigError("unknown task: " + std::string(s));
}

struct EvalReport {
    EvalTask task = EvalTask::retrieval;
    std::string method;
    double alpha = 1.0;
    std::map<std::size_t, double> hit_at;
    double mrr = 0.0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    std::optional<double> threshold;
    std::size_t n_queries = 0;
    std::size_t n_fallback = 0;
    std::size_t n_failed = 0;
    std::size_t n_llm_calls = 0;

    double failure_ratio() const {
        const auto total = n_queries + n_failed;
        return total ? static_cast<double>(n_failed) / static_cast<double>(total) : 0.0;
    }
};

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["task"] = to_string(r.task);
    j["method"] = r.method;
    j["alpha"] = r.alpha;
    if (r.task != EvalTask::binary) {
        nlohmann::ordered_json hits;
        for (const auto& [k, v] : r.hit_at) hits[std::to_string(k)] = v;
        j["hit_at"] = std::move(hits);
        j["mrr"] = r.mrr;
    } else {
        j["accuracy"] = r.accuracy;
        j["precision"] = r.precision;
        j["recall"] = r.recall;
        j["f1"] = r.f1;
        if (r.threshold) j["threshold"] = *r.threshold;
        else j["threshold"] = nullptr;
    }
    j["n_queries"] = r.n_queries;
    j["n_fallback"] = r.n_fallback;
    j["n_failed"] = r.n_failed;
    j["n_llm_calls"] = r.n_llm_calls;
    return j;
}

// Aligned text table in the usual results layout.
inline std::string report_to_table(const EvalReport& r) {
    std::vector<std::string> header{"Method"};
    std::vector<std::string> row{r.method};
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    if (r.task == EvalTask::binary) {
        header.insert(header.end(), {"Acc.", "Prec.", "Recall", "F1", "Thr."});
        row.insert(row.end(), {num(r.accuracy), num(r.precision), num(r.recall), num(r.f1),
                               r.threshold ? num(*r.threshold) : std::string("n/a")});
    } else {
        for (const auto& [k, v] : r.hit_at) {
            header.push_back("Hit@" + std::to_string(k));
            row.push_back(num(v));
        }
        header.push_back("MRR");
        row.push_back(num(r.mrr));
    }
    header.insert(header.end(), {"alpha", "queries", "fallback", "failed"});
    row.insert(row.end(), {num(r.alpha), std::to_string(r.n_queries), std::to_string(r.n_fallback),
                           std::to_string(r.n_failed)});
    std::ostringstream os;
    os << "task: " << to_string(r.task) << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::size_t w = std::max(header[i].size(), row[i].size());
            if (i == 0) os << std::left << std::setw(static_cast<int>(w)) << cells[i];
            else os << " | " << std::right << std::setw(static_cast<int>(w)) << cells[i];
        }
        os << '\n';
    };
    line(header);
    std::size_t width = 0;
    for (std::size_t i = 0; i < header.size(); ++i) width += std::max(header[i].size(), row[i].size()) + (i ? 3 : 0);
    os << std::string(width, '-') << '\n';
    line(row);
    return os.str();
}

inline const std::vector<std::size_t>& default_hit_ks() {
    static const std::vector<std::size_t> ks{1, 5, 10};
    return ks;
}

// ---- task drivers -----------------------------------------------------------

using AuditSink = std::function<void(const AuditRecord&)>;

// Hit@K / MRR of the pipeline's fused rankings for every positive row.
inline EvalReport evaluate_ranking(const std::vector<AlignmentPair>& rows, const EntityStore& store,
                                   const AlignmentPipeline& pipeline, EvalTask task, const AuditSink& audit = {},
                                   const std::vector<std::size_t>& ks = default_hit_ks()) {
    EvalReport report;
    report.task = task;
    report.alpha = pipeline.reranks() ? pipeline.config().alpha : 1.0;
    std::vector<RankedList> lists;
    std::unordered_map<std::string, std::string> gold;
    for (const auto& p : rows) {
        if (p.label != PairLabel::positive) continue;
        try {
            const QueryOutcome o = pipeline.rank(store.at(p.a));
            RankedList l;
            l.query_id = p.a.str();
            for (const auto& c : o.ranking) l.candidates.push_back(c.key.str());
            lists.push_back(std::move(l));
            gold[p.a.str()] = p.b.str();
            report.n_fallback += o.fallback_used;
            report.n_llm_calls += o.llm_calls;
            if (audit && o.audit) audit(*o.audit);
        } catch (const TransportError&) {
            ++report.n_failed;
        }
    }
    if (lists.empty() && report.n_failed == 0) throw SingleClassInput("benchmark has no positive rows");
    const RankingMetrics m = ranking_metrics(lists, gold, ks);
    report.hit_at = m.hit_at;
    report.mrr = m.mrr;
    report.n_queries = m.n_queries;
    return report;
}

// Hit@1 etc. of positive side-A queries against a pool containing every
// side-B entity of the benchmark.
inline EvalReport evaluate_hn_retrieval(const std::vector<AlignmentPair>& benchmark, const EntityStore& store,
                                        const AlignmentPipeline& pipeline, const AuditSink& audit = {},
                                        const std::vector<std::size_t>& ks = default_hit_ks()) {
    return evaluate_ranking(benchmark, store, pipeline, EvalTask::hn_retrieval, audit, ks);
}

struct PairScores {
    std::vector<std::optional<double>> scores;  // nullopt: query failed
    std::size_t n_fallback = 0;
    std::size_t n_failed = 0;
    std::size_t n_llm_calls = 0;
    std::size_t n_queries = 0;
};

// Fused score of each row's designated pair. Rows sharing a query entity
// share one ranking (one LLM call per distinct query).
inline PairScores score_pairs(const std::vector<AlignmentPair>& rows, const EntityStore& store,
                              const AlignmentPipeline& pipeline, const AuditSink& audit = {}) {
    std::map<EntityKey, std::vector<std::size_t>> by_query;
    for (std::size_t i = 0; i < rows.size(); ++i) by_query[rows[i].a].push_back(i);
    PairScores out;
    out.scores.assign(rows.size(), std::nullopt);
    for (const auto& [qk, idx] : by_query) {
        std::vector<EntityKey> targets;
        for (auto i : idx) targets.push_back(rows[i].b);
        try {
            const QueryOutcome o = pipeline.rank(store.at(qk), targets);
            ++out.n_queries;
            out.n_fallback += o.fallback_used;
            out.n_llm_calls += o.llm_calls;
            if (audit && o.audit) audit(*o.audit);
            for (auto i : idx) {
                for (const auto& c : o.ranking) {
                    if (c.key == rows[i].b) {
                        out.scores[i] = c.fused;
                        break;
                    }
                }
            }
        } catch (const TransportError&) {
            out.n_failed += 1;
        }
    }
    return out;
}

// Threshold swept on validation scores, then applied fixed to test scores.
// Rows with a failed score are excluded.
inline EvalReport evaluate_binary_scores(const std::vector<AlignmentPair>& val_rows, const PairScores& val,
                                         const std::vector<AlignmentPair>& test_rows, const PairScores& test,
                                         double grid_step = kDefaultGridStep) {
    auto collect = [](const std::vector<AlignmentPair>& rows, const PairScores& s) {
        std::vector<ScoredLabel> out;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (s.scores[i]) out.push_back(ScoredLabel{*s.scores[i], rows[i].label == PairLabel::positive});
        }
        return out;
    };
    const auto v = collect(val_rows, val);
    const auto t = collect(test_rows, test);
    const ThresholdResult th = sweep_threshold(v, grid_step);
    const BinaryMetrics m = binary_metrics(apply_threshold(t, th.threshold), labels_of(t));
    EvalReport r;
    r.task = EvalTask::binary;
    r.accuracy = m.accuracy;
    r.precision = m.precision;
    r.recall = m.recall;
    r.f1 = m.f1;
    r.threshold = th.threshold;
    r.n_queries = test.n_queries;
    r.n_fallback = test.n_fallback;
    r.n_failed = test.n_failed;
    r.n_llm_calls = test.n_llm_calls;
    return r;
}

// Binary report for a boolean predictor (string / substring baselines).
inline EvalReport evaluate_binary_predicate(const std::vector<AlignmentPair>& rows, const EntityStore& store,
                                            const std::function<bool(const Entity&, const Entity&)>& match) {
    std::vector<bool> preds, labels;
    for (const auto& p : rows) {
        preds.push_back(match(store.at(p.a), store.at(p.b)));
        labels.push_back(p.label == PairLabel::positive);
    }
    const BinaryMetrics m = binary_metrics(preds, labels);
    EvalReport r;
    r.task = EvalTask::binary;
    r.accuracy = m.accuracy;
    r.precision = m.precision;
    r.recall = m.recall;
    r.f1 = m.f1;
    r.n_queries = rows.size();
    return r;
}

// Scores keyed by a pairwise function, ranked over a candidate list with ties
// broken by ascending id. Used for baselines on the ranking tasks.
inline EvalReport evaluate_ranking_by_score(const std::vector<AlignmentPair>& rows, const EntityStore& store,
                                            const std::vector<EntityKey>& candidates,
                                            const std::function<double(const Entity&, const Entity&)>& score,
                                            EvalTask task, const std::vector<std::size_t>& ks = default_hit_ks()) {
    std::vector<RankedList> lists;
    std::unordered_map<std::string, std::string> gold;
    for (const auto& p : rows) {
        if (p.label != PairLabel::positive) continue;
        const Entity& q = store.at(p.a);
        std::vector<Hit> hits;
        for (const auto& c : candidates) hits.push_back(Hit{c.str(), score(q, store.at(c))});
        std::sort(hits.begin(), hits.end(), hit_before);
        RankedList l;
        l.query_id = p.a.str();
        for (const auto& h : hits) l.candidates.push_back(h.id);
        lists.push_back(std::move(l));
        gold[p.a.str()] = p.b.str();
    }
    if (lists.empty()) throw SingleClassInput("benchmark has no positive rows");
    const RankingMetrics m = ranking_metrics(lists, gold, ks);
    EvalReport r;
    r.task = task;
    r.hit_at = m.hit_at;
    r.mrr = m.mrr;
    r.n_queries = m.n_queries;
    return r;
}

} // namespace helea
