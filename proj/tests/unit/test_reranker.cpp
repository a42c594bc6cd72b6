#include <gtest/gtest.h>

#include <set>

#include "helea/entity_store.hpp"
#include "helea/evaluation.hpp"
#include "helea/reranker.hpp"
#include "helea/retriever.hpp"
#include "helea/testing/mock_llm.hpp"
#include "helea/testing/synthetic.hpp"
#include "support/ranking_cases.hpp"

using namespace helea;
namespace ht = helea::testing;
using ht::ScriptedLlm;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

struct PromptFixture {
    Entity query = make_entity(KgSide::A, "Q1", "Boston", {{"mayor", "Michelle Wu"}, {"country", "United States"}});
    std::vector<Entity> cands;
    RerankRequest req;

    explicit PromptFixture(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            cands.push_back(make_entity(KgSide::B, "b" + std::to_string(i), "Boston", {{"located in", "Place " + std::to_string(i)}}));
        }
        req.query_id = "KG_A:Q1";
        req.query = &query;
        for (std::size_t i = 0; i < n; ++i) req.candidates.push_back({&cands[i], i + 1, 0.9 - 0.05 * static_cast<double>(i)});
    }
};

} // namespace

TEST(Prompt, TenCandidatesOneInstruction) {
    PromptFixture f(10);
    const std::string p = build_prompt(f.req);
    EXPECT_EQ(count_of(p, "[Candidate "), 10u);
    EXPECT_EQ(count_of(p, "You MUST begin your response immediately with 'RANKING:'.\n"), 1u);
    EXPECT_EQ(count_of(p, "[Query]\nBoston\nmayor: Michelle Wu | country: United States\n"), 1u);
    EXPECT_NE(p.find("[Candidate 10]  (Retriever Rank: 10, Score: 0.450)\nBoston\nlocated in: Place 9\n"), std::string::npos);
}

TEST(Prompt, SingleCandidateGolden) {
    PromptFixture f(1);
    const std::string golden =
        "[System]\n"
        "Base your judgment on the entity names and knowledge graph triples.\n"
        "Entities with identical names can refer to completely different real-world objects\n"
        "\xE2\x80\x94 use the relational structure to disambiguate.\n"
        "\n"
        "[Query]\n"
        "Boston\n"
        "mayor: Michelle Wu | country: United States\n"
        "\n"
        "[Candidate 1]  (Retriever Rank: 1, Score: 0.900)\n"
        "Boston\n"
        "located in: Place 0\n"
        "\n"
        "Rank the candidates from best to worst match for Entity A.\n"
        "You MUST begin your response immediately with 'RANKING:'.\n"
        "Respond strictly in the following format:\n"
        "\n"
        "RANKING: i:<score>, j:<score>, k:<score>, ...\n"
        "(scores are confidence values in [0, 1]; e.g., RANKING: 3:0.92, 1:0.75, 2:0.41, ...)\n"
        "Reasoning: <2-3 sentences citing the discriminating triples>\n";
    EXPECT_EQ(build_prompt(f.req), golden);
}

TEST(Prompt, ByteIdenticalAcrossCalls) {
    PromptFixture f(7), g(7);
    EXPECT_EQ(build_prompt(f.req), build_prompt(f.req));
    EXPECT_EQ(build_prompt(f.req), build_prompt(g.req));
    EXPECT_EQ(prompt_hash(build_prompt(f.req)), prompt_hash(build_prompt(g.req)));
}

TEST(Prompt, RejectsBadRanks) {
    PromptFixture f(3);
    f.req.candidates[1].retriever_rank = 5;
    EXPECT_THROW(build_prompt(f.req), InvalidArgument);
}

TEST(ParseRanking, FixtureCases) {
    const auto& cases = fixtures::ranking_cases();
    ASSERT_EQ(cases.size(), 40u);
    for (const auto& c : cases) {
        SCOPED_TRACE(c.name);
        const auto got = parse_ranking(c.raw, c.n);
        ASSERT_EQ(got.has_value(), c.expected.has_value());
        if (!got) continue;
        ASSERT_EQ(got->size(), c.n);
        for (std::size_t i = 0; i < c.n; ++i) EXPECT_DOUBLE_EQ((*got)[i], (*c.expected)[i]) << "index " << i + 1;
    }
}

TEST(ParseRanking, ScoresAlwaysInUnitInterval) {
    Rng rng(11);
    const std::string alphabet = "RANKING:0123456789.,-e \n";
    for (int t = 0; t < 3000; ++t) {
        std::string raw = t % 2 ? "RANKING: " : "";
        const auto len = uniform_below(rng, 40);
        for (std::uint64_t i = 0; i < len; ++i) raw += alphabet[uniform_below(rng, alphabet.size())];
        const auto n = 1 + uniform_below(rng, 6);
        if (const auto got = parse_ranking(raw, n)) {
            ASSERT_EQ(got->size(), n);
            for (double s : *got) ASSERT_TRUE(s >= 0.0 && s <= 1.0) << raw;
        }
    }
}

TEST(ParseRanking, ZeroCandidatesThrows) { EXPECT_THROW(parse_ranking("RANKING: 1:0.5", 0), InvalidArgument); }

TEST(Fallback, StrictlyDecreasing) {
    const auto s = fallback_scores(4);
    EXPECT_EQ(s, (std::vector<double>{1.0, 0.75, 0.5, 0.25}));
}

TEST(Rerank, OneCallForWellFormedAnswer) {
    PromptFixture f(3);
    ScriptedLlm llm([](const std::string&, std::size_t) { return std::string("RANKING: 3:0.92, 1:0.75, 2:0.41\nReasoning: r"); });
    const auto r = rerank(f.req, llm);
    EXPECT_EQ(llm.calls(), 1u);
    EXPECT_EQ(r.calls, 1u);
    EXPECT_FALSE(r.fallback_used);
    EXPECT_EQ(r.scores, (std::vector<double>{0.75, 0.41, 0.92}));
    EXPECT_EQ(r.order, (std::vector<std::size_t>{2, 0, 1}));
    EXPECT_EQ(llm.prompts().at(0), build_prompt(f.req));
}

TEST(Rerank, ReasksAfterMalformedThenSucceeds) {
    PromptFixture f(2);
    ScriptedLlm llm([](const std::string&, std::size_t k) {
        return k == 0 ? std::string("Let me think.") : std::string("RANKING: 2:0.8, 1:0.1");
    });
    const auto r = rerank(f.req, llm);
    EXPECT_EQ(r.calls, 2u);
    EXPECT_FALSE(r.fallback_used);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 0}));
}

TEST(Rerank, FallsBackToRetrieverOrderAfterReasks) {
    PromptFixture f(5);
    auto llm = ht::make_malformed_llm();
    const auto r = rerank(f.req, llm, RerankPolicy{2});
    EXPECT_EQ(r.calls, 3u);
    EXPECT_TRUE(r.fallback_used);
    EXPECT_EQ(r.scores, fallback_scores(5));
    EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1, 2, 3, 4}));

    auto once = ht::make_malformed_llm();
    EXPECT_EQ(rerank(f.req, once, RerankPolicy{0}).calls, 1u);
}

TEST(Rerank, TransportErrorPropagates) {
    PromptFixture f(2);
    ScriptedLlm llm([](const std::string&, std::size_t) -> std::string { throw TransportError("down"); });
    EXPECT_THROW(rerank(f.req, llm), TransportError);
}

TEST(Rerank, NoCandidatesNoCall) {
    PromptFixture f(0);
    auto llm = ht::make_triple_overlap_llm();
    const auto r = rerank(f.req, llm);
    EXPECT_EQ(llm.calls(), 0u);
    EXPECT_TRUE(r.scores.empty());
}

namespace {

struct PipelineWorld {
    ht::Benchmark bench;
    EntityStore store;
    HashedFeatureProvider provider;
    VectorIndex index;

    explicit PipelineWorld(std::size_t n_pairs)
        : bench(ht::make_benchmark([&] {
              ht::BenchmarkSpec s;
              s.n_pairs = n_pairs;
              s.n_name_mismatch = n_pairs / 20;
              s.seed = 5;
              return s;
          }())) {
        store.add_all(bench.entities);
        index = build_hn_pool(bench.hn_split(), store, provider);
    }
};

std::vector<std::string> keys_of(const QueryOutcome& o) {
    std::vector<std::string> out;
    for (const auto& c : o.ranking) out.push_back(c.key.str());
    return out;
}

} // namespace

TEST(Pipeline, FallbackKeepsRetrieverOrderForEveryAlpha) {
    PipelineWorld w(60);
    const AlignmentPipeline plain(w.store, w.provider, w.index, nullptr, PipelineConfig{});
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto llm = ht::make_malformed_llm();
        PipelineConfig cfg;
        cfg.alpha = alpha;
        const AlignmentPipeline p(w.store, w.provider, w.index, &llm, cfg);
        for (std::size_t i = 0; i < 20; ++i) {
            const Entity& q = w.store.at(w.bench.positives[i].a);
            const auto o = p.rank(q);
            EXPECT_TRUE(o.fallback_used);
            EXPECT_EQ(keys_of(o), keys_of(plain.rank(q))) << "alpha " << alpha;
            for (std::size_t r = 0; r < o.ranking.size(); ++r) EXPECT_EQ(o.ranking[r].retriever_rank, r + 1);
        }
    }
}

TEST(Pipeline, NoLlmMeansCosineOrder) {
    PipelineWorld w(30);
    PipelineConfig cfg;
    cfg.alpha = 0.25;
    const AlignmentPipeline p(w.store, w.provider, w.index, nullptr, cfg);
    const auto o = p.rank(w.store.at(w.bench.positives[0].a));
    ASSERT_EQ(o.ranking.size(), 10u);
    for (const auto& c : o.ranking) EXPECT_DOUBLE_EQ(c.fused, c.cosine);
    EXPECT_EQ(o.llm_calls, 0u);
    EXPECT_FALSE(o.audit.has_value());
}

TEST(Pipeline, OneLlmCallPerQueryAndAuditFields) {
    PipelineWorld w(40);
    auto llm = ht::make_triple_overlap_llm();
    const AlignmentPipeline p(w.store, w.provider, w.index, &llm, PipelineConfig{});
    std::vector<AuditRecord> audit;
    const auto report = evaluate_ranking(w.bench.hn_split(), w.store, p, EvalTask::hn_retrieval,
                                         [&](const AuditRecord& r) { audit.push_back(r); });
    EXPECT_EQ(llm.calls(), 40u);
    EXPECT_EQ(report.n_llm_calls, 40u);
    EXPECT_EQ(report.n_fallback, 0u);
    ASSERT_EQ(audit.size(), 40u);
    const auto prompts = llm.prompts();
    std::set<std::string> ids;
    for (std::size_t i = 0; i < audit.size(); ++i) {
        EXPECT_EQ(audit[i].prompt_hash, prompt_hash(prompts[i]));
        EXPECT_EQ(audit[i].raw_response, ht::triple_overlap_answer(prompts[i]));
        EXPECT_FALSE(audit[i].fallback_used);
        EXPECT_GE(audit[i].latency_ms, 0);
        ids.insert(audit[i].query_id);
    }
    EXPECT_EQ(ids.size(), 40u);
    const auto j = audit_to_json(audit[0]);
    EXPECT_EQ(j.size(), 5u);
    for (const char* k : {"query_id", "prompt_hash", "raw_response", "fallback_used", "latency_ms"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Pipeline, TwoMalformedOfFiveHundred) {
    PipelineWorld w(500);
    const std::set<std::string> broken = {w.store.at(w.bench.positives[17].a).canonical_name,
                                          w.store.at(w.bench.positives[311].a).canonical_name};
    std::size_t expected_broken = 0;
    for (const auto& pos : w.bench.positives) expected_broken += broken.count(w.store.at(pos.a).canonical_name);
    ASSERT_EQ(expected_broken, 2u);

    ScriptedLlm llm([&](const std::string& prompt, std::size_t) {
        if (broken.count(ht::parse_prompt(prompt).query.name)) return std::string("no idea");
        return ht::triple_overlap_answer(prompt);
    });
    const AlignmentPipeline p(w.store, w.provider, w.index, &llm, PipelineConfig{});
    const auto report = evaluate_ranking(w.bench.hn_split(), w.store, p, EvalTask::hn_retrieval);
    EXPECT_EQ(report.n_queries, 500u);
    EXPECT_EQ(report.n_fallback, 2u);
    EXPECT_DOUBLE_EQ(static_cast<double>(report.n_fallback) / static_cast<double>(report.n_queries), 0.004);
    EXPECT_EQ(report.n_llm_calls, 498u + 2u * 3u);
}

TEST(Pipeline, MustIncludeAppendsMissedEntity) {
    PipelineWorld w(50);
    PipelineConfig cfg;
    cfg.top_k = 1;
    const AlignmentPipeline p(w.store, w.provider, w.index, nullptr, cfg);
    const auto& pos = w.bench.positives[3];
    const auto& neg = w.bench.hard_negatives[3];
    const auto o = p.rank(w.store.at(pos.a), {pos.b, neg.b});
    std::set<std::string> got;
    for (const auto& c : o.ranking) got.insert(c.key.str());
    EXPECT_TRUE(got.count(pos.b.str()));
    EXPECT_TRUE(got.count(neg.b.str()));
    EXPECT_LE(o.ranking.size(), 3u);
}
