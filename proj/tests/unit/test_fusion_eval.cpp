#include <gtest/gtest.h>

#include <set>

#include "helea/entity_store.hpp"
#include "helea/evaluation.hpp"
#include "helea/fusion.hpp"
#include "helea/testing/synthetic.hpp"
#include "support/oracles.hpp"

using namespace helea;
namespace ht = helea::testing;

TEST(Fuse, Endpoints) {
    EXPECT_EQ(fuse(0.37, 0.91, 1.0), 0.37);
    EXPECT_EQ(fuse(0.37, 0.91, 0.0), 0.91);
    EXPECT_EQ(fuse(-1.0, 0.0, 1.0), -1.0);
    EXPECT_DOUBLE_EQ(fuse(0.4, 0.8, 0.5), 0.6);
}

TEST(Fuse, LowWeightOnCosineRescuesStructuralMatch) {
    // same-name impostor with high cosine vs the true match
    const double impostor = fuse(0.85, 0.10, FusionConfig::kHardNegativeAlpha);
    const double truth = fuse(0.72, 0.80, FusionConfig::kHardNegativeAlpha);
    EXPECT_NEAR(impostor, 0.2875, 1e-12);
    EXPECT_NEAR(truth, 0.78, 1e-12);
    EXPECT_LT(impostor, truth);
    EXPECT_GT(fuse(0.85, 0.10, FusionConfig::kRetrievalAlpha), fuse(0.72, 0.10, FusionConfig::kRetrievalAlpha));
}

TEST(Fuse, RangeErrors) {
    EXPECT_THROW(fuse(1.5, 0.5, 0.5), RangeError);
    EXPECT_THROW(fuse(0.5, -0.2, 0.5), RangeError);
    EXPECT_THROW(fuse(0.5, 0.5, 1.01), RangeError);
    EXPECT_THROW(fuse(0.5, 0.5, -0.01), RangeError);
    EXPECT_THROW(FusionConfig{2.0}.validate(), RangeError);
    EXPECT_NO_THROW(FusionConfig{}.validate());
}

TEST(Fuse, MonotoneInBothInputs) {
    Rng rng(3);
    for (int t = 0; t < 5000; ++t) {
        const double a = uniform_unit(rng);
        const double s = 2 * uniform_unit(rng) - 1, l = uniform_unit(rng);
        const double ds = uniform_unit(rng) * (1 - s), dl = uniform_unit(rng) * (1 - l);
        const double f = fuse(s, l, a);
        EXPECT_GE(fuse(s + ds, l, a), f);
        EXPECT_GE(fuse(s, l + dl, a), f);
        EXPECT_GE(f, std::min(s, l) - 1e-12);
        EXPECT_LE(f, std::max(s, l) + 1e-12);
    }
}

TEST(BinaryMetrics, AlwaysPositiveOnHardNegativeSplit) {
    std::vector<bool> preds(29718, true), labels(29718, false);
    std::fill(labels.begin(), labels.begin() + 14718, true);
    const auto m = binary_metrics(preds, labels);
    EXPECT_NEAR(m.precision, 0.4952, 1e-4);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_NEAR(m.f1, 0.6624, 1e-4);

    std::vector<bool> p2(27635, true), l2(27635, false);
    std::fill(l2.begin(), l2.begin() + 12635, true);
    EXPECT_NEAR(binary_metrics(p2, l2).f1, 0.628, 5e-4);
}

TEST(BinaryMetrics, SmallConfusionByHand) {
    const std::vector<bool> preds = {1, 1, 1, 0, 0, 1, 0, 0, 1, 0};
    const std::vector<bool> labels = {1, 0, 1, 1, 0, 1, 0, 1, 0, 0};
    const auto m = binary_metrics(preds, labels);
    EXPECT_EQ(m.tp, 3u);
    EXPECT_EQ(m.fp, 2u);
    EXPECT_EQ(m.fn, 2u);
    EXPECT_EQ(m.tn, 3u);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
    EXPECT_DOUBLE_EQ(m.precision, 0.6);
    EXPECT_DOUBLE_EQ(m.recall, 0.6);
    EXPECT_DOUBLE_EQ(m.f1, 0.6);
    EXPECT_THROW(binary_metrics({true}, {true, false}), LengthMismatch);
    EXPECT_DOUBLE_EQ(binary_metrics({false, false}, {true, false}).f1, 0.0);
}

namespace {

std::vector<ScoredLabel> random_scored(Rng& rng, std::size_t n, bool coarse) {
    std::vector<ScoredLabel> v;
    for (std::size_t i = 0; i < n; ++i) {
        const bool label = uniform_below(rng, 2);
        double s = uniform_unit(rng) * 0.6 + (label ? 0.3 : 0.0);
        if (coarse) s = std::round(s * 20) / 20;
        v.push_back({s, label});
    }
    v[0].label = true;
    v[1].label = false;
    return v;
}

} // namespace

TEST(Sweep, MatchesExhaustiveOracle) {
    Rng rng(17);
    for (int t = 0; t < 300; ++t) {
        const auto data = random_scored(rng, 2 + uniform_below(rng, 120), t % 3 == 0);
        const auto got = sweep_threshold(data);
        const auto want = oracles::sweep_oracle(data);
        ASSERT_DOUBLE_EQ(got.f1_at_threshold, want.f1) << "trial " << t;
        ASSERT_EQ(apply_threshold(data, got.threshold), apply_threshold(data, want.threshold)) << "trial " << t;
    }
}

TEST(Sweep, ReportedF1IsTheF1AtThreshold) {
    Rng rng(19);
    for (int t = 0; t < 100; ++t) {
        const auto data = random_scored(rng, 50, false);
        const auto r = sweep_threshold(data, 0.01);
        EXPECT_DOUBLE_EQ(r.f1_at_threshold, binary_metrics(apply_threshold(data, r.threshold), labels_of(data)).f1);
        EXPECT_DOUBLE_EQ(r.sweep_grid, 0.01);
    }
}

TEST(Sweep, ErrorsAndSeparableData) {
    EXPECT_THROW(sweep_threshold({{0.1, true}, {0.9, true}}), SingleClassInput);
    EXPECT_THROW(sweep_threshold({}), SingleClassInput);
    EXPECT_THROW(sweep_threshold({{0.1, true}, {0.9, false}}, 0.0), InvalidArgument);
    const std::vector<ScoredLabel> sep = {{0.1, false}, {0.2, false}, {0.7, true}, {0.95, true}};
    const auto r = sweep_threshold(sep);
    EXPECT_DOUBLE_EQ(r.f1_at_threshold, 1.0);
    EXPECT_GT(r.threshold, 0.2);
    EXPECT_LE(r.threshold, 0.7);
}

TEST(RankingMetrics, MrrByHand) {
    const std::vector<RankedList> lists = {{"q1", {"g1", "x", "y", "z"}}, {"q2", {"x", "g2", "y", "z"}}, {"q3", {"x", "y", "z", "g3"}}};
    const std::unordered_map<std::string, std::string> gold = {{"q1", "g1"}, {"q2", "g2"}, {"q3", "g3"}};
    const auto m = ranking_metrics(lists, gold, {1, 3, 10});
    EXPECT_NEAR(m.mrr, 0.583333, 1e-6);
    EXPECT_DOUBLE_EQ(m.hit_at.at(1), 1.0 / 3);
    EXPECT_DOUBLE_EQ(m.hit_at.at(3), 2.0 / 3);
    EXPECT_DOUBLE_EQ(m.hit_at.at(10), 1.0);
    EXPECT_EQ(m.n_queries, 3u);
    EXPECT_THROW(ranking_metrics(lists, {{"q1", "g1"}}, {1}), MissingGold);
}

TEST(RankingMetrics, HitAtKMonotoneAndBoundedByMrr) {
    Rng rng(23);
    for (int t = 0; t < 50; ++t) {
        std::vector<RankedList> lists;
        std::unordered_map<std::string, std::string> gold;
        for (int q = 0; q < 30; ++q) {
            RankedList l{"q" + std::to_string(q), {}};
            for (int c = 0; c < 20; ++c) l.candidates.push_back("c" + std::to_string(c));
            seeded_shuffle(l.candidates, rng);
            gold[l.query_id] = "c" + std::to_string(uniform_below(rng, 25));  // some gold ids absent
            lists.push_back(l);
        }
        const auto m = ranking_metrics(lists, gold, {1, 2, 5, 10, 20});
        double prev = 0;
        for (const auto& [k, v] : m.hit_at) {
            EXPECT_GE(v, prev);
            prev = v;
        }
        EXPECT_GE(m.mrr, m.hit_at.at(1));
        EXPECT_LE(m.mrr, m.hit_at.at(20));
    }
}

namespace {

Entity ent(KgSide kg, const std::string& id, const std::string& name, std::vector<Triple> ts = {{"label", "x"}}) {
    return make_entity(kg, id, name, std::move(ts));
}

} // namespace

TEST(Baselines, StringMatchFallsForSameName) {
    const auto a = ent(KgSide::A, "1", "Jim Jones"), b = ent(KgSide::B, "2", "jim jones"), c = ent(KgSide::B, "3", "Jim Jones (musician)");
    EXPECT_TRUE(baseline_string_match(a, b));
    EXPECT_TRUE(baseline_string_match(a, c));
    EXPECT_FALSE(baseline_string_match(a, ent(KgSide::B, "4", "Jim Jonas")));
}

TEST(Baselines, SubstringContainment) {
    const auto ny = ent(KgSide::A, "1", "New York"), nyc = ent(KgSide::B, "2", "New York City");
    EXPECT_FALSE(baseline_string_match(ny, nyc));
    EXPECT_TRUE(baseline_substring_match(ny, nyc));
    EXPECT_TRUE(baseline_substring_match(nyc, ny));
    EXPECT_TRUE(baseline_substring_match(ent(KgSide::A, "3", "Rome"), ent(KgSide::B, "4", "Romeo")));
    EXPECT_FALSE(baseline_substring_match(ent(KgSide::A, "5", "Paris"), ent(KgSide::B, "6", "Lyon")));
    EXPECT_FALSE(baseline_substring_match(ent(KgSide::A, "7", "X"), ent(KgSide::B, "8", "Xavier")));
}

TEST(Baselines, UnicodeFormsMatch) {
    EXPECT_TRUE(baseline_string_match(ent(KgSide::A, "1", "Caf\xC3\xA9"), ent(KgSide::B, "2", "Cafe\xCC\x81")));
    EXPECT_TRUE(baseline_string_match(ent(KgSide::A, "3", "\xEF\xBC\xA1\xEF\xBC\xA2"), ent(KgSide::B, "4", "ab")));
}

TEST(Baselines, NameOnlyEmbeddingCannotSeparateSameName) {
    HashedFeatureProvider p;
    const auto a = ent(KgSide::A, "1", "Boston", {{"mayor", "Wu"}});
    const auto b = ent(KgSide::B, "2", "Boston", {{"county", "Suffolk"}});
    EXPECT_NEAR(name_only_similarity(a, b, p), 1.0, 1e-6);
    EXPECT_TRUE(baseline_name_only(a, b, p, 0.99));
}

namespace {

struct BenchWorld {
    ht::Benchmark bench;
    EntityStore store;

    explicit BenchWorld(std::size_t mismatches) : bench(ht::make_benchmark([&] {
        ht::BenchmarkSpec s;
        s.n_pairs = 200;
        s.n_name_mismatch = mismatches;
        s.seed = 9;
        return s;
    }())) {
        store.add_all(bench.entities);
    }

    std::vector<EntityKey> pool() const {
        std::vector<EntityKey> out;
        for (const auto& id : hn_pool_members(bench.hn_split())) out.push_back(id);
        return out;
    }
};

double tail_jaccard(const Entity& x, const Entity& y) {
    std::set<std::string> a, b;
    for (const auto& t : x.triples) a.insert(t.tail);
    for (const auto& t : y.triples) b.insert(t.tail);
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

} // namespace

TEST(HnEvaluation, NameOnlyDegeneratesToAlwaysPositive) {
    BenchWorld w(0);
    HashedFeatureProvider p;
    PairScores s;
    for (const auto& r : w.bench.hn_split()) s.scores.push_back(name_only_similarity(w.store.at(r.a), w.store.at(r.b), p));
    const auto rows = w.bench.hn_split();
    const auto report = evaluate_binary_scores(rows, s, rows, s);
    EXPECT_NEAR(report.recall, 1.0, 1e-12);
    EXPECT_NEAR(report.precision, 0.5, 1e-12);
    EXPECT_NEAR(report.f1, 2.0 / 3.0, 1e-12);
}

TEST(HnEvaluation, StructureBeatsNamesOnRetrieval) {
    BenchWorld w(10);
    HashedFeatureProvider p;
    const auto rows = w.bench.hn_split();
    const auto structural = evaluate_ranking_by_score(rows, w.store, w.pool(), tail_jaccard, EvalTask::hn_retrieval);
    const auto names = evaluate_ranking_by_score(
        rows, w.store, w.pool(), [&](const Entity& a, const Entity& b) { return name_only_similarity(a, b, p); },
        EvalTask::hn_retrieval);
    EXPECT_DOUBLE_EQ(structural.hit_at.at(1), 1.0);
    EXPECT_LE(names.hit_at.at(1), 0.5 + 0.05);
    EXPECT_EQ(structural.n_queries, 200u);
}

TEST(HnEvaluation, PredicateBaselineAndEmptyPositives) {
    BenchWorld w(20);
    const auto rows = w.bench.hn_split();
    const auto r = evaluate_binary_predicate(rows, w.store, baseline_string_match);
    EXPECT_EQ(r.n_queries, rows.size());
    // every hard negative shares its query's name; 20 positives were renamed
    EXPECT_EQ(r.precision, 180.0 / 380.0);
    EXPECT_EQ(r.recall, 180.0 / 200.0);

    std::vector<AlignmentPair> negs = w.bench.hard_negatives;
    EXPECT_THROW(evaluate_ranking_by_score(negs, w.store, w.pool(), tail_jaccard, EvalTask::hn_retrieval), SingleClassInput);
}

TEST(Reports, JsonAndTableFields) {
    EvalReport r;
    r.task = EvalTask::binary;
    r.alpha = 0.25;
    r.f1 = 0.5;
    r.threshold = 0.4;
    r.n_queries = 10;
    r.n_fallback = 1;
    const auto j = report_to_json(r);
    EXPECT_EQ(j.at("task"), "binary");
    EXPECT_DOUBLE_EQ(j.at("threshold").get<double>(), 0.4);
    EXPECT_DOUBLE_EQ(r.failure_ratio(), 0.0);
    const auto table = report_to_table(r);
    EXPECT_NE(table.find("task: binary"), std::string::npos);
    EXPECT_NE(table.find("Thr."), std::string::npos);
    EXPECT_NE(table.find("0.400"), std::string::npos);
    EXPECT_EQ(parse_eval_task("hn-retrieval"), EvalTask::hn_retrieval);
    EXPECT_THROW(parse_eval_task("cluster"), ConfigError);
}
