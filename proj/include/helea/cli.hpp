#pragma once

// Subcommands of the `helea` tool. Each cmd_* reads its inputs from the run
// configuration and the artifacts of earlier stages under the output
// directory, and writes its own artifacts there under fixed names.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "helea/config.hpp"
#include "helea/embedding.hpp"
#include "helea/entity_store.hpp"
#include "helea/evaluation.hpp"
#include "helea/hn_pipeline.hpp"
#include "helea/http_embedding.hpp"
#include "helea/ingest.hpp"
#include "helea/reranker.hpp"
#include "helea/retriever.hpp"
#include "helea/toy_encoder.hpp"

namespace helea::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

namespace names {
inline constexpr const char* entities_a = "entities_a.jsonl";
inline constexpr const char* entities_b = "entities_b.jsonl";
inline constexpr const char* clean_report = "clean_report.json";
inline constexpr const char* mined_train = "mined_train.jsonl";
inline constexpr const char* mined_eval = "mined_eval.jsonl";
inline constexpr const char* mine_report = "mine_report.json";
inline constexpr const char* pairs_train = "pairs_train.jsonl";
inline constexpr const char* pairs_val = "pairs_val.jsonl";
inline constexpr const char* pairs_eval = "pairs_eval.jsonl";
inline constexpr const char* stats = "stats.json";
inline constexpr const char* encoder = "encoder.bin";
inline constexpr const char* train_report = "train_report.json";
inline constexpr const char* embeddings_a = "embeddings_a.bin";
inline constexpr const char* embeddings_b = "embeddings_b.bin";
inline constexpr const char* embeddings_meta = "embeddings.json";
inline constexpr const char* retrieval = "retrieval.jsonl";
inline constexpr const char* rerank = "rerank.jsonl";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* audit = "audit.jsonl";
} // namespace names

inline fs::path artifact(const RunConfig& c, const char* name) { return fs::path(c.out) / name; }

inline void log(const std::string& msg) { std::cerr << "[helea] " << msg << '\n'; }

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

inline void write_json(const fs::path& p, const nlohmann::ordered_json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::string require_artifact(const RunConfig& c, const char* name, const char* stage) {
    const fs::path p = artifact(c, name);
    if (!fs::is_regular_file(p)) {
        throw ConfigError(std::string("missing artifact ") + p.string() + " (run `helea " + stage + "` first)");
    }
    return p.string();
}

inline EntityStore load_store(const RunConfig& c) {
    EntityStore store;
    store.add_all(read_entities_file(require_artifact(c, names::entities_a, "ingest")));
    store.add_all(read_entities_file(require_artifact(c, names::entities_b, "ingest")));
    return store;
}

// ---- stage 1: ingest --------------------------------------------------------

inline int cmd_ingest(const RunConfig& c) {
    RunConfig::require_file(c.dump_a, "KG_A dump");
    RunConfig::require_file(c.dump_b, "KG_B dump");
    fs::create_directories(c.out);
    nlohmann::ordered_json report;
    for (auto [side, path, name] : {std::tuple{KgSide::A, c.dump_a, names::entities_a},
                                    std::tuple{KgSide::B, c.dump_b, names::entities_b}}) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open dump: " + path);
        auto [entities, r] = ingest_dump(in, side);
        write_entities_file(artifact(c, name).string(), entities);
        report[std::string(to_string(side))] = clean_report_to_json(r);
        log(std::string(to_string(side)) + ": " + std::to_string(r.entities_out) + " of " +
            std::to_string(r.entities_in) + " entities kept");
    }
    write_json(artifact(c, names::clean_report), report);
    return kExitOk;
}

// ---- stage 2: mine ----------------------------------------------------------

inline int cmd_mine(const RunConfig& c) {
    RunConfig::require_file(c.links, "link file");
    RunConfig::require_file(c.seed_links, "seed link file");
    const EntityStore store = load_store(c);
    const IdentityLinks links = read_links_file(c.links);
    const IdentityLinks seeds = read_links_file(c.seed_links);
    const auto groups = build_collision_groups(store.entities());

    const auto train = generate_training_pairs(groups, links, c.neg_cap, c.seed);
    const EvalPairs eval = generate_eval_pairs(groups, links, seeds.endpoints(), c.eval_negatives, c.seed);
    write_pairs_file(artifact(c, names::mined_train).string(), train);
    write_pairs_file(artifact(c, names::mined_eval).string(), eval.pairs);

    std::size_t multi = 0;
    for (const auto& g : groups) multi += !g.singleton();
    nlohmann::ordered_json r;
    r["groups"] = groups.size();
    r["collision_groups"] = multi;
    r["train_pairs"] = train.size();
    r["eval_positives"] = eval.n_positive;
    r["eval_negatives"] = eval.n_negative;
    r["eval_candidates"] = eval.n_candidates;
    r["eval_shortfall"] = eval.shortfall;
    write_json(artifact(c, names::mine_report), r);
    if (eval.shortfall) {
        log("only " + std::to_string(eval.n_candidates) + " hard-negative candidates for " +
            std::to_string(c.eval_negatives) + " requested");
    }
    return kExitOk;
}

// ---- stage 3: assemble ------------------------------------------------------

inline int cmd_assemble(const RunConfig& c) {
    const EntityStore store = load_store(c);
    const auto train = read_pairs_file(require_artifact(c, names::mined_train, "mine"));
    const auto eval = read_pairs_file(require_artifact(c, names::mined_eval, "mine"));

    const LeakageResult filtered = filter_leakage(train, eval);
    std::size_t n_val = static_cast<std::size_t>(static_cast<double>(filtered.kept.size()) * c.val_fraction);
    n_val = std::min(n_val, c.val_max);
    // Half-count nudge so truncation inside the split lands exactly on n_val.
    const double frac = filtered.kept.empty() ? 0.0 : (static_cast<double>(n_val) + 0.5) / static_cast<double>(filtered.kept.size());
    const auto parts = split_pairs(filtered.kept, {frac, 1.0 - frac}, c.seed);
    const auto& val = parts[0];
    const auto& rest = parts[1];

    write_pairs_file(artifact(c, names::pairs_train).string(), rest);
    write_pairs_file(artifact(c, names::pairs_val).string(), val);
    write_pairs_file(artifact(c, names::pairs_eval).string(), eval);

    nlohmann::ordered_json s;
    s["train"] = stats_to_json(compute_stats(rest, store));
    s["val"] = stats_to_json(compute_stats(val, store));
    s["eval"] = stats_to_json(compute_stats(eval, store));
    s["leakage_removed"] = filtered.removed;
    write_json(artifact(c, names::stats), s);
    log(std::to_string(filtered.removed) + " training pairs removed for leakage");
    return kExitOk;
}

// ---- training ---------------------------------------------------------------

inline int cmd_train(const RunConfig& c) {
    const EntityStore store = load_store(c);
    const auto rows = read_pairs_file(require_artifact(c, names::pairs_train, "assemble"));
    std::vector<TrainingExample> corpus;
    for (const auto& p : rows) {
        const Entity& a = store.at(p.a);
        corpus.push_back(TrainingExample{serialize_entity(a, c.budget), serialize_entity(store.at(p.b), c.budget),
                                         p.label == PairLabel::positive ? 1 : 0, a.key});
    }
    TrainConfig tc;
    tc.seed = c.seed;
    tc.steps = c.train_steps;
    tc.batch_size = c.train_batch;
    tc.learning_rate = c.train_lr;
    tc.init.output_dim = c.toy_output_dim;
    tc.init.name_weight = c.toy_name_weight;
    const TrainResult r = train_toy_encoder(corpus, tc);
    const std::string path = c.encoder.empty() ? artifact(c, names::encoder).string() : c.encoder;
    save_toy_encoder(path, r.state);

    nlohmann::ordered_json j;
    j["examples"] = corpus.size();
    j["steps"] = r.state.steps;
    j["skipped_batches"] = r.skipped_batches;
    j["initial_loss"] = r.loss_history.empty() ? 0.0 : r.loss_history.front();
    j["final_loss"] = r.loss_history.empty() ? 0.0 : r.loss_history.back();
    j["tau"] = r.state.tau();
    write_json(artifact(c, names::train_report), j);
    return kExitOk;
}

// ---- providers --------------------------------------------------------------

inline std::unique_ptr<EmbeddingProvider> make_provider(const RunConfig& c) {
    if (c.provider == "hashed") return std::make_unique<HashedFeatureProvider>(c.hashed_dimension);
    if (c.provider == "toy") {
        const std::string path = c.encoder.empty() ? artifact(c, names::encoder).string() : c.encoder;
        if (!fs::is_regular_file(path)) throw ConfigError("toy provider needs a trained encoder: " + path);
        return std::make_unique<ToyEncoderProvider>(load_toy_encoder(path));
    }
    HttpEmbeddingConfig hc = HttpEmbeddingConfig::from_env();
    if (!c.embed_endpoint.empty()) hc.endpoint = c.embed_endpoint;
    if (c.embed_model != "default" || hc.model.empty()) hc.model = c.embed_model;
    if (hc.endpoint.empty()) throw ConfigError("http provider needs embed.endpoint or EMBED_ENDPOINT");
    return std::make_unique<HttpEmbeddingProvider>(hc);
}

inline std::unique_ptr<LlmClient> make_llm(const RunConfig& c) {
    LlmClientConfig lc = LlmClientConfig::from_env();
    if (!c.llm_endpoint.empty()) lc.endpoint = c.llm_endpoint;
    if (c.llm_model != "default") lc.model = c.llm_model;
    if (lc.endpoint.empty()) throw ConfigError("reranking needs llm.endpoint or LLM_ENDPOINT");
    lc.max_retries = c.llm_max_retries;
    lc.timeout = std::chrono::milliseconds(c.llm_timeout_ms);
    lc.max_inflight = c.llm_max_inflight;
    return std::make_unique<HttpChatClient>(lc);
}

inline nlohmann::ordered_json provider_meta(const RunConfig& c, const EmbeddingProvider& p) {
    nlohmann::ordered_json j;
    j["provider"] = c.provider;
    j["dimension"] = p.dimension();
    j["budget"] = c.budget;
    if (c.provider == "http") j["model"] = c.embed_model;
    if (c.provider == "toy") {
        const std::string path = c.encoder.empty() ? artifact(c, names::encoder).string() : c.encoder;
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        j["encoder_hash"] = hex64(fnv1a64(bytes));
    }
    return j;
}

// Vectors for `keys`, reusing the embed stage's cache when it was produced
// with the same provider settings.
class EmbeddingSource {
public:
    EmbeddingSource(const RunConfig& c, const EntityStore& store, const EmbeddingProvider& provider)
        : config_(c), store_(store), provider_(provider) {
        const fs::path meta = artifact(c, names::embeddings_meta);
        if (!fs::is_regular_file(meta)) return;
        std::ifstream in(meta);
        const auto j = nlohmann::ordered_json::parse(in, nullptr, false);
        if (j.is_discarded() || j != provider_meta(c, provider)) return;
        for (const char* name : {names::embeddings_a, names::embeddings_b}) {
            const fs::path p = artifact(c, name);
            if (!fs::is_regular_file(p)) continue;
            EmbeddingCache cache = read_embedding_cache(p.string());
            for (std::size_t i = 0; i < cache.ids.size(); ++i) cached_[cache.ids[i]] = std::move(cache.vectors[i]);
        }
    }

    std::vector<EmbeddingVector> get(const std::vector<EntityKey>& keys) const {
        std::vector<EmbeddingVector> out(keys.size());
        std::vector<std::size_t> missing;
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            auto it = cached_.find(keys[i].str());
            if (it != cached_.end()) out[i] = it->second;
            else {
                missing.push_back(i);
                texts.push_back(serialize_entity(store_.at(keys[i]), config_.budget));
            }
        }
        if (!texts.empty()) {
            auto vecs = provider_.embed_batch(texts);
            for (std::size_t k = 0; k < missing.size(); ++k) out[missing[k]] = std::move(vecs[k]);
        }
        return out;
    }

    VectorIndex index(const std::vector<EntityKey>& keys) const {
        std::vector<std::string> ids;
        for (const auto& k : keys) ids.push_back(k.str());
        return build_index(std::move(ids), get(keys));
    }

private:
    const RunConfig& config_;
    const EntityStore& store_;
    const EmbeddingProvider& provider_;
    std::unordered_map<std::string, EmbeddingVector> cached_;
};

inline int cmd_embed(const RunConfig& c) {
    const EntityStore store = load_store(c);
    const auto provider = make_provider(c);
    for (auto [side, name] : {std::pair{KgSide::A, names::embeddings_a}, std::pair{KgSide::B, names::embeddings_b}}) {
        EmbeddingCache cache;
        cache.dimension = provider->dimension();
        std::vector<std::string> texts;
        for (const auto& e : store.entities()) {
            if (e.kg != side) continue;
            cache.ids.push_back(e.entity_key().str());
            texts.push_back(serialize_entity(e, c.budget));
        }
        cache.vectors = provider->embed_batch(texts);
        if (!cache.vectors.empty()) cache.dimension = cache.vectors.front().dimension();
        write_embedding_cache(artifact(c, name).string(), cache);
    }
    write_json(artifact(c, names::embeddings_meta), provider_meta(c, *provider));
    return kExitOk;
}

// ---- retrieval / reranking --------------------------------------------------

inline std::vector<EntityKey> side_b_pool(const EntityStore& store) {
    std::vector<EntityKey> out;
    for (const auto& e : store.entities()) {
        if (e.kg == KgSide::B) out.push_back(e.entity_key());
    }
    return out;
}

// Candidate pool per task: every side-B entity for retrieval, the benchmark's
// own side-B entities otherwise.
inline std::vector<EntityKey> task_pool(EvalTask task, const EntityStore& store, const std::vector<AlignmentPair>& rows) {
    return task == EvalTask::retrieval ? side_b_pool(store) : hn_pool_members(rows);
}

inline std::vector<EntityKey> positive_queries(const std::vector<AlignmentPair>& rows) {
    std::vector<EntityKey> out;
    std::set<EntityKey> seen;
    for (const auto& p : rows) {
        if (p.label == PairLabel::positive && seen.insert(p.a).second) out.push_back(p.a);
    }
    return out;
}

inline int cmd_retrieve(const RunConfig& c, EvalTask task) {
    const EntityStore store = load_store(c);
    const auto rows = read_pairs_file(require_artifact(c, names::pairs_eval, "assemble"));
    const auto provider = make_provider(c);
    const EmbeddingSource source(c, store, *provider);
    const VectorIndex index = source.index(task_pool(task, store, rows));
    const auto queries = positive_queries(rows);
    const auto qvecs = source.get(queries);
    std::ofstream out(artifact(c, names::retrieval), std::ios::binary);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto r = index.query_topk(qvecs[i], c.topk, queries[i].str());
        nlohmann::ordered_json j;
        j["query_id"] = r.query_id;
        j["hits"] = nlohmann::ordered_json::array();
        for (const auto& h : r.hits) j["hits"].push_back({{"id", h.id}, {"score", h.score}});
        out << j.dump() << '\n';
    }
    return kExitOk;
}

inline void write_audit(std::ofstream& out, const AuditRecord& r) { out << audit_to_json(r).dump() << '\n'; }

inline int cmd_rerank(const RunConfig& c, EvalTask task) {
    const EntityStore store = load_store(c);
    const auto rows = read_pairs_file(require_artifact(c, names::pairs_eval, "assemble"));
    const auto provider = make_provider(c);
    const auto llm = make_llm(c);
    const EmbeddingSource source(c, store, *provider);
    const VectorIndex index = source.index(task_pool(task, store, rows));
    PipelineConfig pc;
    pc.top_k = c.topk;
    pc.alpha = task == EvalTask::binary ? c.alpha_for_binary() : c.alpha_for_retrieval();
    pc.budget = c.budget;
    pc.rerank.max_reasks = c.max_reasks;
    const AlignmentPipeline pipeline(store, *provider, index, llm.get(), pc);

    std::ofstream out(artifact(c, names::rerank), std::ios::binary);
    std::ofstream audit(artifact(c, names::audit), std::ios::binary);
    std::size_t failed = 0, total = 0;
    for (const auto& q : positive_queries(rows)) {
        ++total;
        try {
            const QueryOutcome o = pipeline.rank(store.at(q));
            nlohmann::ordered_json j;
            j["query_id"] = q.str();
            j["fallback_used"] = o.fallback_used;
            j["ranking"] = nlohmann::ordered_json::array();
            for (const auto& rc : o.ranking) {
                j["ranking"].push_back({{"id", rc.key.str()}, {"retriever_rank", rc.retriever_rank},
                                        {"cosine", rc.cosine}, {"llm_score", rc.llm_score}, {"fused", rc.fused}});
            }
            out << j.dump() << '\n';
            if (o.audit) write_audit(audit, *o.audit);
        } catch (const TransportError& ex) {
            ++failed;
            log("query " + q.str() + " failed: " + ex.what());
        }
    }
    const double ratio = total ? static_cast<double>(failed) / static_cast<double>(total) : 0.0;
    return ratio > c.max_failure_ratio ? kExitRuntime : kExitOk;
}

// ---- evaluation -------------------------------------------------------------

enum class Baseline { string_match, substring, name_only, retriever_only, helea };

inline Baseline parse_baseline(const std::string& s) {
    if (s == "string") return Baseline::string_match;
    if (s == "substring") return Baseline::substring;
    if (s == "name-only") return Baseline::name_only;
    if (s == "retriever-only") return Baseline::retriever_only;
    if (s == "helea") return Baseline::helea;
    throw ConfigError("unknown baseline: " + s);
}

inline EvalReport evaluate(const RunConfig& c, EvalTask task, Baseline baseline, std::ofstream& audit) {
    const EntityStore store = load_store(c);
    const auto eval_rows = read_pairs_file(require_artifact(c, names::pairs_eval, "assemble"));
    std::vector<AlignmentPair> val_rows;
    if (task == EvalTask::binary) val_rows = read_pairs_file(require_artifact(c, names::pairs_val, "assemble"));

    // Pairwise baselines.
    if (baseline == Baseline::string_match || baseline == Baseline::substring || baseline == Baseline::name_only) {
        std::function<double(const Entity&, const Entity&)> score;
        std::unique_ptr<EmbeddingProvider> name_provider;
        if (baseline == Baseline::string_match) {
            score = [](const Entity& a, const Entity& b) { return baseline_string_match(a, b) ? 1.0 : 0.0; };
        } else if (baseline == Baseline::substring) {
            score = [](const Entity& a, const Entity& b) { return baseline_substring_match(a, b) ? 1.0 : 0.0; };
        } else {
            name_provider = make_provider(c);
            const EmbeddingProvider* p = name_provider.get();
            score = [p](const Entity& a, const Entity& b) { return name_only_similarity(a, b, *p); };
        }
        if (task != EvalTask::binary) {
            return evaluate_ranking_by_score(eval_rows, store, task_pool(task, store, eval_rows), score, task);
        }
        if (baseline != Baseline::name_only) {
            return evaluate_binary_predicate(eval_rows, store, [&](const Entity& a, const Entity& b) { return score(a, b) > 0.5; });
        }
        auto collect = [&](const std::vector<AlignmentPair>& rows) {
            PairScores out;
            for (const auto& p : rows) out.scores.push_back(score(store.at(p.a), store.at(p.b)));
            out.n_queries = rows.size();
            return out;
        };
        return evaluate_binary_scores(val_rows, collect(val_rows), eval_rows, collect(eval_rows), c.grid_step);
    }

    // Retriever, optionally followed by the listwise reranker.
    const auto provider = make_provider(c);
    std::unique_ptr<LlmClient> llm;
    if (baseline == Baseline::helea) llm = make_llm(c);
    const EmbeddingSource source(c, store, *provider);
    PipelineConfig pc;
    pc.top_k = c.topk;
    pc.alpha = task == EvalTask::binary ? c.alpha_for_binary() : c.alpha_for_retrieval();
    pc.budget = c.budget;
    pc.rerank.max_reasks = c.max_reasks;
    const AuditSink sink = [&](const AuditRecord& r) { write_audit(audit, r); };

    if (task != EvalTask::binary) {
        const VectorIndex index = source.index(task_pool(task, store, eval_rows));
        const AlignmentPipeline pipeline(store, *provider, index, llm.get(), pc);
        return evaluate_ranking(eval_rows, store, pipeline, task, sink);
    }
    auto scores_for = [&](const std::vector<AlignmentPair>& rows) {
        const VectorIndex index = source.index(hn_pool_members(rows));
        const AlignmentPipeline pipeline(store, *provider, index, llm.get(), pc);
        return score_pairs(rows, store, pipeline, sink);
    };
    const PairScores val = scores_for(val_rows);
    const PairScores test = scores_for(eval_rows);
    EvalReport r = evaluate_binary_scores(val_rows, val, eval_rows, test, c.grid_step);
    r.alpha = llm ? pc.alpha : 1.0;
    r.n_failed += val.n_failed;
    return r;
}

inline int cmd_evaluate(const RunConfig& c, EvalTask task, const std::string& baseline_name) {
    const Baseline baseline = parse_baseline(baseline_name);
    fs::create_directories(c.out);
    std::ofstream audit(artifact(c, names::audit), std::ios::binary);
    EvalReport r = evaluate(c, task, baseline, audit);
    r.method = baseline_name;
    if (baseline != Baseline::helea && baseline != Baseline::retriever_only) r.alpha = 1.0;
    write_json(artifact(c, names::report_json), report_to_json(r));
    write_text(artifact(c, names::report_txt), report_to_table(r));
    std::cout << report_to_table(r);
    if (r.failure_ratio() > c.max_failure_ratio) {
        log(std::to_string(r.n_failed) + " queries failed, above the configured bound");
        return kExitRuntime;
    }
    return kExitOk;
}

// ---- entry point ------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
    CLI::App app{"helea: same-name hard-negative entity alignment toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path, out, task_name = "retrieval", baseline_name = "helea";
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha, grid_step;
    std::optional<std::size_t> topk, neg_cap;
    std::string dump_a, dump_b, links, seed_links, provider, encoder;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--seed", seed, "seed for every randomized step");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--alpha", alpha, "fusion weight on the retriever score")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--topk", topk, "retrieved candidates per query");
        sub->add_option("--task", task_name, "retrieval | binary | hn-retrieval");
        sub->add_option("--baseline", baseline_name, "string | substring | name-only | retriever-only | helea");
        sub->add_option("--grid-step", grid_step, "threshold sweep granularity");
        sub->add_option("--neg-cap", neg_cap, "hard negatives per collision group");
        sub->add_option("--dump-a", dump_a, "KG_A dump (TSV)");
        sub->add_option("--dump-b", dump_b, "KG_B dump (TSV)");
        sub->add_option("--links", links, "identity links (TSV)");
        sub->add_option("--seed-links", seed_links, "evaluation seed links (TSV)");
        sub->add_option("--provider", provider, "hashed | toy | http");
        sub->add_option("--encoder", encoder, "toy encoder state");
        sub->add_option("--set", sets, "override a config key: section.key=value");
    };

    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const char* name : {"ingest", "mine", "assemble", "train", "embed", "retrieve", "rerank", "evaluate", "pipeline"}) {
        auto* sub = app.add_subcommand(name);
        add_common(sub);
        subs.emplace_back(name, sub);
    }
    subs.back().second->description("ingest, mine and assemble in one go");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    auto error_report = [](const char* kind, const std::string& msg) {
        nlohmann::ordered_json j;
        j["status"] = "error";
        j["kind"] = kind;
        j["message"] = msg;
        std::cerr << j.dump() << '\n';
    };

    RunConfig c;
    try {
        if (!config_path.empty()) c.apply(load_config_file(config_path));
        ConfigMap overrides;
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + kv);
            overrides[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
        }
        c.apply(overrides);
        if (seed) c.seed = *seed;
        if (!out.empty()) c.out = out;
        if (alpha) c.alpha_override = *alpha;
        if (topk) c.topk = *topk;
        if (grid_step) c.grid_step = *grid_step;
        if (neg_cap) c.neg_cap = *neg_cap;
        if (!dump_a.empty()) c.dump_a = dump_a;
        if (!dump_b.empty()) c.dump_b = dump_b;
        if (!links.empty()) c.links = links;
        if (!seed_links.empty()) c.seed_links = seed_links;
        if (!provider.empty()) c.provider = provider;
        if (!encoder.empty()) c.encoder = encoder;
        c.validate();
        const EvalTask task = parse_eval_task(task_name);
        parse_baseline(baseline_name);

        std::string which;
        for (const auto& [name, sub] : subs) {
            if (sub->parsed()) which = name;
        }
        if (which == "ingest") return cmd_ingest(c);
        if (which == "mine") return cmd_mine(c);
        if (which == "assemble") return cmd_assemble(c);
        if (which == "pipeline") {
            if (int rc = cmd_ingest(c)) return rc;
            if (int rc = cmd_mine(c)) return rc;
            return cmd_assemble(c);
        }
        if (which == "train") return cmd_train(c);
        if (which == "embed") return cmd_embed(c);
        if (which == "retrieve") return cmd_retrieve(c, task);
        if (which == "rerank") return cmd_rerank(c, task);
        return cmd_evaluate(c, task, baseline_name);
    } catch (const ConfigError& e) {
        error_report("ConfigError", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        error_report("Error", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        error_report("Exception", e.what());
        return kExitRuntime;
    }
}

} // namespace helea::cli
