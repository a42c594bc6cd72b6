#pragma once

// Listwise LLM reranking: one prompt per query carrying every candidate,
// a strict "RANKING: i:score, ..." answer grammar, and a fallback to
// retriever order when the answer cannot be parsed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "helea/error.hpp"
#include "helea/hashing.hpp"
#include "helea/http_client.hpp"
#include "helea/kg_model.hpp"

namespace helea {

struct RerankCandidate {
    const Entity* entity = nullptr;
    std::size_t retriever_rank = 0;  // 1-based
    double retriever_score = 0.0;
};

struct RerankRequest {
    std::string query_id;
    const Entity* query = nullptr;
    std::vector<RerankCandidate> candidates;  // retriever rank ascending
    std::size_t budget = kDefaultSerializationBudget;

    void validate() const {
        if (!query) throw InvalidArgument("rerank request has no query entity");
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!candidates[i].entity) throw InvalidArgument("rerank candidate without entity");
            if (candidates[i].retriever_rank != i + 1) throw InvalidArgument("candidate ranks must be 1..n in order");
        }
    }
};

struct RerankResult {
    std::vector<double> scores;      // llm score per candidate index (0-based)
    std::vector<std::size_t> order;  // candidate indices, best first
    bool fallback_used = false;
    std::string raw_response;
    std::size_t calls = 0;           // chat-completion calls issued for this query
};

inline std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string build_prompt(const RerankRequest& req) {
    req.validate();
    std::ostringstream p;
    p << "[System]\n"
         "Base your judgment on the entity names and knowledge graph triples.\n"
         "Entities with identical names can refer to completely different real-world objects\n"
         "\xE2\x80\x94 use the relational structure to disambiguate.\n"
         "\n"
         "[Query]\n"
      << req.query->canonical_name << '\n'
      << serialize_context(*req.query, req.budget) << '\n';
    for (std::size_t i = 0; i < req.candidates.size(); ++i) {
        const auto& c = req.candidates[i];
        p << "\n[Candidate " << (i + 1) << "]  (Retriever Rank: " << c.retriever_rank
          << ", Score: " << format_score(c.retriever_score) << ")\n"
          << c.entity->canonical_name << '\n'
          << serialize_context(*c.entity, req.budget) << '\n';
    }
    p << "\n"
         "Rank the candidates from best to worst match for Entity A.\n"
         "You MUST begin your response immediately with 'RANKING:'.\n"
         "Respond strictly in the following format:\n"
         "\n"
         "RANKING: i:<score>, j:<score>, k:<score>, ...\n"
         "(scores are confidence values in [0, 1]; e.g., RANKING: 3:0.92, 1:0.75, 2:0.41, ...)\n"
         "Reasoning: <2-3 sentences citing the discriminating triples>\n";
    return p.str();
}

namespace detail {

inline std::optional<long> parse_index(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty() || t.size() > 9) return std::nullopt;
    long v = 0;
    for (char c : t) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

inline std::optional<double> parse_real(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return std::nullopt;
    if (std::isnan(v)) return std::nullopt;
    return v;
}

} // namespace detail

// Scores per candidate (0-based), each in [0, 1], or nullopt when the
// response has no "RANKING:" line or no parsable "index:score" item.
// Out-of-range and repeated indices are ignored; unmentioned candidates get 0.
inline std::optional<std::vector<double>> parse_ranking(std::string_view raw, std::size_t n_candidates) {
    if (n_candidates == 0) throw InvalidArgument("parse_ranking needs at least one candidate");
    std::optional<std::string_view> body;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t eol = raw.find('\n', pos);
        if (eol == std::string_view::npos) eol = raw.size();
        std::string_view line = raw.substr(pos, eol - pos);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.rfind("RANKING:", 0) == 0) {
            line.remove_prefix(8);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            body = line;
            break;
        }
        pos = eol + 1;
    }
    if (!body) return std::nullopt;

    std::vector<double> scores(n_candidates, 0.0);
    std::vector<bool> seen(n_candidates, false);
    std::size_t valid = 0;
    std::size_t start = 0;
    while (start <= body->size()) {
        std::size_t comma = body->find(',', start);
        if (comma == std::string_view::npos) comma = body->size();
        const std::string_view item = body->substr(start, comma - start);
        start = comma + 1;
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) continue;
        const auto index = detail::parse_index(item.substr(0, colon));
        const auto score = detail::parse_real(item.substr(colon + 1));
        if (!index || !score) continue;
        if (*index < 1 || static_cast<std::size_t>(*index) > n_candidates) continue;
        const std::size_t k = static_cast<std::size_t>(*index) - 1;
        if (seen[k]) continue;
        seen[k] = true;
        scores[k] = std::clamp(*score, 0.0, 1.0);
        ++valid;
    }
    if (valid == 0) return std::nullopt;
    return scores;
}

// (n - r + 1) / n for the candidate at retriever rank r: strictly decreasing,
// so fusion with any alpha keeps the retriever order.
inline std::vector<double> fallback_scores(std::size_t n) {
    std::vector<double> s(n);
    for (std::size_t r = 1; r <= n; ++r) s[r - 1] = static_cast<double>(n - r + 1) / static_cast<double>(n);
    return s;
}

// Chat-completion backend. `complete` returns the first choice's content.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

struct LlmClientConfig {
    std::string endpoint;
    std::string api_key;
    std::string model;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    std::size_t max_inflight = 4;
    double temperature = 0.0;

    void validate() const {
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
        if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
    }

    // LLM_ENDPOINT, LLM_API_KEY, LLM_MODEL.
    static LlmClientConfig from_env() {
        LlmClientConfig c;
        c.endpoint = env_or("LLM_ENDPOINT");
        c.api_key = env_or("LLM_API_KEY");
        c.model = env_or("LLM_MODEL", "default");
        return c;
    }
};

// POST {"model", "messages": [{"role", "content"}], "temperature"}.
class HttpChatClient : public LlmClient {
public:
    explicit HttpChatClient(LlmClientConfig config)
        : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)), limiter_(config_.max_inflight) {
        config_.validate();
        retry_.max_retries = config_.max_retries;
        retry_.timeout = config_.timeout;
    }

    std::string complete(const std::string& prompt) override {
        nlohmann::json body;
        body["model"] = config_.model;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
        body["temperature"] = config_.temperature;
        const nlohmann::json resp = post_json(endpoint_, body, config_.api_key, retry_, limiter_);
        try {
            return resp.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw TransportError(std::string("chat response missing choices[0].message.content: ") + ex.what());
        }
    }

private:
    LlmClientConfig config_;
    HttpEndpoint endpoint_;
    InflightLimiter limiter_;
    HttpRetryPolicy retry_;
};

struct RerankPolicy {
    int max_reasks = 2;  // extra asks after a malformed answer
};

inline std::vector<std::size_t> order_by_scores(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
    return order;
}

// One listwise call per query (plus re-asks on malformed output). Transport
// failures propagate as TransportError after the client's own retries.
inline RerankResult rerank(const RerankRequest& req, LlmClient& client, const RerankPolicy& policy = {}) {
    RerankResult result;
    const std::size_t n = req.candidates.size();
    if (n == 0) return result;
    const std::string prompt = build_prompt(req);
    for (int attempt = 0; attempt <= policy.max_reasks; ++attempt) {
        result.raw_response = client.complete(prompt);
        ++result.calls;
        if (auto parsed = parse_ranking(result.raw_response, n)) {
            result.scores = std::move(*parsed);
            result.order = order_by_scores(result.scores);
            return result;
        }
    }
    result.fallback_used = true;
    result.scores = fallback_scores(n);
    result.order = order_by_scores(result.scores);
    return result;
}

struct AuditRecord {
    std::string query_id;
    std::string prompt_hash;
    std::string raw_response;
    bool fallback_used = false;
    long long latency_ms = 0;
};

inline nlohmann::ordered_json audit_to_json(const AuditRecord& r) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    j["prompt_hash"] = r.prompt_hash;
    j["raw_response"] = r.raw_response;
    j["fallback_used"] = r.fallback_used;
    j["latency_ms"] = r.latency_ms;
    return j;
}

inline std::string prompt_hash(const std::string& prompt) { return hex64(fnv1a64(prompt)); }

} // namespace helea
