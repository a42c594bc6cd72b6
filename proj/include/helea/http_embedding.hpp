#pragma once

// Remote embedding endpoint:
//   POST {"input": [strings], "model": string} -> {"data": [{"embedding": [...]}]}
// Vectors are re-normalized locally whatever the server returns.

#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "helea/embedding.hpp"
#include "helea/error.hpp"
#include "helea/http_client.hpp"

namespace helea {

struct HttpEmbeddingConfig {
    std::string endpoint;
    std::string api_key;
    std::string model;
    std::size_t dimension = 0;  // 0: take whatever the first response returns
    std::size_t batch_size = 64;
    std::size_t max_inflight = 4;
    HttpRetryPolicy retry;

    // EMBED_ENDPOINT, EMBED_API_KEY, EMBED_MODEL.
    static HttpEmbeddingConfig from_env() {
        HttpEmbeddingConfig c;
        c.endpoint = env_or("EMBED_ENDPOINT");
        c.api_key = env_or("EMBED_API_KEY");
        c.model = env_or("EMBED_MODEL", "default");
        return c;
    }
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config)
        : config_(std::move(config)),
          endpoint_(parse_endpoint(config_.endpoint)),
          limiter_(std::make_unique<InflightLimiter>(config_.max_inflight)),
          dimension_(config_.dimension) {}

    std::size_t dimension() const override { return dimension_; }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        const std::size_t step = config_.batch_size == 0 ? texts.size() : config_.batch_size;
        for (std::size_t begin = 0; begin < texts.size(); begin += step) {
            const std::size_t end = std::min(texts.size(), begin + step);
            nlohmann::json body;
            body["input"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                                     texts.begin() + static_cast<std::ptrdiff_t>(end));
            body["model"] = config_.model;
            nlohmann::json resp;
            try {
                resp = post_json(endpoint_, body, config_.api_key, config_.retry, *limiter_);
            } catch (const TransportError& ex) {
                throw ProviderError(ex.what());
            }
            const auto data = resp.find("data");
            if (data == resp.end() || !data->is_array() || data->size() != end - begin) {
                throw ProviderError("embedding response must contain one data entry per input");
            }
            for (const auto& item : *data) {
                std::vector<double> raw;
                try {
                    raw = item.at("embedding").get<std::vector<double>>();
                } catch (const nlohmann::json::exception& ex) {
                    throw ProviderError(std::string("bad embedding entry: ") + ex.what());
                }
                std::size_t expected = 0;
                dimension_.compare_exchange_strong(expected, raw.size());
                if (raw.size() != dimension_.load()) throw ProviderError("embedding dimension changed between responses");
                try {
                    out.push_back(normalize(std::span<const double>(raw)));
                } catch (const InvalidArgument& ex) {
                    throw ProviderError(ex.what());
                }
            }
        }
        return out;
    }

private:
    HttpEmbeddingConfig config_;
    HttpEndpoint endpoint_;
    std::unique_ptr<InflightLimiter> limiter_;
    mutable std::atomic<std::size_t> dimension_;
};

} // namespace helea
