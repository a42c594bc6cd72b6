#pragma once

// JSON-over-HTTP plumbing shared by the embedding and chat-completion
// clients: endpoint parsing, a bound on in-flight requests, and retries with
// exponential backoff on transport failures and 5xx / 429 responses.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "helea/error.hpp"

namespace helea {

struct HttpEndpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // request path, starts with '/'
};

inline HttpEndpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http") throw ConfigError("only http:// endpoints are supported: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    if (path_start == std::string::npos) {
        ep.base = url;
        ep.path = "/";
    } else {
        ep.base = url.substr(0, path_start);
        ep.path = url.substr(path_start);
    }
    if (ep.base.size() <= scheme_end + 3) throw ConfigError("endpoint URL has no host: " + url);
    return ep;
}

inline std::string env_or(const char* name, const std::string& fallback = {}) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

// Counting gate limiting concurrent requests.
class InflightLimiter {
public:
    explicit InflightLimiter(std::size_t max_inflight) : available_(max_inflight == 0 ? 1 : max_inflight) {}

    class Slot {
    public:
        explicit Slot(InflightLimiter& l) : limiter_(l) { limiter_.acquire(); }
        ~Slot() { limiter_.release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        InflightLimiter& limiter_;
    };

private:
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++available_;
        }
        cv_.notify_one();
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t available_;
};

struct HttpRetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{100};
    std::chrono::milliseconds timeout{30000};
};

// POSTs JSON and returns the parsed body. Retries transport errors, 429 and
// 5xx; other statuses fail immediately.
inline nlohmann::json post_json(const HttpEndpoint& ep, const nlohmann::json& body, const std::string& api_key,
                                const HttpRetryPolicy& policy, InflightLimiter& limiter) {
    const std::string payload = body.dump();
    std::string last_error;
    auto backoff = policy.initial_backoff;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Result res;
        {
            InflightLimiter::Slot slot(limiter);
            httplib::Client cli(ep.base);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
            cli.set_connection_timeout(secs.count(), usecs.count());
            cli.set_read_timeout(secs.count(), usecs.count());
            cli.set_write_timeout(secs.count(), usecs.count());
            httplib::Headers headers;
            if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
            res = cli.Post(ep.path, headers, payload, "application/json");
        }
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + ep.base + ep.path);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& ex) {
            throw TransportError(std::string("unparseable response body: ") + ex.what());
        }
    }
    throw TransportError(last_error + " after " + std::to_string(policy.max_retries) + " retries (" + ep.base +
                         ep.path + ")");
}

} // namespace helea
