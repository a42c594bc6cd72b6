#pragma once

// Run configuration: flat "section.key = value" text files. A "[section]"
// line prefixes the keys that follow it. '#' starts a comment.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <type_traits>
#include <string>
#include <vector>

#include "helea/error.hpp"
#include "helea/fusion.hpp"
#include "helea/hn_pipeline.hpp"
#include "helea/kg_model.hpp"

namespace helea {

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& in) {
    ConfigMap out;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

inline ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

struct RunConfig {
    // paths
    std::string dump_a, dump_b, links, seed_links, out = "out", encoder;
    std::uint64_t seed = 42;
    // mining
    std::size_t neg_cap = kDefaultNegativeCap;
    std::size_t eval_negatives = 15000;
    double val_fraction = 0.1;
    std::size_t val_max = 10000;
    // retrieval / fusion
    std::size_t topk = 10;
    double alpha_retrieval = FusionConfig::kRetrievalAlpha;
    double alpha_binary = FusionConfig::kHardNegativeAlpha;
    std::optional<double> alpha_override;
    std::size_t budget = kDefaultSerializationBudget;
    double grid_step = kDefaultGridStep;
    // providers
    std::string provider = "hashed";  // hashed | toy | http
    std::size_t hashed_dimension = 256;
    std::string embed_endpoint, embed_model = "default";
    std::string llm_endpoint, llm_model = "default";
    int llm_max_retries = 3;
    long long llm_timeout_ms = 60000;
    std::size_t llm_max_inflight = 4;
    int max_reasks = 2;
    double max_failure_ratio = 0.05;
    // training
    std::size_t train_steps = 1000;
    std::size_t train_batch = 64;
    double train_lr = 0.1;
    std::size_t toy_output_dim = 128;
    double toy_name_weight = 1.0;

    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> keys{
            "paths.dump_a", "paths.dump_b", "paths.links", "paths.seed_links", "paths.out", "paths.encoder",
            "run.seed", "mine.neg_cap", "mine.eval_negatives", "mine.val_fraction", "mine.val_max",
            "retrieval.topk", "fusion.alpha_retrieval", "fusion.alpha_binary", "serialize.budget",
            "eval.grid_step", "eval.max_failure_ratio", "embed.provider", "embed.dimension", "embed.endpoint",
            "embed.model", "llm.endpoint", "llm.model", "llm.max_retries", "llm.timeout_ms", "llm.max_inflight",
            "llm.max_reasks", "train.steps", "train.batch_size", "train.learning_rate", "train.output_dim",
            "train.name_weight"};
        return keys;
    }

    void apply(const ConfigMap& m) {
        for (const auto& [k, v] : m) {
            if (!known_keys().count(k)) throw ConfigError("unknown config key: " + k);
        }
        auto str = [&](const char* k, std::string& dst) {
            if (auto it = m.find(k); it != m.end()) dst = it->second;
        };
        auto num = [&](const char* k, auto& dst) {
            auto it = m.find(k);
            if (it == m.end()) return;
            try {
                using T = std::decay_t<decltype(dst)>;
                if constexpr (std::is_floating_point_v<T>) dst = std::stod(it->second);
                else if constexpr (std::is_signed_v<T>) dst = static_cast<T>(std::stoll(it->second));
                else dst = static_cast<T>(std::stoull(it->second));
            } catch (const std::exception&) {
                throw ConfigError("config key " + std::string(k) + ": not a number: " + it->second);
            }
        };
        str("paths.dump_a", dump_a);
        str("paths.dump_b", dump_b);
        str("paths.links", links);
        str("paths.seed_links", seed_links);
        str("paths.out", out);
        str("paths.encoder", encoder);
        num("run.seed", seed);
        num("mine.neg_cap", neg_cap);
        num("mine.eval_negatives", eval_negatives);
        num("mine.val_fraction", val_fraction);
        num("mine.val_max", val_max);
        num("retrieval.topk", topk);
        num("fusion.alpha_retrieval", alpha_retrieval);
        num("fusion.alpha_binary", alpha_binary);
        num("serialize.budget", budget);
        num("eval.grid_step", grid_step);
        num("eval.max_failure_ratio", max_failure_ratio);
        str("embed.provider", provider);
        num("embed.dimension", hashed_dimension);
        str("embed.endpoint", embed_endpoint);
        str("embed.model", embed_model);
        str("llm.endpoint", llm_endpoint);
        str("llm.model", llm_model);
        num("llm.max_retries", llm_max_retries);
        num("llm.timeout_ms", llm_timeout_ms);
        num("llm.max_inflight", llm_max_inflight);
        num("llm.max_reasks", max_reasks);
        num("train.steps", train_steps);
        num("train.batch_size", train_batch);
        num("train.learning_rate", train_lr);
        num("train.output_dim", toy_output_dim);
        num("train.name_weight", toy_name_weight);
    }

    double alpha_for_binary() const { return alpha_override.value_or(alpha_binary); }
    double alpha_for_retrieval() const { return alpha_override.value_or(alpha_retrieval); }

    void validate() const {
        if (topk == 0) throw ConfigError("topk must be at least 1");
        for (double a : {alpha_retrieval, alpha_binary, alpha_override.value_or(0.5)}) {
            if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
        }
        if (!(grid_step > 0.0)) throw ConfigError("grid step must be positive");
        if (provider != "hashed" && provider != "toy" && provider != "http") {
            throw ConfigError("unknown provider: " + provider);
        }
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must be in [0, 1)");
    }

    static void require_file(const std::string& path, const char* what) {
        if (path.empty()) throw ConfigError(std::string("missing required path: ") + what);
        if (!std::filesystem::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
    }
};

} // namespace helea
