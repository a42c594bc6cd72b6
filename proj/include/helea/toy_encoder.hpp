#pragma once

// A small trainable entity encoder: hashed bag-of-token features -> one
// linear layer -> L2 normalization, trained with bidirectional InfoNCE and a
// learnable log-scale temperature. Gradients are analytic through the
// normalization and the linear map.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "helea/embedding.hpp"
#include "helea/error.hpp"
#include "helea/hashing.hpp"
#include "helea/infonce.hpp"

namespace helea {

struct ToyEncoderState {
    std::size_t input_dim = 4096;
    std::size_t output_dim = 128;
    std::uint64_t feature_seed = HashedFeatureProvider::kDefaultSeed;
    std::vector<double> weights;  // input_dim x output_dim, row-major
    double log_scale = std::log(20.0);
    // Name-segment tokens hash into their own namespace, scaled by this
    // factor before normalization.
    double name_weight = 1.0;
    std::uint64_t steps = 0;

    double tau() const { return std::exp(log_scale); }
    double& w(std::size_t in, std::size_t out) { return weights[in * output_dim + out]; }
    double w(std::size_t in, std::size_t out) const { return weights[in * output_dim + out]; }

    friend bool operator==(const ToyEncoderState&, const ToyEncoderState&) = default;
};

struct ToyEncoderInit {
    std::size_t input_dim = 4096;
    std::size_t output_dim = 128;
    std::uint64_t feature_seed = HashedFeatureProvider::kDefaultSeed;
    std::uint64_t weight_seed = 7;
    double log_scale = std::log(20.0);
    double name_weight = 1.0;
};

// Gaussian init with variance 1/output_dim so ||z|| ~ ||x|| at the start.
inline ToyEncoderState init_toy_encoder(const ToyEncoderInit& init = {}) {
    if (init.input_dim == 0 || init.output_dim == 0) throw InvalidArgument("encoder dimensions must be positive");
    ToyEncoderState s;
    s.input_dim = init.input_dim;
    s.output_dim = init.output_dim;
    s.feature_seed = init.feature_seed;
    s.log_scale = init.log_scale;
    if (!(init.name_weight > 0.0)) throw InvalidArgument("name weight must be positive");
    s.name_weight = init.name_weight;
    s.weights.resize(s.input_dim * s.output_dim);
    Rng rng(init.weight_seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.output_dim));
    for (auto& w : s.weights) w = standard_normal(rng) * scale;
    return s;
}

// Unit-normalized hashed token counts. The text before the first " | " is the
// name segment. Texts without tokens are rejected because they would have a
// zero norm.
inline SparseFeatures toy_features(const ToyEncoderState& s, std::string_view text) {
    const auto sep = text.find(" | ");
    const std::string_view name = text.substr(0, sep);
    SparseFeatures f = sep == std::string_view::npos ? SparseFeatures{}
                                                     : hashed_features(text.substr(sep + 3), s.input_dim, s.feature_seed);
    for (const auto& [k, v] : hashed_features(name, s.input_dim, mix64(s.feature_seed))) f[k] += v * s.name_weight;
    if (f.empty()) throw InvalidArgument("zero-feature input: \"" + std::string(text) + "\"");
    double n = 0.0;
    for (const auto& [k, v] : f) n += v * v;
    n = std::sqrt(n);
    for (auto& [k, v] : f) v /= n;
    return f;
}

struct ToyForward {
    SparseFeatures x;
    std::vector<double> z;  // W^T x
    std::vector<double> e;  // z / ||z||
    double z_norm = 0.0;
};

inline ToyForward toy_forward(const ToyEncoderState& s, std::string_view text) {
    ToyForward f;
    f.x = toy_features(s, text);
    f.z.assign(s.output_dim, 0.0);
    for (const auto& [k, v] : f.x) {
        const double* row = &s.weights[k * s.output_dim];
        for (std::size_t o = 0; o < s.output_dim; ++o) f.z[o] += v * row[o];
    }
    double n = 0.0;
    for (double v : f.z) n += v * v;
    f.z_norm = std::sqrt(n);
    if (!(f.z_norm > 0.0)) throw InvalidArgument("encoder output has zero norm");
    f.e.resize(s.output_dim);
    for (std::size_t o = 0; o < s.output_dim; ++o) f.e[o] = f.z[o] / f.z_norm;
    return f;
}

class ToyEncoderProvider : public EmbeddingProvider {
public:
    explicit ToyEncoderProvider(ToyEncoderState state) : state_(std::move(state)) {}

    std::size_t dimension() const override { return state_.output_dim; }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            try {
                out.push_back(normalize(std::span<const double>(toy_forward(state_, t).z)));
            } catch (const InvalidArgument& ex) {
                throw ProviderError(ex.what());
            }
        }
        return out;
    }

    const ToyEncoderState& state() const { return state_; }

private:
    ToyEncoderState state_;
};

// One contrastive batch: row i pairs side_a[i] with side_b[i]; label 1 rows
// form the positive set P.
struct Batch {
    std::vector<std::string> side_a;
    std::vector<std::string> side_b;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    void validate() const {
        if (side_a.size() != side_b.size() || side_a.size() != labels.size()) {
            throw LengthMismatch("batch sides and labels must have equal length");
        }
    }
};

struct ToyGradient {
    double loss = 0.0;
    std::map<std::uint32_t, std::vector<double>> d_weights;  // touched rows only
    double d_log_scale = 0.0;
};

// Similarity matrix of a batch under the current encoder.
inline DenseMatrix toy_similarity(const std::vector<ToyForward>& a, const std::vector<ToyForward>& b) {
    DenseMatrix s(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            double d = 0.0;
            for (std::size_t o = 0; o < a[i].e.size(); ++o) d += a[i].e[o] * b[j].e[o];
            s(i, j) = d;
        }
    }
    return s;
}

inline double toy_batch_loss(const Batch& batch, const ToyEncoderState& s) {
    batch.validate();
    std::vector<ToyForward> fa, fb;
    for (const auto& t : batch.side_a) fa.push_back(toy_forward(s, t));
    for (const auto& t : batch.side_b) fb.push_back(toy_forward(s, t));
    return infonce_loss(toy_similarity(fa, fb), positive_indices(batch.labels), s.tau());
}

// Analytic gradient of the composed loss w.r.t. W and log_scale.
inline ToyGradient infonce_grad(const Batch& batch, const ToyEncoderState& s) {
    batch.validate();
    const auto positives = positive_indices(batch.labels);
    if (positives.empty()) throw EmptyPositives("batch has no positive pairs");

    std::vector<ToyForward> fa, fb;
    for (const auto& t : batch.side_a) fa.push_back(toy_forward(s, t));
    for (const auto& t : batch.side_b) fb.push_back(toy_forward(s, t));
    const DenseMatrix sim = toy_similarity(fa, fb);
    const double tau = s.tau();
    const InfoNceResult r = infonce_loss_and_grad(sim, positives, tau);

    ToyGradient g;
    g.loss = r.loss;
    g.d_log_scale = r.d_tau * tau;

    const std::size_t n = batch.size();
    const std::size_t d = s.output_dim;
    auto backprop = [&](const ToyForward& f, const std::vector<double>& grad_e) {
        double eg = 0.0;
        for (std::size_t o = 0; o < d; ++o) eg += f.e[o] * grad_e[o];
        std::vector<double> dz(d);
        for (std::size_t o = 0; o < d; ++o) dz[o] = (grad_e[o] - f.e[o] * eg) / f.z_norm;
        for (const auto& [k, v] : f.x) {
            auto& row = g.d_weights[k];
            if (row.empty()) row.assign(d, 0.0);
            for (std::size_t o = 0; o < d; ++o) row[o] += v * dz[o];
        }
    };

    std::vector<double> grad_e(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(grad_e.begin(), grad_e.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double w = r.d_similarity(i, j);
            if (w == 0.0) continue;
            for (std::size_t o = 0; o < d; ++o) grad_e[o] += w * fb[j].e[o];
        }
        backprop(fa[i], grad_e);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(grad_e.begin(), grad_e.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = r.d_similarity(i, j);
            if (w == 0.0) continue;
            for (std::size_t o = 0; o < d; ++o) grad_e[o] += w * fa[i].e[o];
        }
        backprop(fb[j], grad_e);
    }
    return g;
}

// A training example: serialized sides, the label, and a grouping key used to
// keep same-name pairs in the same batch.
struct TrainingExample {
    std::string text_a;
    std::string text_b;
    int label = 1;
    std::string group;
};

struct TrainConfig {
    std::uint64_t seed = 7;
    std::size_t batch_size = 64;
    double learning_rate = 0.1;
    std::optional<double> log_scale_learning_rate;  // defaults to learning_rate
    std::size_t steps = 1000;
    // Shuffle whole name groups so same-name pairs share a batch.
    bool group_batches = true;
    ToyEncoderInit init;
};

struct TrainResult {
    ToyEncoderState state;
    std::vector<double> loss_history;  // one entry per optimizer step
    std::size_t skipped_batches = 0;   // batches without positives
};

namespace detail {

inline std::vector<std::size_t> batch_order(const std::vector<TrainingExample>& corpus, bool group_batches, Rng& rng) {
    std::vector<std::size_t> order;
    order.reserve(corpus.size());
    if (!group_batches) {
        for (std::size_t i = 0; i < corpus.size(); ++i) order.push_back(i);
        seeded_shuffle(order, rng);
        return order;
    }
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < corpus.size(); ++i) groups[corpus[i].group].push_back(i);
    std::vector<const std::vector<std::size_t>*> units;
    for (auto& [k, v] : groups) units.push_back(&v);
    seeded_shuffle(units, rng);
    for (const auto* u : units) order.insert(order.end(), u->begin(), u->end());
    return order;
}

} // namespace detail

// Plain SGD over shuffled batches, reshuffling each epoch.
inline TrainResult train_toy_encoder(const std::vector<TrainingExample>& corpus, const TrainConfig& config,
                                     const std::function<void(std::size_t, double)>& on_step = {}) {
    TrainResult result;
    result.state = init_toy_encoder(config.init);
    if (config.steps == 0) return result;
    if (corpus.empty()) throw InvalidArgument("training corpus is empty");
    if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");

    Rng rng(config.seed);
    std::vector<std::size_t> order = detail::batch_order(corpus, config.group_batches, rng);
    std::size_t cursor = 0;
    std::size_t step = 0;
    std::size_t empty_streak = 0;
    while (step < config.steps) {
        if (cursor >= order.size()) {
            order = detail::batch_order(corpus, config.group_batches, rng);
            cursor = 0;
        }
        Batch batch;
        const std::size_t end = std::min(order.size(), cursor + config.batch_size);
        for (std::size_t k = cursor; k < end; ++k) {
            const auto& ex = corpus[order[k]];
            batch.side_a.push_back(ex.text_a);
            batch.side_b.push_back(ex.text_b);
            batch.labels.push_back(ex.label);
        }
        cursor = end;
        if (positive_indices(batch.labels).empty()) {
            ++result.skipped_batches;
            if (++empty_streak > order.size()) throw InvalidArgument("training corpus has no positive pairs");
            continue;
        }
        empty_streak = 0;

        const ToyGradient g = infonce_grad(batch, result.state);
        if (!std::isfinite(g.loss)) {
            throw DivergenceDetected("non-finite loss at step " + std::to_string(step));
        }
        auto& st = result.state;
        for (const auto& [row, grad] : g.d_weights) {
            double* w = &st.weights[row * st.output_dim];
            for (std::size_t o = 0; o < st.output_dim; ++o) w[o] -= config.learning_rate * grad[o];
        }
        st.log_scale -= config.log_scale_learning_rate.value_or(config.learning_rate) * g.d_log_scale;
        if (!(std::isfinite(st.log_scale) && st.tau() > 0.0 && std::isfinite(st.tau()))) {
            throw DivergenceDetected("temperature left the representable range at step " + std::to_string(step));
        }
        ++st.steps;
        result.loss_history.push_back(g.loss);
        if (on_step) on_step(step, g.loss);
        ++step;
    }
    return result;
}

inline constexpr std::uint32_t kToyStateMagic = 0x594F5448;  // "HTOY" on disk

inline void save_toy_encoder(const std::string& path, const ToyEncoderState& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write encoder state: " + path);
    detail::write_le<std::uint32_t>(out, kToyStateMagic);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.input_dim));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.output_dim));
    detail::write_le<std::uint64_t>(out, s.feature_seed);
    detail::write_le<std::uint64_t>(out, s.steps);
    auto put = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        detail::write_le<std::uint64_t>(out, bits);
    };
    put(s.log_scale);
    put(s.name_weight);
    for (double w : s.weights) put(w);
}

inline ToyEncoderState load_toy_encoder(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open encoder state: " + path);
    if (detail::read_le<std::uint32_t>(in) != kToyStateMagic) throw IoError("bad encoder state magic: " + path);
    ToyEncoderState s;
    s.input_dim = detail::read_le<std::uint32_t>(in);
    s.output_dim = detail::read_le<std::uint32_t>(in);
    s.feature_seed = detail::read_le<std::uint64_t>(in);
    s.steps = detail::read_le<std::uint64_t>(in);
    auto get = [&]() {
        const auto bits = detail::read_le<std::uint64_t>(in);
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    };
    s.log_scale = get();
    s.name_weight = get();
    s.weights.resize(s.input_dim * s.output_dim);
    for (auto& w : s.weights) w = get();
    return s;
}

} // namespace helea
