#pragma once

// Score fusion, threshold selection and the standard metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "helea/error.hpp"

namespace helea {

struct FusionConfig {
    static constexpr double kRetrievalAlpha = 0.75;
    static constexpr double kHardNegativeAlpha = 0.25;

    double alpha = kRetrievalAlpha;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("alpha must be in [0, 1]");
    }
};

// alpha * sim + (1 - alpha) * llm. Endpoints return the selected input
// exactly.
inline double fuse(double sim, double llm, double alpha) {
    constexpr double eps = 1e-9;
    if (!(sim >= -1.0 - eps && sim <= 1.0 + eps)) throw RangeError("similarity outside [-1, 1]");
    if (!(llm >= 0.0 - eps && llm <= 1.0 + eps)) throw RangeError("llm score outside [0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("alpha outside [0, 1]");
    if (alpha == 1.0) return sim;
    if (alpha == 0.0) return llm;
    return alpha * sim + (1.0 - alpha) * llm;
}

struct BinaryMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline BinaryMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    BinaryMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const std::size_t total = tp + fp + tn + fn;
    m.accuracy = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

inline BinaryMetrics binary_metrics(const std::vector<bool>& preds, const std::vector<bool>& labels) {
    if (preds.size() != labels.size()) throw LengthMismatch("predictions and labels differ in length");
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] && labels[i]) ++tp;
        else if (preds[i]) ++fp;
        else if (labels[i]) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, tn, fn);
}

struct ScoredLabel {
    double score = 0.0;
    bool label = false;
};

inline std::vector<bool> apply_threshold(const std::vector<ScoredLabel>& data, double threshold) {
    std::vector<bool> preds(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) preds[i] = data[i].score >= threshold;
    return preds;
}

inline std::vector<bool> labels_of(const std::vector<ScoredLabel>& data) {
    std::vector<bool> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
    return labels;
}

struct ThresholdResult {
    double threshold = 0.0;
    double f1_at_threshold = 0.0;
    double sweep_grid = 0.0;
};

inline constexpr double kDefaultGridStep = 0.005;

// Maximizes F1 of "score >= t" over t in the grid min, min+step, ..., max,
// plus the midpoints between adjacent distinct scores so that no achievable
// partition is skipped. Ties resolve to the lowest threshold.
inline ThresholdResult sweep_threshold(const std::vector<ScoredLabel>& val, double grid_step = kDefaultGridStep) {
    if (!(grid_step > 0.0)) throw InvalidArgument("grid step must be positive");
    bool any_pos = false, any_neg = false;
    for (const auto& s : val) (s.label ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg) throw SingleClassInput("threshold sweep needs both labels");

    std::vector<ScoredLabel> sorted = val;
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& x, const ScoredLabel& y) { return x.score < y.score; });
    const double lo = sorted.front().score, hi = sorted.back().score;

    std::vector<double> candidates;
    const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / grid_step));
    for (std::size_t k = 0; k <= steps; ++k) candidates.push_back(lo + static_cast<double>(k) * grid_step);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].score > sorted[i - 1].score) candidates.push_back(0.5 * (sorted[i - 1].score + sorted[i].score));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Predictions "score >= t" for ascending t: walk a cursor over sorted scores.
    std::size_t total_pos = 0;
    for (const auto& s : sorted) total_pos += s.label;
    const std::size_t total_neg = sorted.size() - total_pos;

    ThresholdResult best{candidates.front(), -1.0, grid_step};
    std::size_t cursor = 0, neg_below = 0, pos_below = 0;
    for (double t : candidates) {
        while (cursor < sorted.size() && sorted[cursor].score < t) {
            (sorted[cursor].label ? pos_below : neg_below) += 1;
            ++cursor;
        }
        const std::size_t tp = total_pos - pos_below;
        const std::size_t fp = total_neg - neg_below;
        const double f1 = metrics_from_counts(tp, fp, neg_below, pos_below).f1;
        if (f1 > best.f1_at_threshold) {
            best.threshold = t;
            best.f1_at_threshold = f1;
        }
    }
    return best;
}

struct RankingMetrics {
    std::map<std::size_t, double> hit_at;
    double mrr = 0.0;
    std::size_t n_queries = 0;
};

struct RankedList {
    std::string query_id;
    std::vector<std::string> candidates;  // best first
};

// Hit@K for each K and MRR; a gold id absent from the list contributes 0.
inline RankingMetrics ranking_metrics(const std::vector<RankedList>& results,
                                      const std::unordered_map<std::string, std::string>& gold,
                                      const std::vector<std::size_t>& ks) {
    RankingMetrics m;
    for (auto k : ks) m.hit_at[k] = 0.0;
    for (const auto& r : results) {
        auto it = gold.find(r.query_id);
        if (it == gold.end()) throw MissingGold("no gold candidate for query " + r.query_id);
        const auto pos = std::find(r.candidates.begin(), r.candidates.end(), it->second);
        if (pos != r.candidates.end()) {
            const auto rank = static_cast<std::size_t>(pos - r.candidates.begin()) + 1;
            m.mrr += 1.0 / static_cast<double>(rank);
            for (auto k : ks) {
                if (rank <= k) m.hit_at[k] += 1.0;
            }
        }
    }
    m.n_queries = results.size();
    if (m.n_queries > 0) {
        for (auto& [k, v] : m.hit_at) v /= static_cast<double>(m.n_queries);
        m.mrr /= static_cast<double>(m.n_queries);
    }
    return m;
}

} // namespace helea
