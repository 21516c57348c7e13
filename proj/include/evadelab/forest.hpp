#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "evadelab/core.hpp"

namespace evadelab {
namespace detail {

inline double gini(std::size_t positives, std::size_t total) {
    if (total == 0) return 0.0;
    const double p1 = static_cast<double>(positives) / static_cast<double>(total);
    const double p0 = 1.0 - p1;
    return 1.0 - p0 * p0 - p1 * p1;
}

// Grows one tree on a bootstrap sample, accumulating each chosen split's
// weighted Gini decrease (weighted by node size over the bootstrap size)
// into `importance`. The tree itself is never kept; only the importance
// contributions matter here.
class ImportanceTreeBuilder {
public:
    ImportanceTreeBuilder(const std::vector<std::vector<double>>& columns,
                          const std::vector<int>& labels, int max_depth,
                          std::size_t candidates_per_split, std::mt19937_64& rng,
                          std::vector<double>& importance)
        : columns_(columns),
          labels_(labels),
          max_depth_(max_depth),
          candidates_(candidates_per_split),
          rng_(rng),
          importance_(importance) {}

    void grow(std::vector<std::size_t> sample) {
        root_size_ = sample.size();
        split_node(std::move(sample), 0);
    }

private:
    void split_node(std::vector<std::size_t> node, int depth) {
        const std::size_t n = node.size();
        std::size_t positives = 0;
        for (std::size_t idx : node) positives += static_cast<std::size_t>(labels_[idx]);
        if (depth >= max_depth_ || n < 2 || positives == 0 || positives == n) return;

        const double node_gini = gini(positives, n);
        const auto feature_pool = sample_features();

        double best_gain = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::size_t> sorted = node;
        for (std::size_t f : feature_pool) {
            const auto& col = columns_[f];
            std::sort(sorted.begin(), sorted.end(),
                      [&col](std::size_t a, std::size_t b) { return col[a] < col[b]; });
            std::size_t left_pos = 0;
            for (std::size_t i = 1; i < n; ++i) {
                left_pos += static_cast<std::size_t>(labels_[sorted[i - 1]]);
                if (col[sorted[i]] <= col[sorted[i - 1]]) continue;
                const std::size_t nl = i;
                const std::size_t nr = n - i;
                const double child =
                    (static_cast<double>(nl) * gini(left_pos, nl) +
                     static_cast<double>(nr) * gini(positives - left_pos, nr)) /
                    static_cast<double>(n);
                const double gain = node_gini - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = (col[sorted[i - 1]] + col[sorted[i]]) / 2.0;
                    found = true;
                }
            }
        }
        if (!found) return;

        importance_[best_feature] +=
            best_gain * static_cast<double>(n) / static_cast<double>(root_size_);

        std::vector<std::size_t> left, right;
        left.reserve(n);
        right.reserve(n);
        const auto& col = columns_[best_feature];
        for (std::size_t idx : node) (col[idx] <= best_threshold ? left : right).push_back(idx);
        node.clear();
        node.shrink_to_fit();
        split_node(std::move(left), depth + 1);
        split_node(std::move(right), depth + 1);
    }

    // Distinct features, partial Fisher-Yates; the draw order is part of
    // the deterministic behaviour under a fixed seed.
    std::vector<std::size_t> sample_features() {
        const std::size_t total = columns_.size();
        std::vector<std::size_t> pool(total);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        const std::size_t want = std::min(candidates_, total);
        for (std::size_t i = 0; i < want; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, total - 1);
            std::swap(pool[i], pool[pick(rng_)]);
        }
        pool.resize(want);
        return pool;
    }

    const std::vector<std::vector<double>>& columns_;
    const std::vector<int>& labels_;
    int max_depth_;
    std::size_t candidates_;
    std::mt19937_64& rng_;
    std::vector<double>& importance_;
    std::size_t root_size_ = 0;
};

}  // namespace detail

/// Per-feature importance from `trees` Gini decision trees grown on
/// bootstrap samples, each split chosen over ceil(sqrt(F)) random
/// candidate features. Returns raw per-feature mean total weighted
/// impurity decreases (not yet normalized).
inline std::vector<double> forest_importance_scores(
    const std::vector<std::vector<double>>& columns, const std::vector<int>& labels, int trees,
    int max_depth, std::int64_t seed) {
    if (columns.empty()) throw std::invalid_argument("forest_importance: no feature columns");
    const std::size_t n = labels.size();
    if (n < 2) throw std::invalid_argument("forest_importance: need at least 2 records");
    for (const auto& col : columns)
        if (col.size() != n)
            throw std::invalid_argument("forest_importance: column/label length mismatch");
    const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 1; });
    const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 0; });
    if (!has_pos || !has_neg)
        throw std::invalid_argument("forest_importance: both classes must be present");
    if (trees < 1 || max_depth < 1)
        throw std::invalid_argument("forest_importance: trees and max_depth must be >= 1");

    const auto candidates = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(columns.size()))));
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::vector<double> importance(columns.size(), 0.0);

    for (int t = 0; t < trees; ++t) {
        std::vector<std::size_t> bootstrap(n);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (auto& idx : bootstrap) idx = pick(rng);
        detail::ImportanceTreeBuilder builder(columns, labels, max_depth, candidates, rng,
                                              importance);
        builder.grow(std::move(bootstrap));
    }
    for (double& v : importance) v /= static_cast<double>(trees);
    return importance;
}

}  // namespace evadelab
