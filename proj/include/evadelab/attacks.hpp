#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evadelab/core.hpp"
#include "evadelab/dataio.hpp"
#include "evadelab/mlp.hpp"

namespace evadelab {

/// Frozen deep copy of a victim model. Attackers differentiate through
/// this snapshot; if the live victim retrains afterwards the snapshot —
/// and therefore every attack computed from it — is unaffected.
class GradientOracle {
public:
    GradientOracle(MlpModel snapshot, int snapshot_day)
        : snapshot_(std::move(snapshot)), snapshot_day_(snapshot_day) {}

    const MlpModel& model() const { return snapshot_; }
    int snapshot_day() const { return snapshot_day_; }

private:
    MlpModel snapshot_;
    int snapshot_day_;
};

/// Box constraints plus an immutability mask, both in the model's scaled
/// input space. Flag- and discrete-valued features the attacker may not
/// touch are expressed through the mask.
struct AttackBounds {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<bool> immutable_mask;

    static AttackBounds unit_box(std::size_t k) {
        AttackBounds b;
        b.lower.assign(k, 0.0);
        b.upper.assign(k, 1.0);
        b.immutable_mask.assign(k, false);
        return b;
    }

    void validate() const {
        if (lower.size() != upper.size() || lower.size() != immutable_mask.size())
            throw std::invalid_argument("AttackBounds: vector lengths differ");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (lower[i] > upper[i])
                throw std::invalid_argument("AttackBounds: lower > upper at index " +
                                            std::to_string(i));
    }
};

struct FgsmConfig {
    double epsilon = 0.1;
};

struct PgdConfig {
    double epsilon = 0.1;
    double step_size = 0.025;  // epsilon / 4
    int steps = 10;
    bool random_start = false;
    std::int64_t seed = 0;
};

struct LowProFoolConfig {
    int max_iters = 50;
    double step_size = 0.05;
    double tradeoff_lambda = 1.0;
    std::vector<double> importance;  // per-feature perceptibility weights
};

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Clamp to the box, then reset immutable coordinates to their original
/// values.
inline std::vector<double> project(std::span<const double> x, const AttackBounds& b,
                                   std::span<const double> x_orig) {
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp(out[i], b.lower[i], b.upper[i]);
        if (b.immutable_mask[i]) out[i] = x_orig[i];
    }
    return out;
}

/// Single step of size epsilon along the sign of the loss gradient
/// (sign(0) = 0), projected to the bounds.
inline std::vector<double> fgsm(const GradientOracle& oracle, std::span<const double> x, int y,
                                const FgsmConfig& cfg, const AttackBounds& b) {
    if (cfg.epsilon < 0.0) throw std::invalid_argument("fgsm: epsilon must be >= 0");
    const auto g = input_gradient(oracle.model(), x, y);
    std::vector<double> adv(x.begin(), x.end());
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += cfg.epsilon * sign_of(g[i]);
    return project(adv, b, x);
}

/// Iterated sign steps, each projected both to the bounds and the
/// L-infinity ball of radius epsilon around the original input.
inline std::vector<double> pgd(const GradientOracle& oracle, std::span<const double> x, int y,
                               const PgdConfig& cfg, const AttackBounds& b) {
    if (cfg.epsilon < 0.0) throw std::invalid_argument("pgd: epsilon must be >= 0");
    if (cfg.steps < 1) throw std::invalid_argument("pgd: steps must be >= 1");
    if (!(cfg.step_size > 0.0)) throw std::invalid_argument("pgd: step_size must be > 0");

    std::vector<double> cur(x.begin(), x.end());
    if (cfg.random_start && cfg.epsilon > 0.0) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed));
        std::uniform_real_distribution<double> noise(-cfg.epsilon, cfg.epsilon);
        for (double& v : cur) v += noise(rng);
    }
    for (int step = 0; step < cfg.steps; ++step) {
        const auto g = input_gradient(oracle.model(), cur, y);
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += cfg.step_size * sign_of(g[i]);
        cur = project(cur, b, x);
        for (std::size_t i = 0; i < cur.size(); ++i)
            cur[i] = std::clamp(cur[i], x[i] - cfg.epsilon, x[i] + cfg.epsilon);
    }
    return cur;
}

/// |Pearson correlation with the label| per column, normalized to unit
/// 2-norm; the LowProFool perceptibility weights.
inline std::vector<double> pearson_importance(const Matrix& x_train,
                                              const std::vector<int>& y_train) {
    if (x_train.rows != y_train.size())
        throw std::invalid_argument("pearson_importance: row/label count mismatch");
    const bool has_pos = std::any_of(y_train.begin(), y_train.end(), [](int y) { return y == 1; });
    const bool has_neg = std::any_of(y_train.begin(), y_train.end(), [](int y) { return y == 0; });
    if (!has_pos || !has_neg)
        throw std::invalid_argument("pearson_importance: labels are single-class");

    std::vector<double> labels(y_train.begin(), y_train.end());
    std::vector<double> v(x_train.cols);
    std::vector<double> col(x_train.rows);
    for (std::size_t c = 0; c < x_train.cols; ++c) {
        for (std::size_t r = 0; r < x_train.rows; ++r) col[r] = x_train(r, c);
        v[c] = std::abs(pearson(col, labels));
    }
    double norm = 0.0;
    for (double w : v) norm += w * w;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& w : v) w /= norm;
    return v;
}

/// Gradient descent on BCE(x + r, flipped label) + lambda * ||v o r||_2^2,
/// projecting x + r to the bounds after every step. Returns the iterate
/// with the smallest weighted perturbation norm among those the snapshot
/// misclassifies, or the final iterate if none does.
inline std::vector<double> lowprofool(const GradientOracle& oracle, std::span<const double> x,
                                      int y, const LowProFoolConfig& cfg, const AttackBounds& b) {
    if (cfg.max_iters < 0) throw std::invalid_argument("lowprofool: max_iters must be >= 0");
    if (!(cfg.step_size > 0.0)) throw std::invalid_argument("lowprofool: step_size must be > 0");
    if (cfg.tradeoff_lambda < 0.0)
        throw std::invalid_argument("lowprofool: tradeoff_lambda must be >= 0");
    if (cfg.importance.size() != x.size())
        throw std::invalid_argument("lowprofool: importance length mismatch");
    for (double w : cfg.importance)
        if (w < 0.0) throw std::invalid_argument("lowprofool: importance must be non-negative");

    const int target = 1 - y;
    const std::size_t k = x.size();
    std::vector<double> cur(x.begin(), x.end());  // x + r, kept projected
    std::vector<double> best;
    double best_norm = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const auto g = input_gradient(oracle.model(), cur, target);
        for (std::size_t i = 0; i < k; ++i) {
            const double r = cur[i] - x[i];
            const double penalty =
                2.0 * cfg.tradeoff_lambda * cfg.importance[i] * cfg.importance[i] * r;
            cur[i] -= cfg.step_size * (g[i] + penalty);
        }
        cur = project(cur, b, x);

        if (predict(oracle.model(), cur) != y) {
            double norm = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double w = cfg.importance[i] * (cur[i] - x[i]);
                norm += w * w;
            }
            norm = std::sqrt(norm);
            if (norm < best_norm) {
                best_norm = norm;
                best = cur;
            }
        }
    }
    return std::isinf(best_norm) ? cur : best;
}

enum class AttackScope { all_samples, malicious_only };

/// Runs one attack over a whole batch, preserving row order; the attack
/// callable receives (row, label, row_index). With malicious_only scope,
/// benign rows pass through untouched.
template <typename AttackFn>
inline Matrix attack_batch(const Matrix& x, const std::vector<int>& y, AttackFn&& attack,
                           AttackScope scope = AttackScope::all_samples) {
    if (x.rows != y.size()) throw std::invalid_argument("attack_batch: row/label count mismatch");
    Matrix adv(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::span<const double> row(x.row(r), x.cols);
        if (scope == AttackScope::malicious_only && y[r] == 0) {
            std::copy(row.begin(), row.end(), adv.row(r));
            continue;
        }
        const std::vector<double> out = attack(row, y[r], r);
        std::copy(out.begin(), out.end(), adv.row(r));
    }
    return adv;
}

/// Adversarial batch CSV: the perturbed matrix plus orig_label,
/// attack_name and oracle_day columns.
inline void write_adversarial_csv(const std::string& path,
                                  const std::vector<std::string>& feature_names, const Matrix& adv,
                                  const std::vector<int>& orig_labels,
                                  const std::string& attack_name, int oracle_day) {
    if (adv.cols != feature_names.size())
        throw std::invalid_argument("write_adversarial_csv: name/column count mismatch");
    if (adv.rows != orig_labels.size())
        throw std::invalid_argument("write_adversarial_csv: row/label count mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write CSV file: " + path);
    for (const auto& name : feature_names) out << name << ',';
    out << "orig_label,attack_name,oracle_day\n";
    for (std::size_t r = 0; r < adv.rows; ++r) {
        for (std::size_t c = 0; c < adv.cols; ++c) out << format_cell(adv(r, c)) << ',';
        out << orig_labels[r] << ',' << attack_name << ',' << oracle_day << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace evadelab
