#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "csa/errors.hpp"

namespace csa {

// ---------------------------------------------------------------------------
// tied-rank Spearman correlation
// ---------------------------------------------------------------------------

namespace detail {

// Fractional (average) ranks, 1-based: members of a tie group all receive the
// mean of the ranks the group spans.
inline std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share the average of ranks i+1..j+1
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace detail

// Pearson correlation of fractional ranks. Throws DegenerateVector when either
// input is constant (the correlation is undefined); callers decide policy.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw PanelMismatch("spearman requires equal-length vectors");
    }
    if (x.size() < 2) {
        throw DegenerateVector("spearman requires at least 2 observations");
    }
    if (detail::is_constant(x) || detail::is_constant(y)) {
        throw DegenerateVector("spearman is undefined for a constant vector");
    }
    const auto rx = detail::fractional_ranks(x);
    const auto ry = detail::fractional_ranks(y);
    const std::size_t n = rx.size();
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;  // mean rank is (n+1)/2

    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return spearman(std::span<const double>(x), std::span<const double>(y));
}

// ---------------------------------------------------------------------------
// reliability weights
// ---------------------------------------------------------------------------

struct ReliabilityWeights {
    std::map<std::string, double> rho;         // mean pairwise correlation per judge
    std::map<std::string, double> normalized;  // non-negative, sums to 1
    std::vector<std::string> warnings;
};

// Judge-by-sample integer score matrix with aligned sample vectors. Judges are
// kept in sorted name order so every reduction over them is order-fixed.
struct ScoreMatrix {
    std::vector<std::string> sample_ids;
    std::map<std::string, std::vector<double>> scores_by_judge;

    std::size_t sample_count() const noexcept { return sample_ids.size(); }
    std::size_t judge_count() const noexcept { return scores_by_judge.size(); }
};

// Mean pairwise Spearman per judge, clamped below at min_weight, then
// normalized. A constant judge vector contributes 0 to every pair it is in
// (with a warning); if every clamped value is 0 the weights fall back to
// uniform.
inline ReliabilityWeights reliability_weights(const ScoreMatrix& matrix,
                                              double min_weight = 0.0) {
    if (min_weight < 0.0) {
        throw WeightError("min_weight must be non-negative");
    }
    const std::size_t m = matrix.judge_count();
    if (m < 2) {
        throw PanelError("reliability weights require at least 2 judges");
    }
    if (matrix.sample_count() < 2) {
        throw PanelError("reliability weights require at least 2 samples");
    }
    for (const auto& [judge, scores] : matrix.scores_by_judge) {
        if (scores.size() != matrix.sample_count()) {
            throw PanelMismatch("judge '" + judge + "' has " + std::to_string(scores.size()) +
                                " scores for " + std::to_string(matrix.sample_count()) +
                                " samples");
        }
    }

    ReliabilityWeights out;
    for (const auto& [judge_i, scores_i] : matrix.scores_by_judge) {
        double sum = 0.0;
        for (const auto& [judge_j, scores_j] : matrix.scores_by_judge) {
            if (judge_i == judge_j) continue;
            try {
                sum += spearman(scores_i, scores_j);
            } catch (const DegenerateVector&) {
                out.warnings.push_back("degenerate score vector in pair (" + judge_i + ", " +
                                       judge_j + "); correlation treated as 0");
            }
        }
        out.rho[judge_i] = sum / static_cast<double>(m - 1);
    }

    double total = 0.0;
    for (const auto& [judge, rho] : out.rho) {
        total += std::max(rho, min_weight);
    }
    if (total <= 0.0) {
        out.warnings.emplace_back("all clamped reliabilities are 0; falling back to uniform weights");
        for (const auto& [judge, rho] : out.rho) {
            out.normalized[judge] = 1.0 / static_cast<double>(m);
        }
    } else {
        for (const auto& [judge, rho] : out.rho) {
            out.normalized[judge] = std::max(rho, min_weight) / total;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// agreement-penalized aggregation
// ---------------------------------------------------------------------------

enum class SigmaMode { population, sample };

struct QualityScore {
    std::string sample_id;
    std::map<std::string, int> per_judge;
    double sigma = 0.0;
    double aggregate = 0.0;
};

// S = sum_i w_i * s_i - lambda * sigma, with sigma the standard deviation of
// the per-judge scores (population by default: the panel is a census).
inline QualityScore aggregate_score(std::string sample_id,
                                    const std::map<std::string, int>& per_judge,
                                    const ReliabilityWeights& weights, double lambda,
                                    SigmaMode sigma_mode = SigmaMode::population) {
    if (per_judge.size() != weights.normalized.size()) {
        throw PanelMismatch("per-judge scores and weights cover different panels");
    }
    for (const auto& [judge, score] : per_judge) {
        if (!weights.normalized.contains(judge)) {
            throw PanelMismatch("no weight for judge '" + judge + "'");
        }
    }

    const double n = static_cast<double>(per_judge.size());
    double mean = 0.0;
    for (const auto& [judge, score] : per_judge) mean += score;
    mean /= n;

    double ss = 0.0;
    double weighted = 0.0;
    for (const auto& [judge, score] : per_judge) {
        const double d = score - mean;
        ss += d * d;
        weighted += weights.normalized.at(judge) * score;
    }
    double sigma = 0.0;
    if (sigma_mode == SigmaMode::population) {
        sigma = std::sqrt(ss / n);
    } else if (per_judge.size() > 1) {
        sigma = std::sqrt(ss / (n - 1.0));
    }

    QualityScore out;
    out.sample_id = std::move(sample_id);
    out.per_judge = per_judge;
    out.sigma = sigma;
    out.aggregate = weighted - lambda * sigma;
    return out;
}

inline QualityScore aggregate_score(const std::map<std::string, int>& per_judge,
                                    const ReliabilityWeights& weights, double lambda,
                                    SigmaMode sigma_mode = SigmaMode::population) {
    return aggregate_score(std::string{}, per_judge, weights, lambda, sigma_mode);
}

// ---------------------------------------------------------------------------
// top-k ranking
// ---------------------------------------------------------------------------

// Descending by aggregate; ties broken by ascending sample_id so the output is
// reproducible on shuffled input.
inline std::vector<std::string> rank_and_select(std::vector<QualityScore> scores,
                                                std::size_t k) {
    if (k > scores.size()) {
        throw SelectionError("cannot select " + std::to_string(k) + " of " +
                             std::to_string(scores.size()) + " scored samples");
    }
    std::sort(scores.begin(), scores.end(), [](const QualityScore& a, const QualityScore& b) {
        if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
        return a.sample_id < b.sample_id;
    });
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(scores[i].sample_id);
    return out;
}

}  // namespace csa
