#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "csa/errors.hpp"
#include "csa/hash.hpp"
#include "csa/strategy.hpp"

namespace csa {

// Keys throughout are catalog strategy ids; translation to names happens only
// at the file boundary.
struct SamplingPlan {
    std::map<int, double> frequencies;   // a_i over the full annotated dataset
    std::map<int, double> difficulty;    // d_i
    std::map<int, double> proportions;   // p_i = a_i d_i / sum_j a_j d_j
    int subset_size = 0;                 // n
    std::map<int, int> quotas;           // per-strategy draw counts, sums to n
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// empirical frequencies and target proportions
// ---------------------------------------------------------------------------

// a_i = count_i / total over every catalog strategy (absent strategies get 0).
inline std::map<int, double> empirical_frequencies(const std::vector<AnnotatedSample>& dataset,
                                                   const StrategyCatalog& catalog) {
    if (dataset.empty()) {
        throw MissingStrategy("cannot compute frequencies of an empty dataset");
    }
    std::map<int, std::int64_t> counts;
    for (const auto& def : catalog.strategies()) counts[def.id] = 0;
    for (const auto& sample : dataset) {
        if (!sample.annotation.strategy) {
            throw MissingStrategy("sample '" + sample.sample_id +
                                  "' carries no strategy; frequencies are defined on fully "
                                  "annotated data");
        }
        counts[resolve_strategy(*sample.annotation.strategy, catalog).id] += 1;
    }
    std::map<int, double> out;
    for (const auto& [id, count] : counts) {
        out[id] = static_cast<double>(count) / static_cast<double>(dataset.size());
    }
    return out;
}

// p_i = a_i * d_i / sum_j a_j * d_j
inline std::map<int, double> target_proportions(const std::map<int, double>& frequencies,
                                                const std::map<int, double>& difficulty) {
    if (frequencies.size() != difficulty.size()) {
        throw WeightError("frequency and difficulty maps cover different strategies");
    }
    double denom = 0.0;
    for (const auto& [id, a] : frequencies) {
        auto it = difficulty.find(id);
        if (it == difficulty.end()) {
            throw WeightError("no difficulty weight for strategy id " + std::to_string(id));
        }
        if (!(it->second > 0.0)) {
            throw WeightError("difficulty weight for strategy id " + std::to_string(id) +
                              " must be positive");
        }
        denom += a * it->second;
    }
    if (!(denom > 0.0)) {
        throw WeightError("total frequency mass is zero");
    }
    std::map<int, double> out;
    for (const auto& [id, a] : frequencies) {
        out[id] = a * difficulty.at(id) / denom;
    }
    return out;
}

// ---------------------------------------------------------------------------
// apportionment and feasibility
// ---------------------------------------------------------------------------

// Largest-remainder apportionment: floor the ideal shares, then hand the
// remaining units out by descending fractional remainder, ties to the lower
// strategy id.
inline std::map<int, int> apportion(int n, const std::map<int, double>& proportions) {
    std::map<int, int> quotas;
    std::vector<std::pair<double, int>> remainders;  // (fraction, id)
    long long assigned = 0;
    for (const auto& [id, p] : proportions) {
        const double ideal = static_cast<double>(n) * p;
        const double floored = std::floor(ideal);
        quotas[id] = static_cast<int>(floored);
        assigned += static_cast<long long>(floored);
        remainders.emplace_back(ideal - floored, id);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    long long leftover = static_cast<long long>(n) - assigned;
    for (std::size_t i = 0; leftover > 0 && i < remainders.size(); ++i, --leftover) {
        quotas[remainders[i].second] += 1;
    }
    return quotas;
}

// feasible(n): every floored ideal share fits its stratum. Floors are monotone
// in n, so the predicate is monotone and a binary search finds the maximum.
// (Largest-remainder quotas are not monotone in n, which is why feasibility is
// defined on floors; the bonus units are reconciled afterwards in make_plan.)
inline bool floor_feasible(int n, const std::map<int, double>& proportions,
                           const std::map<int, std::int64_t>& pool_counts) {
    for (const auto& [id, p] : proportions) {
        auto it = pool_counts.find(id);
        const std::int64_t available = it == pool_counts.end() ? 0 : it->second;
        if (static_cast<std::int64_t>(std::floor(static_cast<double>(n) * p)) > available) {
            return false;
        }
    }
    return true;
}

// Largest n <= n_max such that floor_feasible(n); capped by the pool mass of
// strategies with positive target share. Returns 0 when even n = 1 fails.
inline int max_feasible_size(const std::map<int, std::int64_t>& pool_counts,
                             const std::map<int, double>& proportions, int n_max) {
    std::int64_t reachable = 0;
    for (const auto& [id, p] : proportions) {
        if (p > 0.0) {
            auto it = pool_counts.find(id);
            if (it != pool_counts.end()) reachable += it->second;
        }
    }
    int lo = 0;  // feasible(0) always holds
    int hi = static_cast<int>(std::min<std::int64_t>(n_max, reachable));
    while (lo < hi) {
        const int mid = lo + (hi - lo + 1) / 2;
        if (floor_feasible(mid, proportions, pool_counts)) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

namespace detail {

// Portable uniform draw in [0, bound): rejection sampling on the raw 64-bit
// stream, since std::uniform_int_distribution is implementation-defined.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % bound;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// plan construction and stratified sampling
// ---------------------------------------------------------------------------

inline std::map<int, std::int64_t> strategy_counts(const std::vector<AnnotatedSample>& pool,
                                                   const StrategyCatalog& catalog) {
    std::map<int, std::int64_t> counts;
    for (const auto& def : catalog.strategies()) counts[def.id] = 0;
    for (const auto& sample : pool) {
        if (!sample.annotation.strategy) {
            throw MissingStrategy("pool sample '" + sample.sample_id + "' carries no strategy");
        }
        counts[resolve_strategy(*sample.annotation.strategy, catalog).id] += 1;
    }
    return counts;
}

// Derives the full plan: target proportions from (a, d), maximal feasible n
// via binary search, largest-remainder quotas at that n, and a final
// clamp-and-redistribute pass for the rare stratum whose remainder bonus
// exceeds its pool count.
inline SamplingPlan make_plan(const std::map<int, double>& frequencies,
                              const std::map<int, double>& difficulty,
                              const std::map<int, std::int64_t>& pool_counts, int n_max,
                              std::uint64_t seed) {
    SamplingPlan plan;
    plan.frequencies = frequencies;
    plan.difficulty = difficulty;
    plan.proportions = target_proportions(frequencies, difficulty);
    plan.subset_size = max_feasible_size(pool_counts, plan.proportions, n_max);
    plan.quotas = apportion(plan.subset_size, plan.proportions);
    plan.seed = seed;

    // Reconcile remainder bonuses with stratum capacity.
    long long overflow = 0;
    for (auto& [id, quota] : plan.quotas) {
        auto it = pool_counts.find(id);
        const std::int64_t available = it == pool_counts.end() ? 0 : it->second;
        if (quota > available) {
            overflow += quota - static_cast<int>(available);
            quota = static_cast<int>(available);
        }
    }
    if (overflow > 0) {
        // Hand the displaced units to strata with spare capacity, largest
        // fractional remainder first, ties to the lower id.
        std::vector<std::pair<double, int>> order;
        for (const auto& [id, p] : plan.proportions) {
            if (p <= 0.0) continue;
            const double ideal = static_cast<double>(plan.subset_size) * p;
            order.emplace_back(ideal - std::floor(ideal), id);
        }
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        while (overflow > 0) {
            bool placed = false;
            for (const auto& [frac, id] : order) {
                auto it = pool_counts.find(id);
                const std::int64_t available = it == pool_counts.end() ? 0 : it->second;
                if (plan.quotas[id] < available) {
                    plan.quotas[id] += 1;
                    --overflow;
                    placed = true;
                    if (overflow == 0) break;
                }
            }
            if (!placed) {
                throw StratumUnderflow("", "subset size exceeds pool capacity across strata");
            }
        }
    }
    return plan;
}

// Draws exactly quota_i per stratum, uniformly without replacement, from the
// stratum sorted by sample_id. Output is strategy-id order then draw order.
// Deterministic in (pool contents, quotas, seed); insensitive to pool order.
inline std::vector<AnnotatedSample> stratified_sample(const std::vector<AnnotatedSample>& pool,
                                                      const std::map<int, int>& quotas,
                                                      std::uint64_t seed,
                                                      const StrategyCatalog& catalog) {
    std::map<int, std::vector<const AnnotatedSample*>> strata;
    for (const auto& sample : pool) {
        if (!sample.annotation.strategy) continue;
        strata[resolve_strategy(*sample.annotation.strategy, catalog).id].push_back(&sample);
    }
    std::vector<AnnotatedSample> out;
    for (const auto& [id, quota] : quotas) {
        if (quota == 0) continue;
        auto it = strata.find(id);
        const std::size_t available = it == strata.end() ? 0 : it->second.size();
        if (static_cast<std::size_t>(quota) > available) {
            const std::string name = catalog.by_id(id).name;
            throw StratumUnderflow(name, "quota " + std::to_string(quota) + " for strategy '" +
                                             name + "' exceeds stratum size " +
                                             std::to_string(available));
        }
        auto& members = it->second;
        std::sort(members.begin(), members.end(),
                  [](const AnnotatedSample* a, const AnnotatedSample* b) {
                      return a->sample_id < b->sample_id;
                  });
        // Partial Fisher-Yates over the sorted stratum.
        std::mt19937_64 rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(id))));
        for (int draw = 0; draw < quota; ++draw) {
            const auto remaining = static_cast<std::uint64_t>(members.size() - draw);
            const auto pick = static_cast<std::size_t>(draw) +
                              static_cast<std::size_t>(detail::uniform_below(rng, remaining));
            std::swap(members[static_cast<std::size_t>(draw)], members[pick]);
            out.push_back(*members[static_cast<std::size_t>(draw)]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SFT corpus assembly
// ---------------------------------------------------------------------------

// The refined subset keeps its strategy supervision; everything else in the
// full set is emitted with strategy and actions removed. Output follows the
// order of `full`.
inline std::vector<AnnotatedSample> assemble_sft_corpus(
    const std::vector<AnnotatedSample>& refined, const std::vector<AnnotatedSample>& full) {
    std::map<std::string, const AnnotatedSample*> refined_by_id;
    for (const auto& sample : refined) refined_by_id[sample.sample_id] = &sample;

    std::set<std::string> full_ids;
    for (const auto& sample : full) full_ids.insert(sample.sample_id);
    for (const auto& [id, sample] : refined_by_id) {
        if (!full_ids.contains(id)) {
            throw AssemblyError("refined sample '" + id + "' is not part of the full dataset");
        }
    }

    std::vector<AnnotatedSample> out;
    out.reserve(full.size());
    for (const auto& sample : full) {
        auto it = refined_by_id.find(sample.sample_id);
        if (it != refined_by_id.end()) {
            out.push_back(*it->second);
        } else {
            AnnotatedSample stripped = sample;
            stripped.annotation.strategy.reset();
            stripped.annotation.actions.reset();
            out.push_back(std::move(stripped));
        }
    }
    return out;
}

}  // namespace csa
