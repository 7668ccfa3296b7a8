#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <vector>

#include "lbm/inference.hpp"

namespace lbm {

struct GroupPair {
    int g = 1;
    int m = 1;

    friend auto operator<=>(const GroupPair&, const GroupPair&) = default;
};

struct GridCell {
    int g = 1;
    int m = 1;
    FitResult fit;
};

struct SelectionResult {
    std::vector<GridCell> grid; // row-major over g, then m
    GroupPair best_pair;
    std::size_t best_index = 0;

    const FitResult& best_fit() const { return grid.at(best_index).fit; }
};

/// Seed used for grid cell (g, m) under a select_model() master seed.
Seed cell_seed(Seed seed, int g, int m);

/// Index of the ICL-maximizing cell; ties go to the smaller g + m, then the
/// smaller g.
std::size_t best_cell(const std::vector<GridCell>& grid);

/// Fits every (g, m) in [1..g_max] x [1..m_max] with options.restarts restarts
/// and picks the pair with the largest ICL at its MAP partition.
SelectionResult select_model(const BinaryMatrix& data, int g_max, int m_max, const Prior& prior,
                             const FitOptions& options, Seed seed);

struct TuningOutcome {
    int t = 1;             // first T selecting the target, or t_cap when censored
    bool censored = false; // target never selected for T <= t_cap
    Seed dataset_seed = 0;
};

struct TuningRecord {
    double epsilon = 0.0;
    std::vector<TuningOutcome> outcomes;
};

struct TuningConfig {
    std::vector<double> epsilons{0.05, 0.15, 0.2, 0.25, 0.3};
    int datasets_per_eps = 100;
    GroupPair target{3, 4};
    int g_max = 7;
    int m_max = 7;
    int n = 137;
    int q = 33;
    int t_cap = 200;

    void validate() const;
};

/// Smallest T in [1, t_cap] for which select_model(data, ..., restarts = T, seed)
/// selects `target`. Chains are added one at a time per cell, which gives
/// exactly the select_model result for every T without refitting.
TuningOutcome tune_dataset(const BinaryMatrix& data, GroupPair target, int g_max, int m_max,
                           const Prior& prior, const FitOptions& options, int t_cap, Seed seed);

/// Seeds used by tune_restarts for dataset `d` of epsilon index `e`.
Seed tuning_simulation_seed(Seed seed, std::size_t e, std::size_t d);
Seed tuning_selection_seed(Seed seed, std::size_t e, std::size_t d);

/// For every epsilon simulates datasets_per_eps staircase datasets and records
/// the number of restarts needed to select the target pair.
std::vector<TuningRecord> tune_restarts(const TuningConfig& config, const Prior& prior,
                                        const FitOptions& options, Seed seed);

struct Summary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Min, quartiles (linear interpolation between order statistics), mean, max.
Summary summarize(std::vector<double> values);

/// Successive differences of 1-based, strictly increasing occurrence indices;
/// the first inter-arrival is the first occurrence index itself.
std::vector<std::int64_t> inter_arrival_times(const std::vector<std::int64_t>& occurrences);

struct ReferenceStudy {
    int runs = 0;
    std::vector<GroupPair> selected; // per run
    std::vector<double> best_icl;    // per run
    GroupPair reference_pair;
    std::size_t reference_run = 0;   // 1-based run attaining the maximal ICL
    std::vector<std::int64_t> occurrence_indices;
    std::vector<std::int64_t> inter_arrivals;
    Summary inter_arrival_summary;
    std::map<GroupPair, int> pair_counts;
};

/// Repeats single-restart model selection `runs` times; the reference pair is
/// the selection of the run with the largest ICL, and its occurrences along the
/// runs give the inter-arrival distribution.
ReferenceStudy reference_model_study(const BinaryMatrix& data, int g_max, int m_max,
                                     const Prior& prior, const FitOptions& options, int runs,
                                     Seed seed);

/// Builds the study statistics from per-run selections and ICL values.
ReferenceStudy summarize_reference_runs(std::vector<GroupPair> selected,
                                        std::vector<double> best_icl);

} // namespace lbm
