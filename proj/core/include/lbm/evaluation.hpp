#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lbm/selection.hpp"

namespace lbm {

/// counts(k, k') = number of rows with reference label k and estimated label k'.
struct ContingencyTable {
    CountMatrix counts;

    std::int64_t total() const { return counts.sum(); }
    int reference_groups() const { return static_cast<int>(counts.rows()); }
    int estimated_groups() const { return static_cast<int>(counts.cols()); }
};

ContingencyTable contingency(const std::vector<int>& ref_z, const std::vector<int>& est_z,
                             int g_ref, int g_est);

enum class MatchDirection {
    EstimatedToReference, // mapping[k'] = reference group of estimated group k'
    ReferenceToEstimated, // mapping[k]  = estimated group of reference group k
};

struct MatchResult {
    std::int64_t misclassified = 0;
    double rate = 0.0;
    MatchDirection direction = MatchDirection::EstimatedToReference;
    std::vector<int> mapping;
};

/// Largest group count handled by the exhaustive search.
inline constexpr int kMaxMatchGroups = 8;

/// Smallest number of rows off the matched diagonal. With equal group counts
/// the search runs over label permutations; when the estimate has more groups
/// over all unions of estimated groups onto the reference groups, and
/// symmetrically when it has fewer. Ties go to the lexicographically smallest
/// mapping.
MatchResult best_match(const ContingencyTable& table);
MatchResult best_match(const std::vector<int>& ref_z, const std::vector<int>& est_z, int g_ref,
                       int g_est);

/// Per-group sample sizes: floor(n_sub * p_k) plus one extra unit for the
/// groups with the largest remainders (lower index first on ties).
std::vector<int> largest_remainder_allocation(const std::vector<double>& proportions, int n_sub);

struct Subsample {
    BinaryMatrix data;
    std::vector<int> labels; // reference labels of the selected rows
    std::vector<int> rows;   // selected row indices into the source, ascending
};

/// Draws n_sub rows without replacement, stratified on the reference labels
/// with largest-remainder allocation of n_sub * proportions.
Subsample stratified_subsample(const BinaryMatrix& data, const std::vector<int>& ref_z,
                               const std::vector<double>& proportions, int n_sub, Seed seed);

struct RobustnessConfig {
    std::vector<double> epsilons{0.15, 0.2, 0.25};
    int datasets_per_eps = 100;
    std::vector<int> sizes{20, 40, 60, 80, 100, 120};
    int samples_per_size = 10;
    GroupPair target{3, 4};
    int g_max = 7;
    int m_max = 7;
    int n = 137;
    int q = 33;
    int max_attempts = 100; // re-simulations allowed per accepted dataset

    void validate() const;
};

struct AcceptedDataset {
    double epsilon = 0.0;
    int dataset = 0;
    int attempts = 0; // simulations needed until the target pair was selected
    Seed simulation_seed = 0;
    std::vector<double> proportions; // estimated pi of the full-data fit
};

struct SampleRecord {
    double epsilon = 0.0;
    int dataset = 0;
    int size = 0;
    int sample = 0;
    GroupPair selected;
    MatchResult match;
};

struct RobustnessReport {
    RobustnessConfig config;
    std::vector<AcceptedDataset> datasets;
    std::vector<SampleRecord> samples;

    /// Selected (g, m) pairs over all samples of one (epsilon, size) cell.
    std::map<GroupPair, int> pair_distribution(double epsilon, int size) const;
    /// Misclassification rates of the samples in a cell that selected g_hat row groups.
    std::vector<double> rates(double epsilon, int size, int g_hat) const;
};

RobustnessReport robustness_experiment(const RobustnessConfig& config, const Prior& prior,
                                       const FitOptions& options, Seed seed);

} // namespace lbm
