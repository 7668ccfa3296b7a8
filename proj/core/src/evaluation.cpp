#include "lbm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "lbm/errors.hpp"
#include "lbm/parallel.hpp"

namespace lbm {
namespace {

void check_labels(const std::vector<int>& labels, int groups, const char* name) {
    for (int k : labels) {
        if (k < 0 || k >= groups) {
            throw InvalidArgument(std::string(name) + " label outside its group range");
        }
    }
}

// Enumerates, in lexicographic order, every surjective map from `from` items
// onto `to` groups (bijections when the counts match) and keeps the one with
// the largest matched mass score(map).
template <typename Score>
std::vector<int> best_surjection(int from, int to, Score&& score, std::int64_t& best_value) {
    std::vector<int> map(static_cast<std::size_t>(from));
    std::optional<std::vector<int>> best;
    best_value = 0;
    if (from == to) {
        std::iota(map.begin(), map.end(), 0);
        do {
            const std::int64_t v = score(map);
            if (!best || v > best_value) {
                best = map;
                best_value = v;
            }
        } while (std::next_permutation(map.begin(), map.end()));
        return *best;
    }
    std::vector<int> hits(static_cast<std::size_t>(to));
    while (true) {
        std::fill(hits.begin(), hits.end(), 0);
        for (int v : map) {
            ++hits[static_cast<std::size_t>(v)];
        }
        if (std::all_of(hits.begin(), hits.end(), [](int h) { return h > 0; })) {
            const std::int64_t v = score(map);
            if (!best || v > best_value) {
                best = map;
                best_value = v;
            }
        }
        // odometer increment, last position fastest
        int pos = from - 1;
        while (pos >= 0 && map[static_cast<std::size_t>(pos)] == to - 1) {
            map[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) {
            break;
        }
        ++map[static_cast<std::size_t>(pos)];
    }
    return *best;
}

} // namespace

ContingencyTable contingency(const std::vector<int>& ref_z, const std::vector<int>& est_z,
                             int g_ref, int g_est) {
    if (ref_z.size() != est_z.size()) {
        throw InvalidArgument("reference and estimated labelings differ in length");
    }
    if (g_ref < 1 || g_est < 1) {
        throw InvalidArgument("group counts must be >= 1");
    }
    check_labels(ref_z, g_ref, "reference");
    check_labels(est_z, g_est, "estimated");
    ContingencyTable t{CountMatrix::Zero(g_ref, g_est)};
    for (std::size_t i = 0; i < ref_z.size(); ++i) {
        ++t.counts(ref_z[i], est_z[i]);
    }
    return t;
}

MatchResult best_match(const ContingencyTable& table) {
    const int g_ref = table.reference_groups();
    const int g_est = table.estimated_groups();
    if (g_ref > kMaxMatchGroups || g_est > kMaxMatchGroups) {
        std::ostringstream os;
        os << "partition matching supports at most " << kMaxMatchGroups << " groups, got "
           << g_ref << " and " << g_est;
        throw Unsupported(os.str());
    }
    const std::int64_t total = table.total();
    MatchResult r;
    std::int64_t matched = 0;
    if (g_est >= g_ref) {
        r.direction = MatchDirection::EstimatedToReference;
        r.mapping = best_surjection(
            g_est, g_ref,
            [&](const std::vector<int>& map) {
                std::int64_t s = 0;
                for (int k = 0; k < g_est; ++k) {
                    s += table.counts(map[static_cast<std::size_t>(k)], k);
                }
                return s;
            },
            matched);
    } else {
        r.direction = MatchDirection::ReferenceToEstimated;
        r.mapping = best_surjection(
            g_ref, g_est,
            [&](const std::vector<int>& map) {
                std::int64_t s = 0;
                for (int k = 0; k < g_ref; ++k) {
                    s += table.counts(k, map[static_cast<std::size_t>(k)]);
                }
                return s;
            },
            matched);
    }
    r.misclassified = total - matched;
    r.rate = total > 0 ? static_cast<double>(r.misclassified) / static_cast<double>(total) : 0.0;
    return r;
}

MatchResult best_match(const std::vector<int>& ref_z, const std::vector<int>& est_z, int g_ref,
                       int g_est) {
    return best_match(contingency(ref_z, est_z, g_ref, g_est));
}

std::vector<int> largest_remainder_allocation(const std::vector<double>& proportions, int n_sub) {
    if (proportions.empty()) {
        throw InvalidArgument("proportions must not be empty");
    }
    if (n_sub < 0) {
        throw InvalidArgument("sample size must be non-negative");
    }
    double sum = 0.0;
    for (double p : proportions) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InvalidArgument("proportions must be non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidArgument("proportions must sum to 1");
    }
    const std::size_t g = proportions.size();
    std::vector<int> alloc(g);
    std::vector<double> remainder(g);
    int assigned = 0;
    for (std::size_t k = 0; k < g; ++k) {
        const double exact = static_cast<double>(n_sub) * proportions[k] / sum;
        alloc[k] = static_cast<int>(std::floor(exact));
        remainder[k] = exact - alloc[k];
        assigned += alloc[k];
    }
    std::vector<std::size_t> order(g);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
    for (std::size_t r = 0; assigned < n_sub; r = (r + 1) % g) {
        ++alloc[order[r]];
        ++assigned;
    }
    return alloc;
}

Subsample stratified_subsample(const BinaryMatrix& data, const std::vector<int>& ref_z,
                               const std::vector<double>& proportions, int n_sub, Seed seed) {
    if (static_cast<Eigen::Index>(ref_z.size()) != data.rows()) {
        throw InvalidArgument("reference labels do not match the number of rows");
    }
    if (n_sub < 1 || n_sub > data.rows()) {
        throw InvalidArgument("subsample size must lie in [1, n]");
    }
    const int groups = static_cast<int>(proportions.size());
    check_labels(ref_z, groups, "reference");
    const std::vector<int> alloc = largest_remainder_allocation(proportions, n_sub);

    std::vector<std::vector<int>> members(static_cast<std::size_t>(groups));
    for (std::size_t i = 0; i < ref_z.size(); ++i) {
        members[static_cast<std::size_t>(ref_z[i])].push_back(static_cast<int>(i));
    }
    Rng rng(seed);
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(n_sub));
    for (int k = 0; k < groups; ++k) {
        auto& pool = members[static_cast<std::size_t>(k)];
        const int want = alloc[static_cast<std::size_t>(k)];
        if (want > static_cast<int>(pool.size())) {
            std::ostringstream os;
            os << "group " << k + 1 << " needs " << want << " rows but only " << pool.size()
               << " are available";
            throw InfeasibleSample(os.str());
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        rows.insert(rows.end(), pool.begin(), pool.begin() + want);
    }
    std::sort(rows.begin(), rows.end());

    std::vector<int> labels;
    labels.reserve(rows.size());
    for (int i : rows) {
        labels.push_back(ref_z[static_cast<std::size_t>(i)]);
    }
    return {data.select_rows(rows), std::move(labels), std::move(rows)};
}

void RobustnessConfig::validate() const {
    if (epsilons.empty() || sizes.empty()) {
        throw InvalidArgument("robustness experiment needs epsilons and sample sizes");
    }
    for (double e : epsilons) {
        if (!(e > 0.0 && e < 1.0)) {
            throw InvalidArgument("epsilon values must lie in (0,1)");
        }
    }
    for (int s : sizes) {
        if (s < 1 || s > n) {
            throw InvalidArgument("sample sizes must lie in [1, n]");
        }
    }
    if (datasets_per_eps < 1 || samples_per_size < 1 || n < 1 || q < 1 || max_attempts < 1) {
        throw InvalidArgument("robustness counts must be >= 1");
    }
    if (target.g < 1 || target.m < 1 || target.g > g_max || target.m > m_max) {
        throw InvalidArgument("target pair must lie inside the grid");
    }
}

std::map<GroupPair, int> RobustnessReport::pair_distribution(double epsilon, int size) const {
    std::map<GroupPair, int> out;
    for (const auto& s : samples) {
        if (s.epsilon == epsilon && s.size == size) {
            ++out[s.selected];
        }
    }
    return out;
}

std::vector<double> RobustnessReport::rates(double epsilon, int size, int g_hat) const {
    std::vector<double> out;
    for (const auto& s : samples) {
        if (s.epsilon == epsilon && s.size == size && s.selected.g == g_hat) {
            out.push_back(s.match.rate);
        }
    }
    return out;
}

RobustnessReport robustness_experiment(const RobustnessConfig& config, const Prior& prior,
                                       const FitOptions& options, Seed seed) {
    config.validate();
    options.validate();
    prior.validate();
    FitOptions inner = options;
    inner.threads = 1;

    const std::size_t n_eps = config.epsilons.size();
    const auto per_eps = static_cast<std::size_t>(config.datasets_per_eps);

    // Full-data datasets, re-simulated until the target pair is selected.
    struct Reference {
        AcceptedDataset info;
        BinaryMatrix data;
        std::vector<int> labels;
    };
    std::vector<std::optional<Reference>> refs(n_eps * per_eps);
    parallel_for(refs.size(), options.threads, [&](std::size_t task) {
        const std::size_t e = task / per_eps;
        const std::size_t d = task % per_eps;
        const LbmParameters truth =
            staircase_parameters(config.target.g, config.target.m, config.epsilons[e]);
        for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
            const auto a = static_cast<std::uint64_t>(attempt);
            const Seed sim_seed = derive_seed(seed, {e, d, a, 0});
            SimulatedData sim = simulate_dataset(truth, config.n, config.q, sim_seed);
            const SelectionResult sel = select_model(sim.data, config.g_max, config.m_max, prior,
                                                     inner, derive_seed(seed, {e, d, a, 1}));
            if (sel.best_pair == config.target) {
                const FitResult& best = sel.best_fit();
                AcceptedDataset info{config.epsilons[e], static_cast<int>(d), attempt + 1, sim_seed,
                                     std::vector<double>(best.params.pi.data(),
                                                         best.params.pi.data() + best.params.pi.size())};
                refs[task].emplace(Reference{std::move(info), std::move(sim.data), best.map_part.z});
                return;
            }
        }
        std::ostringstream os;
        os << "epsilon " << config.epsilons[e] << ", dataset " << d + 1 << ": target pair not selected in "
           << config.max_attempts << " simulations";
        throw NumericalFailure(os.str());
    });

    const std::size_t n_sizes = config.sizes.size();
    const auto per_size = static_cast<std::size_t>(config.samples_per_size);
    const std::size_t per_ref = n_sizes * per_size;
    RobustnessReport report;
    report.config = config;
    report.samples.resize(refs.size() * per_ref);
    parallel_for(report.samples.size(), options.threads, [&](std::size_t task) {
        const std::size_t r = task / per_ref;
        const std::size_t s = (task % per_ref) / per_size;
        const std::size_t t = task % per_size;
        const Reference& ref = *refs[r];
        const int size = config.sizes[s];
        const std::size_t e = r / per_eps;
        const std::size_t d = r % per_eps;
        try {
            const Subsample sub =
                stratified_subsample(ref.data, ref.labels, ref.info.proportions, size,
                                     derive_seed(seed, {e, d, 1000 + s, t, 2}));
            const SelectionResult sel = select_model(sub.data, config.g_max, config.m_max, prior,
                                                     inner, derive_seed(seed, {e, d, 1000 + s, t, 3}));
            SampleRecord& rec = report.samples[task];
            rec.epsilon = config.epsilons[e];
            rec.dataset = static_cast<int>(d);
            rec.size = size;
            rec.sample = static_cast<int>(t);
            rec.selected = sel.best_pair;
            rec.match = best_match(sub.labels, sel.best_fit().map_part.z, config.target.g,
                                   sel.best_pair.g);
        } catch (const Error& err) {
            std::ostringstream os;
            os << "epsilon " << config.epsilons[e] << ", dataset " << d + 1 << ", n=" << size
               << ", sample " << t + 1 << ": " << err.what();
            throw Error(os.str());
        }
    });
    for (auto& ref : refs) {
        report.datasets.push_back(std::move(ref->info));
    }
    return report;
}

} // namespace lbm
