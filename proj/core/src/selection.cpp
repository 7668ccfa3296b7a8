#include "lbm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "lbm/errors.hpp"
#include "lbm/parallel.hpp"

namespace lbm {
namespace {

void check_grid(int g_max, int m_max) {
    if (g_max < 1 || m_max < 1) {
        throw InvalidArgument("grid bounds must be >= 1");
    }
}

FitOptions single_threaded(FitOptions options) {
    options.threads = 1;
    return options;
}

double quantile_sorted(const std::vector<double>& v, double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

} // namespace

Seed cell_seed(Seed seed, int g, int m) {
    return derive_seed(seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(m)});
}

std::size_t best_cell(const std::vector<GridCell>& grid) {
    if (grid.empty()) {
        throw InvalidArgument("empty selection grid");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const auto& c = grid[i];
        const auto& b = grid[best];
        if (c.fit.icl_value > b.fit.icl_value) {
            best = i;
        } else if (c.fit.icl_value == b.fit.icl_value) {
            const int cs = c.g + c.m;
            const int bs = b.g + b.m;
            if (cs < bs || (cs == bs && c.g < b.g)) {
                best = i;
            }
        }
    }
    return best;
}

SelectionResult select_model(const BinaryMatrix& data, int g_max, int m_max, const Prior& prior,
                             const FitOptions& options, Seed seed) {
    check_grid(g_max, m_max);
    options.validate();
    prior.validate();

    const auto cells = static_cast<std::size_t>(g_max) * static_cast<std::size_t>(m_max);
    SelectionResult out;
    out.grid.resize(cells);
    const FitOptions inner = single_threaded(options);
    parallel_for(cells, options.threads, [&](std::size_t idx) {
        const int g = static_cast<int>(idx) / m_max + 1;
        const int m = static_cast<int>(idx) % m_max + 1;
        GridCell& cell = out.grid[idx];
        cell.g = g;
        cell.m = m;
        try {
            cell.fit = fit(data, g, m, prior, inner, cell_seed(seed, g, m));
        } catch (const Error& e) {
            std::ostringstream os;
            os << "grid cell (g,m)=(" << g << "," << m << "): " << e.what();
            throw NumericalFailure(os.str());
        }
    });
    out.best_index = best_cell(out.grid);
    out.best_pair = {out.grid[out.best_index].g, out.grid[out.best_index].m};
    return out;
}

void TuningConfig::validate() const {
    if (epsilons.empty()) {
        throw InvalidArgument("at least one epsilon is required");
    }
    for (double e : epsilons) {
        if (!(e > 0.0 && e < 1.0)) {
            throw InvalidArgument("epsilon values must lie in (0,1)");
        }
    }
    if (datasets_per_eps < 1 || n < 1 || q < 1) {
        throw InvalidArgument("datasets, n and q must be >= 1");
    }
    if (t_cap < 1) {
        throw InvalidArgument("T cap must be >= 1");
    }
    if (target.g < 1 || target.m < 1 || target.g > g_max || target.m > m_max) {
        throw InvalidArgument("target pair must lie inside the grid");
    }
}

TuningOutcome tune_dataset(const BinaryMatrix& data, GroupPair target, int g_max, int m_max,
                           const Prior& prior, const FitOptions& options, int t_cap, Seed seed) {
    check_grid(g_max, m_max);
    if (t_cap < 1) {
        throw InvalidArgument("T cap must be >= 1");
    }
    prior.validate();
    const FitOptions chain_options = single_threaded(options);
    chain_options.validate();

    const auto cells = static_cast<std::size_t>(g_max) * static_cast<std::size_t>(m_max);
    std::vector<GridCell> grid(cells);
    std::vector<std::optional<FitResult>> best(cells);
    for (int t = 1; t <= t_cap; ++t) {
        const int restart = t - 1;
        parallel_for(cells, options.threads, [&](std::size_t idx) {
            const int g = static_cast<int>(idx) / m_max + 1;
            const int m = static_cast<int>(idx) % m_max + 1;
            try {
                const Seed s = chain_seed(cell_seed(seed, g, m), restart);
                FitResult r = run_chain(data, g, m, prior, chain_options, s, restart).fit;
                // strict improvement keeps the first chain on ties, as fit() does
                if (!best[idx] || r.free_energy > best[idx]->free_energy) {
                    best[idx] = std::move(r);
                }
            } catch (const NumericalFailure&) {
                // a failed chain is skipped; fit() only fails when every chain does
            }
            if (best[idx]) {
                grid[idx] = {g, m, *best[idx]};
            }
        });
        if (std::all_of(best.begin(), best.end(), [](const auto& b) { return b.has_value(); })) {
            const std::size_t b = best_cell(grid);
            if (grid[b].g == target.g && grid[b].m == target.m) {
                return {t, false, seed};
            }
        }
    }
    return {t_cap, true, seed};
}

Seed tuning_simulation_seed(Seed seed, std::size_t e, std::size_t d) {
    return derive_seed(seed, {e, d, 0});
}

Seed tuning_selection_seed(Seed seed, std::size_t e, std::size_t d) {
    return derive_seed(seed, {e, d, 1});
}

std::vector<TuningRecord> tune_restarts(const TuningConfig& config, const Prior& prior,
                                        const FitOptions& options, Seed seed) {
    config.validate();
    options.validate();
    prior.validate();

    const std::size_t n_eps = config.epsilons.size();
    const auto per_eps = static_cast<std::size_t>(config.datasets_per_eps);
    std::vector<TuningRecord> records(n_eps);
    for (std::size_t e = 0; e < n_eps; ++e) {
        records[e].epsilon = config.epsilons[e];
        records[e].outcomes.resize(per_eps);
    }
    const FitOptions inner = single_threaded(options);
    parallel_for(n_eps * per_eps, options.threads, [&](std::size_t task) {
        const std::size_t e = task / per_eps;
        const std::size_t d = task % per_eps;
        const LbmParameters truth =
            staircase_parameters(config.target.g, config.target.m, config.epsilons[e]);
        const SimulatedData sim =
            simulate_dataset(truth, config.n, config.q, tuning_simulation_seed(seed, e, d));
        TuningOutcome out =
            tune_dataset(sim.data, config.target, config.g_max, config.m_max, prior, inner,
                         config.t_cap, tuning_selection_seed(seed, e, d));
        out.dataset_seed = tuning_simulation_seed(seed, e, d);
        records[e].outcomes[d] = out;
    });
    return records;
}

Summary summarize(std::vector<double> values) {
    if (values.empty()) {
        throw InvalidArgument("cannot summarize an empty sample");
    }
    std::sort(values.begin(), values.end());
    Summary s;
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return s;
}

std::vector<std::int64_t> inter_arrival_times(const std::vector<std::int64_t>& occurrences) {
    std::vector<std::int64_t> out;
    out.reserve(occurrences.size());
    std::int64_t prev = 0;
    for (std::int64_t idx : occurrences) {
        if (idx <= prev) {
            throw InvalidArgument("occurrence indices must be 1-based and strictly increasing");
        }
        out.push_back(idx - prev);
        prev = idx;
    }
    return out;
}

ReferenceStudy summarize_reference_runs(std::vector<GroupPair> selected,
                                        std::vector<double> best_icl) {
    if (selected.empty() || selected.size() != best_icl.size()) {
        throw InvalidArgument("reference study needs one selection and ICL value per run");
    }
    ReferenceStudy s;
    s.runs = static_cast<int>(selected.size());
    std::size_t ref = 0;
    for (std::size_t k = 1; k < best_icl.size(); ++k) {
        if (best_icl[k] > best_icl[ref]) {
            ref = k;
        }
    }
    s.reference_pair = selected[ref];
    s.reference_run = ref + 1;
    for (std::size_t k = 0; k < selected.size(); ++k) {
        ++s.pair_counts[selected[k]];
        if (selected[k] == s.reference_pair) {
            s.occurrence_indices.push_back(static_cast<std::int64_t>(k + 1));
        }
    }
    s.inter_arrivals = inter_arrival_times(s.occurrence_indices);
    std::vector<double> gaps(s.inter_arrivals.begin(), s.inter_arrivals.end());
    s.inter_arrival_summary = summarize(std::move(gaps));
    s.selected = std::move(selected);
    s.best_icl = std::move(best_icl);
    return s;
}

ReferenceStudy reference_model_study(const BinaryMatrix& data, int g_max, int m_max,
                                     const Prior& prior, const FitOptions& options, int runs,
                                     Seed seed) {
    check_grid(g_max, m_max);
    if (runs < 1) {
        throw InvalidArgument("runs must be >= 1");
    }
    FitOptions inner = single_threaded(options);
    inner.restarts = 1;
    inner.validate();

    const auto k = static_cast<std::size_t>(runs);
    std::vector<GroupPair> selected(k);
    std::vector<double> best_icl(k);
    parallel_for(k, options.threads, [&](std::size_t run) {
        const SelectionResult r =
            select_model(data, g_max, m_max, prior, inner, derive_seed(seed, {run}));
        selected[run] = r.best_pair;
        best_icl[run] = r.best_fit().icl_value;
    });
    return summarize_reference_runs(std::move(selected), std::move(best_icl));
}

} // namespace lbm
