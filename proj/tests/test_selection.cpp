#include <gtest/gtest.h>

#include <numeric>

#include "lbm/errors.hpp"
#include "lbm/selection.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace lbm {
namespace {

// Sixteen inter-arrival gaps whose min, quartiles, median, mean and max are
// the reference summary values checked below.
const std::vector<std::int64_t> kInterArrivals{700,  1000, 2000,  4500,  4545,  5000,
                                               6000, 6500, 6691,  8000,  10000, 13000,
                                               14594, 20000, 29671, 36345};

TEST(SelectModel, ConstantMatrixPrefersOneBlock) {
    const BinaryMatrix y(Matrix::Zero(20, 10));
    const auto r = select_model(y, 3, 3, {4, 1}, {}, 1);
    ASSERT_EQ(r.grid.size(), 9u);
    EXPECT_EQ(r.best_pair, (GroupPair{1, 1}));
    for (const auto& c : r.grid) {
        EXPECT_LE(c.fit.icl_value, r.best_fit().icl_value);
    }
}

// Exhaustive check of the claim above on a small constant matrix: no
// partition of any (g, m) <= (3, 3) beats the single block.
TEST(SelectModel, ConstantMatrixExhaustiveIcl) {
    const BinaryMatrix y(Matrix::Zero(4, 3));
    const Prior prior{4, 1};
    const double single = icl(y, {{0, 0, 0, 0}, {0, 0, 0}, 1, 1}, 1, 1, prior);
    for (int g = 1; g <= 3; ++g) {
        for (int m = 1; m <= 3; ++m) {
            CoPartition p{{0, 0, 0, 0}, {0, 0, 0}, g, m};
            // odometer over all labelings
            while (true) {
                EXPECT_LE(oracle::icl(y, p, prior), single + 1e-12);
                int pos = 0;
                for (; pos < 7; ++pos) {
                    int& v = pos < 4 ? p.z[pos] : p.w[pos - 4];
                    const int lim = pos < 4 ? g : m;
                    if (++v < lim) {
                        break;
                    }
                    v = 0;
                }
                if (pos == 7) {
                    break;
                }
            }
        }
    }
}

TEST(SelectModel, SingletonGrid) {
    std::mt19937_64 rng(1);
    const auto y = testing::random_matrix(rng, 10, 6);
    const auto r = select_model(y, 1, 1, {}, {}, 3);
    EXPECT_EQ(r.best_pair, (GroupPair{1, 1}));
    EXPECT_EQ(r.grid.size(), 1u);
}

TEST(SelectModel, RecoversStaircasePair) {
    const auto truth = staircase_parameters(3, 4, 0.05);
    int hits = 0;
    for (Seed s = 0; s < 20; ++s) {
        const auto sim = simulate_dataset(truth, 137, 33, derive_seed(900, {s}));
        const auto r = select_model(sim.data, 7, 7, {}, {}, derive_seed(901, {s}));
        hits += r.best_pair == GroupPair{3, 4};
    }
    EXPECT_GE(hits, 18);
}

TEST(SelectModel, BestCellHasMaximalIclAndGridIsScheduleFree) {
    const auto sim = simulate_dataset(staircase_parameters(2, 3, 0.15), 40, 18, 5);
    FitOptions one;
    FitOptions many;
    many.threads = 4;
    const auto a = select_model(sim.data, 3, 4, {}, one, 44);
    const auto b = select_model(sim.data, 3, 4, {}, many, 44);
    ASSERT_EQ(a.grid.size(), 12u);
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        EXPECT_LE(a.grid[i].fit.icl_value, a.best_fit().icl_value);
        EXPECT_EQ(a.grid[i].fit.icl_value, b.grid[i].fit.icl_value);
        EXPECT_EQ(a.grid[i].fit.free_energy, b.grid[i].fit.free_energy);
        EXPECT_EQ(a.grid[i].fit.map_part, b.grid[i].fit.map_part);
    }
    EXPECT_EQ(a.best_pair, b.best_pair);
}

TEST(SelectModel, TiesPreferSmallerModels) {
    std::vector<GridCell> grid;
    for (int g = 1; g <= 3; ++g) {
        for (int m = 1; m <= 3; ++m) {
            GridCell c{g, m, {}};
            c.fit.icl_value = (g + m == 4) ? -10.0 : -20.0;
            grid.push_back(c);
        }
    }
    const auto& best = grid[best_cell(grid)];
    EXPECT_EQ(best.g, 1);
    EXPECT_EQ(best.m, 3);
    grid[4].fit.icl_value = -10.0; // (2,2) also ties; smaller g still wins
    EXPECT_EQ(grid[best_cell(grid)].g, 1);
}

TEST(SelectModel, RejectsBadGrid) {
    const BinaryMatrix y(Matrix::Ones(3, 3));
    EXPECT_THROW(select_model(y, 0, 3, {}, {}, 1), InvalidArgument);
}

TEST(TuneDataset, StopsAtFirstSuccess) {
    const auto sim = simulate_dataset(staircase_parameters(3, 4, 0.05), 137, 33, 31);
    const auto sel = select_model(sim.data, 5, 5, {}, {}, 7);
    ASSERT_EQ(sel.best_pair, (GroupPair{3, 4})) << "fixture dataset should be easy";
    const auto out = tune_dataset(sim.data, {3, 4}, 5, 5, {}, {}, 10, 7);
    EXPECT_EQ(out.t, 1);
    EXPECT_FALSE(out.censored);
}

// The recorded T is minimal: replaying select_model with T restarts selects
// the target and with T - 1 restarts does not.
TEST(TuneDataset, RecordedTIsMinimal) {
    // short Gibbs runs keep single restarts unreliable enough to need T > 1
    FitOptions o;
    o.gibbs_sweeps = 20;
    int replayed = 0;
    for (Seed s = 0; s < 12 && replayed < 2; ++s) {
        const auto sim = simulate_dataset(staircase_parameters(3, 4, 0.3), 137, 33, derive_seed(77, {s}));
        const auto out = tune_dataset(sim.data, {3, 4}, 4, 5, {}, o, 6, s);
        if (out.censored || out.t == 1) {
            continue;
        }
        ++replayed;
        o.restarts = out.t;
        EXPECT_EQ(select_model(sim.data, 4, 5, {}, o, s).best_pair, (GroupPair{3, 4}));
        o.restarts = out.t - 1;
        EXPECT_NE(select_model(sim.data, 4, 5, {}, o, s).best_pair, (GroupPair{3, 4}));
        o.restarts = 1;
    }
    EXPECT_GT(replayed, 0) << "no dataset needed more than one restart";
}

TEST(TuneRestarts, RecordsEveryDataset) {
    TuningConfig cfg;
    cfg.epsilons = {0.05, 0.3};
    cfg.datasets_per_eps = 3;
    cfg.g_max = 4;
    cfg.m_max = 5;
    cfg.n = 60;
    cfg.q = 20;
    cfg.t_cap = 2;
    FitOptions o;
    o.threads = 2;
    const auto recs = tune_restarts(cfg, {}, o, 5);
    ASSERT_EQ(recs.size(), 2u);
    for (const auto& r : recs) {
        ASSERT_EQ(r.outcomes.size(), 3u);
        for (const auto& out : r.outcomes) {
            EXPECT_GE(out.t, 1);
            EXPECT_LE(out.t, cfg.t_cap);
            EXPECT_TRUE(!out.censored || out.t == cfg.t_cap);
        }
    }
    o.threads = 1;
    const auto again = tune_restarts(cfg, {}, o, 5);
    for (std::size_t e = 0; e < 2; ++e) {
        for (std::size_t d = 0; d < 3; ++d) {
            EXPECT_EQ(recs[e].outcomes[d].t, again[e].outcomes[d].t);
            EXPECT_EQ(recs[e].outcomes[d].censored, again[e].outcomes[d].censored);
        }
    }
}

TEST(TuneRestarts, ValidatesConfig) {
    TuningConfig cfg;
    cfg.t_cap = 0;
    EXPECT_THROW(tune_restarts(cfg, {}, {}, 1), InvalidArgument);
    cfg = {};
    cfg.target = {8, 4};
    EXPECT_THROW(tune_restarts(cfg, {}, {}, 1), InvalidArgument);
}

TEST(Summary, InterArrivalTableValues) {
    std::vector<std::int64_t> occurrences;
    std::int64_t at = 0;
    for (auto gap : kInterArrivals) {
        at += gap;
        occurrences.push_back(at);
    }
    const auto gaps = inter_arrival_times(occurrences);
    EXPECT_EQ(gaps, kInterArrivals);
    EXPECT_EQ(std::accumulate(gaps.begin(), gaps.end(), std::int64_t{0}), occurrences.back());

    const auto s = summarize(std::vector<double>(gaps.begin(), gaps.end()));
    EXPECT_EQ(s.min, 700.0);
    EXPECT_EQ(s.q1, 4533.75);
    EXPECT_EQ(s.median, 6595.5);
    EXPECT_EQ(s.mean, 10534.125);
    EXPECT_EQ(s.q3, 13398.5);
    EXPECT_EQ(s.max, 36345.0);
}

TEST(Summary, RejectsEmptyAndUnsorted) {
    EXPECT_THROW(summarize({}), InvalidArgument);
    EXPECT_THROW(inter_arrival_times({3, 3}), InvalidArgument);
    EXPECT_THROW(inter_arrival_times({0}), InvalidArgument);
}

TEST(ReferenceRuns, SamePairEveryRun) {
    const std::vector<GroupPair> sel(6, GroupPair{3, 4});
    const auto s = summarize_reference_runs(sel, {-5, -4, -6, -4.5, -7, -4.2});
    EXPECT_EQ(s.reference_pair, (GroupPair{3, 4}));
    EXPECT_EQ(s.reference_run, 2u);
    EXPECT_EQ(s.inter_arrivals, std::vector<std::int64_t>(6, 1));
    EXPECT_EQ(s.inter_arrival_summary.max, 1.0);
}

TEST(ReferenceRuns, ReferenceIsMaxIclNotMode) {
    const std::vector<GroupPair> sel{{3, 4}, {4, 5}, {3, 4}, {3, 4}, {4, 5}, {3, 4}};
    const auto s = summarize_reference_runs(sel, {-10, -8, -10, -10, -8.5, -10});
    EXPECT_EQ(s.reference_pair, (GroupPair{4, 5}));
    EXPECT_EQ(s.occurrence_indices, (std::vector<std::int64_t>{2, 5}));
    EXPECT_EQ(s.inter_arrivals, (std::vector<std::int64_t>{2, 3}));
    EXPECT_EQ(s.pair_counts.at(GroupPair{3, 4}), 4);
}

TEST(ReferenceStudy, SingleRun) {
    std::mt19937_64 rng(2);
    const auto y = testing::random_matrix(rng, 15, 8);
    const auto s = reference_model_study(y, 2, 2, {}, {}, 1, 9);
    EXPECT_EQ(s.runs, 1);
    EXPECT_EQ(s.occurrence_indices, std::vector<std::int64_t>{1});
    EXPECT_EQ(s.inter_arrivals, std::vector<std::int64_t>{1});
    EXPECT_EQ(s.inter_arrival_summary.min, s.inter_arrival_summary.max);
}

TEST(ReferenceStudy, RunsAreScheduleFree) {
    const auto sim = simulate_dataset(staircase_parameters(2, 3, 0.2), 40, 15, 3);
    FitOptions many;
    many.threads = 3;
    const auto a = reference_model_study(sim.data, 3, 3, {}, {}, 4, 11);
    const auto b = reference_model_study(sim.data, 3, 3, {}, many, 4, 11);
    EXPECT_EQ(a.selected, b.selected);
    EXPECT_EQ(a.best_icl, b.best_icl);
    EXPECT_EQ(a.reference_pair, b.reference_pair);
    const auto last = a.occurrence_indices.back();
    EXPECT_EQ(std::accumulate(a.inter_arrivals.begin(), a.inter_arrivals.end(), std::int64_t{0}), last);
}

} // namespace
} // namespace lbm
