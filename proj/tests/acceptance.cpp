// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Every tolerance and seed is fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "lbm/evaluation.hpp"
#include "lbm/io.hpp"
#include "lbm/selection.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace lbm;

constexpr double kIclTol = 1e-9;
constexpr double kClosedTol = 1e-12;
constexpr double kAscentSlack = 1e-8;
constexpr Seed kSeed = 20240917;

struct Verdict {
    bool pass = false;
    std::string detail;
};

int worker_threads() {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

FitOptions pinned_options() {
    FitOptions o;
    o.restarts = 1;
    o.gibbs_sweeps = 300;
    o.max_iter = 500;
    o.tol = 1e-6;
    o.threads = worker_threads();
    return o;
}

const Prior kPrior{4.0, 1.0};
const GroupPair kTarget{3, 4};

BinaryMatrix staircase_data(double eps, Seed seed) {
    return simulate_dataset(staircase_parameters(kTarget.g, kTarget.m, eps), 137, 33, seed).data;
}

// Fraction of datasets whose single-restart selection on the 7x7 grid is (3,4).
int single_restart_hits(double eps, int datasets, std::uint64_t stream) {
    int hits = 0;
    for (int d = 0; d < datasets; ++d) {
        const auto y = staircase_data(eps, derive_seed(kSeed, {stream, static_cast<std::uint64_t>(d), 0}));
        const auto r = select_model(y, 7, 7, kPrior, pinned_options(),
                                    derive_seed(kSeed, {stream, static_cast<std::uint64_t>(d), 1}));
        hits += r.best_pair == kTarget;
    }
    return hits;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Verdict icl_oracle() {
    std::mt19937_64 rng(kSeed);
    const Prior priors[] = {{4.0, 1.0}, {1.0, 1.0}, {2.0, 0.5}};
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const int q = 1 + static_cast<int>(rng() % 5);
        const int g = 1 + static_cast<int>(rng() % 3);
        const int m = 1 + static_cast<int>(rng() % 3);
        const auto y = lbm::testing::random_matrix(rng, n, q);
        const auto part = lbm::testing::random_partition(rng, n, q, g, m);
        for (const auto& p : priors) {
            worst = std::max(worst, std::abs(icl(y, part, g, m, p) - oracle::icl(y, part, p)));
        }
    }
    return {worst <= kIclTol, fmt("max |icl - oracle| = %.3g over 150 evaluations", worst)};
}

Verdict icl_closed() {
    const Prior p{4.0, 1.0};
    const CoPartition one{{0}, {0}, 1, 1};
    const CoPartition two{{0, 0}, {0, 0}, 1, 1};
    const double e1 = std::abs(icl(BinaryMatrix::from_rows({{0}}), one, 1, 1, p) + std::log(2.0));
    const double e2 =
        std::abs(icl(BinaryMatrix::from_rows({{1, 1}, {1, 1}}), two, 1, 1, p) + std::log(5.0));
    return {e1 <= kClosedTol && e2 <= kClosedTol, fmt("errors %.3g (1x1 zero), %.3g (2x2 ones)", e1, e2)};
}

Verdict ascent() {
    std::mt19937_64 rng(kSeed + 3);
    FitOptions o = pinned_options();
    o.threads = 1;
    double worst_drop = 0.0;
    int steps = 0;
    for (int t = 0; t < 100; ++t) {
        const int g = 1 + static_cast<int>(rng() % 3);
        const int m = 1 + static_cast<int>(rng() % 3);
        const double density = 0.2 + 0.6 * std::uniform_real_distribution<double>()(rng);
        const auto y = lbm::testing::random_matrix(rng, 30, 15, density);
        const auto chain = run_chain(y, g, m, kPrior, o, rng(), 0);
        const auto& tr = chain.free_energy_trace;
        for (std::size_t k = 1; k < tr.size(); ++k) {
            worst_drop = std::max(worst_drop, tr[k - 1] - tr[k]);
            ++steps;
        }
    }
    return {worst_drop <= kAscentSlack,
            fmt("largest decrease %.3g over %.0f V-Bayes steps", worst_drop, steps)};
}

int g_hits_eps005 = -1;

Verdict easy_regime() {
    g_hits_eps005 = single_restart_hits(0.05, 20, 4);
    return {g_hits_eps005 >= 17, fmt("(3,4) selected on %.0f/20 (need >= 17)", g_hits_eps005)};
}

Verdict medium_regime() {
    int ok = 0;
    std::string ts;
    for (int d = 0; d < 20; ++d) {
        const auto y = staircase_data(0.15, derive_seed(kSeed, {5, static_cast<std::uint64_t>(d), 0}));
        const auto r = tune_dataset(y, kTarget, 7, 7, kPrior, pinned_options(), 2,
                                    derive_seed(kSeed, {5, static_cast<std::uint64_t>(d), 1}));
        ok += !r.censored;
        ts += r.censored ? " >2" : " " + std::to_string(r.t);
    }
    return {ok >= 16, fmt("(3,4) reached at T <= 2 on %.0f/20 (need >= 16); T:", ok) + ts};
}

Verdict hard_regime() {
    if (g_hits_eps005 < 0) {
        g_hits_eps005 = single_restart_hits(0.05, 20, 4);
    }
    const int hits = single_restart_hits(0.3, 10, 6);
    const double hard = hits / 10.0;
    const double easy = g_hits_eps005 / 20.0;
    return {hard < easy, fmt("T=1 success %.2f at eps=0.3 vs %.2f at eps=0.05", hard, easy)};
}

RobustnessReport g_report;
bool g_report_done = false;

const RobustnessReport& robustness() {
    if (!g_report_done) {
        RobustnessConfig c;
        c.epsilons = {0.15};
        c.datasets_per_eps = 10;
        c.sizes = {20, 80, 120};
        c.samples_per_size = 5;
        g_report = robustness_experiment(c, kPrior, pinned_options(), derive_seed(kSeed, {7}));
        g_report_done = true;
    }
    return g_report;
}

Verdict subsample_selection() {
    const auto& rep = robustness();
    const auto at80 = rep.pair_distribution(0.15, 80);
    const auto at20 = rep.pair_distribution(0.15, 20);
    int total80 = 0;
    for (const auto& [p, c] : at80) {
        total80 += c;
    }
    const int hit80 = at80.count(kTarget) ? at80.at(kTarget) : 0;
    const int hit20 = at20.count(kTarget) ? at20.at(kTarget) : 0;
    bool modal = hit20 > 0;
    GroupPair other{0, 0};
    int other_count = 0;
    for (const auto& [p, c] : at20) {
        if (!(p == kTarget) && c > other_count) {
            other = p;
            other_count = c;
        }
    }
    modal = modal && hit20 > other_count;
    const bool pass = total80 > 0 && hit80 >= 0.9 * total80 && modal;
    std::ostringstream os;
    os << "n=80: (3,4) on " << hit80 << "/" << total80 << " (need >= 90%); n=20: (3,4) on " << hit20
       << ", runner-up (" << other.g << "," << other.m << ") on " << other_count;
    return {pass, os.str()};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Verdict misclassification() {
    const auto& rep = robustness();
    double worst = 0.0;
    int with_three = 0;
    std::vector<double> r20;
    std::vector<double> r120;
    for (const auto& s : rep.samples) {
        if (s.selected.g == 3) {
            worst = std::max(worst, s.match.rate);
            ++with_three;
        }
        if (s.size == 20) {
            r20.push_back(s.match.rate);
        } else if (s.size == 120) {
            r120.push_back(s.match.rate);
        }
    }
    const double m20 = median(r20);
    const double m120 = median(r120);
    const bool pass = worst <= 2.0 / 3.0 && m120 <= m20;
    std::ostringstream os;
    os << "max rate with g_hat=3: " << worst << " over " << with_three << " samples; median rate n=120 "
       << m120 << " vs n=20 " << m20;
    return {pass, os.str()};
}

Verdict matching() {
    ContingencyTable t;
    t.counts = CountMatrix(3, 3);
    t.counts << 6, 1, 1, 0, 1, 6, 0, 5, 0;
    const auto r = best_match(t);
    bool pass = r.misclassified == 3 && r.mapping == std::vector<int>{0, 2, 1};

    std::mt19937_64 rng(kSeed + 9);
    int disagreements = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int g_ref = 1 + static_cast<int>(rng() % 4);
        const int g_est = 1 + static_cast<int>(rng() % 4);
        const int n = 1 + static_cast<int>(rng() % 15);
        const auto ref = lbm::testing::random_labels(rng, n, g_ref);
        const auto est = lbm::testing::random_labels(rng, n, g_est);
        const auto got = best_match(ref, est, g_ref, g_est).misclassified;
        disagreements += got != oracle::min_misclassified(ref, est, g_ref, g_est);
    }
    pass = pass && disagreements == 0;
    std::ostringstream os;
    os << "3x3 table: " << r.misclassified << " misclassified, mapping {" << r.mapping[0] << ","
       << r.mapping[1] << "," << r.mapping[2] << "}; oracle disagreements " << disagreements << "/200";
    return {pass, os.str()};
}

Verdict inter_arrivals() {
    const std::vector<std::int64_t> gaps{700,  1000, 2000,  4500,  4545,  5000,  6000,  6500,
                                         6691, 8000, 10000, 13000, 14594, 20000, 29671, 36345};
    std::vector<std::int64_t> occ;
    std::int64_t at = 0;
    for (auto g : gaps) {
        occ.push_back(at += g);
    }
    const auto back = inter_arrival_times(occ);
    const auto s = summarize(std::vector<double>(back.begin(), back.end()));
    const bool pass = back == gaps && s.min == 700.0 && s.median == 6595.5 && s.mean == 10534.125 &&
                      s.max == 36345.0;
    std::ostringstream os;
    os.precision(10);
    os << "min " << s.min << ", Q1 " << s.q1 << ", median " << s.median << ", mean " << s.mean << ", Q3 "
       << s.q3 << ", max " << s.max;
    return {pass, os.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict cli_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lbm_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    auto call = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "lbm");
        return cli::run(args, sink, sink);
    };
    const std::string data = (dir / "y.csv").string();
    if (call({"simulate", "--epsilon", "0.1", "--n", "60", "--q", "20", "--target", "3,2", "--seed", "11",
              "--out", data}) != 0) {
        return {false, "simulate failed: " + sink.str()};
    }
    const std::vector<std::vector<std::string>> commands{
        {"select", "--data", data, "--g-max", "4", "--m-max", "3", "--restarts", "2", "--seed", "5"},
        {"refmodel", "--data", data, "--g-max", "3", "--m-max", "3", "--runs", "6", "--seed", "5"},
        {"tune-t", "--epsilon", "0.2", "--datasets", "3", "--n", "40", "--q", "15", "--target", "2,2",
         "--g-max", "3", "--m-max", "3", "--t-cap", "3", "--seed", "5"},
        {"robustness", "--epsilon", "0.1", "--datasets", "2", "--n", "50", "--q", "16", "--target", "2,2",
         "--g-max", "3", "--m-max", "3", "--sizes", "20,30", "--samples-per-size", "2", "--seed", "5"},
        {"fit", "--data", data, "--g", "3", "--m", "2", "--restarts", "3", "--seed", "5"},
    };
    int mismatches = 0;
    int failures = 0;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        std::vector<std::string> payloads;
        for (const char* threads : {"1", "1", "4"}) {
            auto args = commands[c];
            const auto out = (dir / ("c" + std::to_string(c) + "_" + std::to_string(payloads.size()))).string();
            args.insert(args.end(), {"--gibbs-sweeps", "30", "--threads", threads, "--out", out});
            failures += call(args) != 0;
            payloads.push_back(slurp(out));
        }
        mismatches += payloads[0] != payloads[1] || payloads[0] != payloads[2] || payloads[0].empty();
    }
    fs::remove_all(dir);
    return {failures == 0 && mismatches == 0,
            fmt("%.0f commands, %.0f payload mismatches, %.0f failed runs (threads 1,1,4)",
                static_cast<double>(commands.size()), mismatches, failures)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"1 ICL oracle equivalence", icl_oracle},
        {"2 ICL closed cases", icl_closed},
        {"3 free-energy ascent", ascent},
        {"4 selection at eps=0.05", easy_regime},
        {"5 selection at eps=0.15 with T<=2", medium_regime},
        {"6 hard regime ordering", hard_regime},
        {"7 subsample selection", subsample_selection},
        {"8 misclassification bound and trend", misclassification},
        {"9 contingency matching", matching},
        {"10 inter-arrival statistics", inter_arrivals},
        {"11 CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  criterion %-40s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", name.c_str(),
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
