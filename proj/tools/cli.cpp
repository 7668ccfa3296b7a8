#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <ostream>

#include "lbm/errors.hpp"
#include "lbm/evaluation.hpp"
#include "lbm/io.hpp"
#include "lbm/selection.hpp"

namespace lbm::cli {
namespace {

using Json = nlohmann::ordered_json;

struct CommonOptions {
    double a = 4.0;
    double b = 1.0;
    std::uint64_t seed = 1;
    double tol = 1e-6;
    int max_iter = 500;
    int gibbs_sweeps = 300;
    int restarts = 1;
    int threads = 1;
    std::string out;

    Prior prior() const { return {a, b}; }
    FitOptions fit_options() const {
        FitOptions o;
        o.restarts = restarts;
        o.gibbs_sweeps = gibbs_sweeps;
        o.max_iter = max_iter;
        o.tol = tol;
        o.threads = threads;
        return o;
    }
};

struct GridOptions {
    int g_max = 7;
    int m_max = 7;
};

struct Options {
    CommonOptions common;
    GridOptions grid;
    std::string data;
    std::string summary;
    int g = 0;
    int m = 0;
    std::vector<double> epsilons;
    int n = 137;
    int q = 33;
    int datasets = 100;
    int samples_per_size = 10;
    std::vector<int> sizes{20, 40, 60, 80, 100, 120};
    std::vector<int> target{3, 4};
    int runs = 1000;
    int t_cap = 200;
};

void add_common(CLI::App* cmd, CommonOptions& c, bool restarts) {
    cmd->add_option("--a", c.a, "Dirichlet hyperparameter on the proportions")->capture_default_str();
    cmd->add_option("--b", c.b, "Beta hyperparameter on the block probabilities")->capture_default_str();
    cmd->add_option("--seed", c.seed, "Master seed; all randomness derives from it")->capture_default_str();
    cmd->add_option("--tol", c.tol, "Relative free-energy tolerance")->capture_default_str();
    cmd->add_option("--max-iter", c.max_iter, "Maximum V-Bayes iterations")->capture_default_str();
    cmd->add_option("--gibbs-sweeps", c.gibbs_sweeps, "Gibbs initialization sweeps")->capture_default_str();
    if (restarts) {
        cmd->add_option("--restarts", c.restarts, "Restarts per (g,m) fit (T)")->capture_default_str();
    }
    cmd->add_option("--threads", c.threads, "Worker threads")->capture_default_str();
    cmd->add_option("--out", c.out, "Output file")->required();
}

void add_grid(CLI::App* cmd, GridOptions& g) {
    cmd->add_option("--g-max", g.g_max, "Largest number of row groups")->capture_default_str();
    cmd->add_option("--m-max", g.m_max, "Largest number of column groups")->capture_default_str();
}

void add_pair(CLI::App* cmd, std::vector<int>& target) {
    cmd->add_option("--target", target, "Target pair g,m")
        ->delimiter(',')
        ->expected(2)
        ->capture_default_str();
}

Json vec(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        j.push_back(v[i]);
    }
    return j;
}

Json mat(const Matrix& m) {
    Json j = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        j.push_back(vec(m.row(r).transpose()));
    }
    return j;
}

Json one_based(const std::vector<int>& labels) {
    Json j = Json::array();
    for (int k : labels) {
        j.push_back(k + 1);
    }
    return j;
}

Json config_json(const std::string& command, const Options& o) {
    const auto& c = o.common;
    Json j;
    j["command"] = command;
    j["a"] = c.a;
    j["b"] = c.b;
    j["seed"] = c.seed;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    j["gibbs_sweeps"] = c.gibbs_sweeps;
    j["restarts"] = c.restarts;
    if (!o.data.empty()) {
        j["data"] = o.data;
    }
    return j;
}

void fit_fields(Json& j, const FitResult& f) {
    j["icl"] = f.icl_value;
    j["free_energy"] = f.free_energy;
    j["iterations"] = f.iterations;
    j["restart_index"] = f.restart_index;
    j["pi"] = vec(f.params.pi);
    j["rho"] = vec(f.params.rho);
    j["alpha"] = mat(f.params.alpha);
    j["z"] = one_based(f.map_part.z);
    j["w"] = one_based(f.map_part.w);
}

Json summary_json(const Summary& s) {
    Json j;
    j["min"] = s.min;
    j["q1"] = s.q1;
    j["median"] = s.median;
    j["mean"] = s.mean;
    j["q3"] = s.q3;
    j["max"] = s.max;
    return j;
}

Json pair_json(GroupPair p) {
    return Json::array({p.g, p.m});
}

void write_json(const std::string& path, const Json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path + " for writing");
    }
    f << j.dump(2) << '\n';
    if (!f) {
        throw IoError("failed writing " + path);
    }
}

GroupPair to_pair(const std::vector<int>& v) {
    if (v.size() != 2 || v[0] < 1 || v[1] < 1) {
        throw InvalidArgument("--target expects two positive integers g,m");
    }
    return {v[0], v[1]};
}

void require_groups(const Options& o) {
    if (o.g < 1 || o.m < 1) {
        throw InvalidArgument("--g and --m must be >= 1");
    }
}

int cmd_simulate(const Options& o, std::ostream& out) {
    if (o.epsilons.size() != 1) {
        throw InvalidArgument("simulate takes exactly one --epsilon");
    }
    const GroupPair t = to_pair(o.target);
    const auto params = staircase_parameters(t.g, t.m, o.epsilons.front());
    const auto sim = simulate_dataset(params, o.n, o.q, o.common.seed);
    save_matrix(sim.data, o.common.out);

    Json j;
    Json cfg = config_json("simulate", o);
    cfg["epsilon"] = o.epsilons.front();
    cfg["n"] = o.n;
    cfg["q"] = o.q;
    cfg["target"] = pair_json(t);
    j["config"] = cfg;
    j["seed"] = o.common.seed;
    j["pi"] = vec(params.pi);
    j["rho"] = vec(params.rho);
    j["alpha"] = mat(params.alpha);
    j["z"] = one_based(sim.truth.z);
    j["w"] = one_based(sim.truth.w);
    write_json(o.common.out + ".truth.json", j);
    out << "wrote " << o.n << "x" << o.q << " matrix to " << o.common.out << '\n';
    return 0;
}

int cmd_fit(const Options& o, std::ostream& out) {
    require_groups(o);
    const auto data = load_matrix(o.data);
    const auto r = fit(data, o.g, o.m, o.common.prior(), o.common.fit_options(), o.common.seed);
    Json j;
    Json cfg = config_json("fit", o);
    cfg["g"] = o.g;
    cfg["m"] = o.m;
    j["config"] = cfg;
    j["seed"] = o.common.seed;
    j["g"] = o.g;
    j["m"] = o.m;
    fit_fields(j, r);
    write_json(o.common.out, j);
    out << "(g,m)=(" << o.g << "," << o.m << ") free_energy=" << r.free_energy << " icl=" << r.icl_value
        << '\n';
    return 0;
}

int cmd_select(const Options& o, std::ostream& out) {
    const auto data = load_matrix(o.data);
    const auto r = select_model(data, o.grid.g_max, o.grid.m_max, o.common.prior(),
                                o.common.fit_options(), o.common.seed);
    Json j;
    Json cfg = config_json("select", o);
    cfg["g_max"] = o.grid.g_max;
    cfg["m_max"] = o.grid.m_max;
    j["config"] = cfg;
    j["seed"] = o.common.seed;
    Json cells = Json::array();
    for (const auto& c : r.grid) {
        Json cell;
        cell["g"] = c.g;
        cell["m"] = c.m;
        cell["icl"] = c.fit.icl_value;
        cell["free_energy"] = c.fit.free_energy;
        cells.push_back(cell);
    }
    j["cells"] = cells;
    j["best_g"] = r.best_pair.g;
    j["best_m"] = r.best_pair.m;
    fit_fields(j, r.best_fit());
    write_json(o.common.out, j);
    out << "selected (g,m)=(" << r.best_pair.g << "," << r.best_pair.m
        << ") icl=" << r.best_fit().icl_value << '\n';
    return 0;
}

int cmd_tune(const Options& o, std::ostream& out) {
    TuningConfig cfg;
    if (!o.epsilons.empty()) {
        cfg.epsilons = o.epsilons;
    }
    cfg.datasets_per_eps = o.datasets;
    cfg.target = to_pair(o.target);
    cfg.g_max = o.grid.g_max;
    cfg.m_max = o.grid.m_max;
    cfg.n = o.n;
    cfg.q = o.q;
    cfg.t_cap = o.t_cap;
    const auto records = tune_restarts(cfg, o.common.prior(), o.common.fit_options(), o.common.seed);

    Json j;
    Json c = config_json("tune-t", o);
    c["epsilons"] = cfg.epsilons;
    c["datasets"] = cfg.datasets_per_eps;
    c["target"] = pair_json(cfg.target);
    c["g_max"] = cfg.g_max;
    c["m_max"] = cfg.m_max;
    c["n"] = cfg.n;
    c["q"] = cfg.q;
    c["t_cap"] = cfg.t_cap;
    j["config"] = c;
    j["seed"] = o.common.seed;
    Json recs = Json::array();
    out << "epsilon  T distribution (T:count, censored at " << cfg.t_cap << ")\n";
    for (const auto& r : records) {
        Json rec;
        rec["epsilon"] = r.epsilon;
        Json ts = Json::array();
        Json censored = Json::array();
        std::map<int, int> dist;
        int n_censored = 0;
        for (const auto& oc : r.outcomes) {
            ts.push_back(oc.t);
            censored.push_back(oc.censored);
            if (oc.censored) {
                ++n_censored;
            } else {
                ++dist[oc.t];
            }
        }
        rec["T"] = ts;
        rec["censored"] = censored;
        Json table = Json::array();
        out << std::setw(7) << r.epsilon << " ";
        for (const auto& [t, count] : dist) {
            table.push_back({{"T", t}, {"count", count}});
            out << " " << t << ":" << count;
        }
        rec["distribution"] = table;
        rec["censored_count"] = n_censored;
        out << "  censored:" << n_censored << '\n';
        recs.push_back(rec);
    }
    j["records"] = recs;
    write_json(o.common.out, j);
    return 0;
}

int cmd_refmodel(const Options& o, std::ostream& out) {
    const auto data = load_matrix(o.data);
    const auto s = reference_model_study(data, o.grid.g_max, o.grid.m_max, o.common.prior(),
                                         o.common.fit_options(), o.runs, o.common.seed);
    Json j;
    Json c = config_json("refmodel", o);
    c["restarts"] = 1;
    c["g_max"] = o.grid.g_max;
    c["m_max"] = o.grid.m_max;
    c["runs"] = o.runs;
    j["config"] = c;
    j["seed"] = o.common.seed;
    j["reference_pair"] = pair_json(s.reference_pair);
    j["best_g"] = s.reference_pair.g;
    j["best_m"] = s.reference_pair.m;
    j["reference_run"] = s.reference_run;
    j["icl"] = s.best_icl[s.reference_run - 1];
    j["occurrences"] = s.occurrence_indices.size();
    j["occurrence_rate"] = static_cast<double>(s.occurrence_indices.size()) / s.runs;
    j["occurrence_indices"] = s.occurrence_indices;
    j["inter_arrivals"] = s.inter_arrivals;
    j["inter_arrival_summary"] = summary_json(s.inter_arrival_summary);
    Json counts = Json::array();
    for (const auto& [pair, count] : s.pair_counts) {
        counts.push_back({{"g", pair.g}, {"m", pair.m}, {"count", count}});
    }
    j["pair_counts"] = counts;
    Json sel = Json::array();
    for (const auto& p : s.selected) {
        sel.push_back(pair_json(p));
    }
    j["selected"] = sel;
    j["run_icl"] = s.best_icl;
    write_json(o.common.out, j);
    out << "reference (g,m)=(" << s.reference_pair.g << "," << s.reference_pair.m << ") selected in "
        << s.occurrence_indices.size() << " of " << s.runs << " runs\n";
    return 0;
}

int cmd_robustness(const Options& o, std::ostream& out) {
    RobustnessConfig cfg;
    if (!o.epsilons.empty()) {
        cfg.epsilons = o.epsilons;
    }
    cfg.datasets_per_eps = o.datasets;
    cfg.sizes = o.sizes;
    cfg.samples_per_size = o.samples_per_size;
    cfg.target = to_pair(o.target);
    cfg.g_max = o.grid.g_max;
    cfg.m_max = o.grid.m_max;
    cfg.n = o.n;
    cfg.q = o.q;
    const auto report =
        robustness_experiment(cfg, o.common.prior(), o.common.fit_options(), o.common.seed);

    Json j;
    Json c = config_json("robustness", o);
    c["epsilons"] = cfg.epsilons;
    c["datasets"] = cfg.datasets_per_eps;
    c["sizes"] = cfg.sizes;
    c["samples_per_size"] = cfg.samples_per_size;
    c["target"] = pair_json(cfg.target);
    c["g_max"] = cfg.g_max;
    c["m_max"] = cfg.m_max;
    c["n"] = cfg.n;
    c["q"] = cfg.q;
    j["config"] = c;
    j["seed"] = o.common.seed;

    Json datasets = Json::array();
    for (const auto& d : report.datasets) {
        datasets.push_back({{"epsilon", d.epsilon},
                            {"dataset", d.dataset + 1},
                            {"attempts", d.attempts},
                            {"simulation_seed", d.simulation_seed},
                            {"pi", d.proportions}});
    }
    j["datasets"] = datasets;

    Json cells = Json::array();
    for (double eps : cfg.epsilons) {
        for (int size : cfg.sizes) {
            Json cell;
            cell["epsilon"] = eps;
            cell["n"] = size;
            Json pairs = Json::array();
            std::set<int> g_hats;
            for (const auto& [pair, count] : report.pair_distribution(eps, size)) {
                pairs.push_back({{"g", pair.g}, {"m", pair.m}, {"count", count}});
                g_hats.insert(pair.g);
            }
            cell["pairs"] = pairs;
            Json rates = Json::array();
            for (int g : g_hats) {
                rates.push_back({{"g_hat", g}, {"rates", report.rates(eps, size, g)}});
            }
            cell["misclassification_rates"] = rates;
            cells.push_back(cell);
            out << "epsilon=" << eps << " n=" << size << ":";
            for (const auto& p : pairs) {
                out << " (" << p["g"] << "," << p["m"] << "):" << p["count"];
            }
            out << '\n';
        }
    }
    j["cells"] = cells;

    Json samples = Json::array();
    for (const auto& s : report.samples) {
        samples.push_back({{"epsilon", s.epsilon},
                           {"dataset", s.dataset + 1},
                           {"n", s.size},
                           {"sample", s.sample + 1},
                           {"best_g", s.selected.g},
                           {"best_m", s.selected.m},
                           {"misclassified", s.match.misclassified},
                           {"rate", s.match.rate}});
    }
    j["samples"] = samples;
    write_json(o.common.out, j);
    return 0;
}

int cmd_reorder(const Options& o, std::ostream& out) {
    require_groups(o);
    const auto data = load_matrix(o.data);
    const auto r = fit(data, o.g, o.m, o.common.prior(), o.common.fit_options(), o.common.seed);
    const std::string summary = o.summary.empty() ? o.common.out + ".summary.txt" : o.summary;
    export_reordered(data, r, o.common.out, summary);
    out << "wrote " << o.common.out << " and " << summary << '\n';
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Binary latent block model: simulation, estimation and ICL model selection", "lbm"};
    app.require_subcommand(1);
    Options o;

    auto* simulate = app.add_subcommand("simulate", "Simulate a staircase dataset");
    add_common(simulate, o.common, false);
    simulate->add_option("--epsilon", o.epsilons, "Staircase difficulty")->required()->delimiter(',');
    simulate->add_option("--n", o.n, "Rows")->capture_default_str();
    simulate->add_option("--q", o.q, "Columns")->capture_default_str();
    add_pair(simulate, o.target);

    auto* fit_cmd = app.add_subcommand("fit", "Fit one (g,m) model");
    add_common(fit_cmd, o.common, true);
    fit_cmd->add_option("--data", o.data, "CSV of 0/1 values")->required();
    fit_cmd->add_option("--g", o.g, "Row groups")->required();
    fit_cmd->add_option("--m", o.m, "Column groups")->required();

    auto* select = app.add_subcommand("select", "ICL model selection over a (g,m) grid");
    add_common(select, o.common, true);
    add_grid(select, o.grid);
    select->add_option("--data", o.data, "CSV of 0/1 values")->required();

    auto* tune = app.add_subcommand("tune-t", "Restarts needed to select the target pair");
    add_common(tune, o.common, false);
    add_grid(tune, o.grid);
    tune->add_option("--epsilon", o.epsilons, "Staircase difficulties")->delimiter(',');
    tune->add_option("--datasets", o.datasets, "Datasets per epsilon")->capture_default_str();
    tune->add_option("--t-cap", o.t_cap, "Largest T tried")->capture_default_str();
    tune->add_option("--n", o.n, "Rows")->capture_default_str();
    tune->add_option("--q", o.q, "Columns")->capture_default_str();
    add_pair(tune, o.target);

    auto* ref = app.add_subcommand("refmodel", "Reference-model study over repeated selections");
    add_common(ref, o.common, false);
    add_grid(ref, o.grid);
    ref->add_option("--data", o.data, "CSV of 0/1 values")->required();
    ref->add_option("--runs", o.runs, "Number of single-restart selections (K)")->capture_default_str();

    auto* robust = app.add_subcommand("robustness", "Stability of the selection under subsampling");
    add_common(robust, o.common, true);
    add_grid(robust, o.grid);
    robust->add_option("--epsilon", o.epsilons, "Staircase difficulties")->delimiter(',');
    robust->add_option("--datasets", o.datasets, "Accepted datasets per epsilon")->capture_default_str();
    robust->add_option("--sizes", o.sizes, "Subsample sizes")->delimiter(',')->capture_default_str();
    robust->add_option("--samples-per-size", o.samples_per_size, "Subsamples per size")
        ->capture_default_str();
    robust->add_option("--n", o.n, "Rows")->capture_default_str();
    robust->add_option("--q", o.q, "Columns")->capture_default_str();
    add_pair(robust, o.target);

    auto* reorder_cmd = app.add_subcommand("reorder", "Export the block-reordered matrix and summary");
    add_common(reorder_cmd, o.common, true);
    reorder_cmd->add_option("--data", o.data, "CSV of 0/1 values")->required();
    reorder_cmd->add_option("--g", o.g, "Row groups")->required();
    reorder_cmd->add_option("--m", o.m, "Column groups")->required();
    reorder_cmd->add_option("--summary", o.summary, "Block summary path (default <out>.summary.txt)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) {
        rev.pop_back(); // program name
    }
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (o.common.threads < 1) {
            throw InvalidArgument("--threads must be >= 1");
        }
        if (*simulate) {
            return cmd_simulate(o, out);
        }
        if (*fit_cmd) {
            return cmd_fit(o, out);
        }
        if (*select) {
            return cmd_select(o, out);
        }
        if (*tune) {
            return cmd_tune(o, out);
        }
        if (*ref) {
            return cmd_refmodel(o, out);
        }
        if (*robust) {
            return cmd_robustness(o, out);
        }
        if (*reorder_cmd) {
            return cmd_reorder(o, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace lbm::cli
