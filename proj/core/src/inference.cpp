#include "lbm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "lbm/errors.hpp"
#include "lbm/parallel.hpp"

namespace lbm {
namespace {

constexpr double kAlphaFloor = 1e-12;

double clamp_alpha(double a) {
    return std::clamp(a, kAlphaFloor, 1.0 - kAlphaFloor);
}

// x * log(y) with 0 * log(0) = 0
double xlogy(double x, double y) {
    return x == 0.0 ? 0.0 : x * std::log(y);
}

struct AlphaLogs {
    Matrix log_alpha;      // log alpha_kl, clamped
    Matrix log_not_alpha;  // log (1 - alpha_kl), clamped
};

AlphaLogs alpha_logs(const Matrix& alpha) {
    AlphaLogs out{Matrix(alpha.rows(), alpha.cols()), Matrix(alpha.rows(), alpha.cols())};
    for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
        for (Eigen::Index l = 0; l < alpha.cols(); ++l) {
            const double c = clamp_alpha(alpha(k, l));
            out.log_alpha(k, l) = std::log(c);
            out.log_not_alpha(k, l) = std::log1p(-c);
        }
    }
    return out;
}

Vector log_vector(const Vector& v) {
    return v.array().log().matrix();
}

// Row-wise softmax in place, with max subtraction.
bool softmax_rows(Matrix& logits) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        if (!std::isfinite(mx)) {
            return false;
        }
        logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
        const double s = logits.row(i).sum();
        logits.row(i) /= s;
    }
    return true;
}

int sample_categorical(Rng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& logits) {
    const double mx = logits.maxCoeff();
    Eigen::RowVectorXd p = (logits.array() - mx).exp().matrix();
    const double total = p.sum();
    std::uniform_real_distribution<double> unif(0.0, total);
    const double u = unif(rng);
    double acc = 0.0;
    const auto last = static_cast<int>(p.size()) - 1;
    for (int k = 0; k < last; ++k) {
        acc += p[k];
        if (u < acc) {
            return k;
        }
    }
    return last;
}

Vector sample_dirichlet(Rng& rng, const std::vector<std::int64_t>& counts, double a) {
    Vector out(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t k = 0; k < counts.size(); ++k) {
        std::gamma_distribution<double> gam(static_cast<double>(counts[k]) + a, 1.0);
        out[static_cast<Eigen::Index>(k)] = gam(rng);
    }
    const double s = out.sum();
    if (!(s > 0.0)) {
        return Vector::Constant(out.size(), 1.0 / static_cast<double>(out.size()));
    }
    return out / s;
}

LbmParameters sample_posterior(Rng& rng, const BinaryMatrix& data, const CoPartition& part,
                               const Prior& prior) {
    const BlockCounts c = block_counts(data, part);
    LbmParameters p;
    p.pi = sample_dirichlet(rng, c.row_sizes, prior.a);
    p.rho = sample_dirichlet(rng, c.col_sizes, prior.a);
    p.alpha.resize(part.g, part.m);
    for (int k = 0; k < part.g; ++k) {
        for (int l = 0; l < part.m; ++l) {
            p.alpha(k, l) = sample_beta(rng, static_cast<double>(c.ones(k, l)) + prior.b,
                                        static_cast<double>(c.zeros(k, l)) + prior.b);
        }
    }
    return p;
}

Matrix one_hot(const std::vector<int>& labels, int groups) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), groups);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return out;
}

// Mode of the Dirichlet posterior with pseudo-counts a - 1; for a < 1 the
// negative entries are floored at zero and the rest renormalized.
Vector proportion_mode(const Vector& mass, double a) {
    Vector out = (mass.array() + (a - 1.0)).max(0.0).matrix();
    const double s = out.sum();
    if (!(s > 0.0)) {
        return Vector::Constant(mass.size(), 1.0 / static_cast<double>(mass.size()));
    }
    return out / s;
}

[[noreturn]] void numerical_failure(const char* what, int iteration) {
    std::ostringstream os;
    os << "non-finite " << what << " in V-Bayes iteration " << iteration;
    throw NumericalFailure(os.str());
}

void check_dimensions(const BinaryMatrix& data, const VariationalState& state,
                      const LbmParameters& params) {
    if (state.tau.rows() != data.rows() || state.nu.rows() != data.cols() ||
        state.tau.cols() != params.g() || state.nu.cols() != params.m() ||
        params.alpha.rows() != params.g() || params.alpha.cols() != params.m()) {
        throw InvalidArgument("variational state, parameters and data dimensions disagree");
    }
}

} // namespace

VariationalState VariationalState::from_partition(const CoPartition& part) {
    return {one_hot(part.z, part.g), one_hot(part.w, part.m)};
}

void FitOptions::validate() const {
    if (restarts < 1) {
        throw InvalidArgument("restarts must be >= 1");
    }
    if (gibbs_sweeps < 1) {
        throw InvalidArgument("gibbs sweeps must be >= 1");
    }
    if (max_iter < 1) {
        throw InvalidArgument("max_iter must be >= 1");
    }
    if (!(tol > 0.0)) {
        throw InvalidArgument("tol must be positive");
    }
}

GibbsResult gibbs_init(const BinaryMatrix& data, int g, int m, const Prior& prior, int sweeps,
                       Seed seed) {
    if (g < 1 || m < 1) {
        throw InvalidArgument("group counts must be >= 1");
    }
    if (sweeps < 1) {
        throw InvalidArgument("gibbs sweeps must be >= 1");
    }
    prior.validate();

    const auto n = data.rows();
    const auto q = data.cols();
    const Matrix& y = data.values();
    Rng rng(seed);

    CoPartition part;
    part.g = g;
    part.m = m;
    part.z.resize(static_cast<std::size_t>(n));
    part.w.resize(static_cast<std::size_t>(q));
    {
        std::uniform_int_distribution<int> zdist(0, g - 1);
        std::uniform_int_distribution<int> wdist(0, m - 1);
        for (int& k : part.z) {
            k = zdist(rng);
        }
        for (int& l : part.w) {
            l = wdist(rng);
        }
    }
    LbmParameters params = sample_posterior(rng, data, part, prior);

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        const AlphaLogs logs = alpha_logs(params.alpha);
        const Matrix diff = logs.log_alpha - logs.log_not_alpha;

        // z_i | w, pi, alpha
        {
            const Matrix col_onehot = one_hot(part.w, m);
            const Matrix ones_per_group = y * col_onehot;                       // n x m
            const Eigen::RowVectorXd col_sizes = col_onehot.colwise().sum();    // 1 x m
            Matrix logits = ones_per_group * diff.transpose();                  // n x g
            const Eigen::RowVectorXd base =
                (col_sizes * logs.log_not_alpha.transpose()) + log_vector(params.pi).transpose();
            logits.rowwise() += base;
            for (Eigen::Index i = 0; i < n; ++i) {
                part.z[static_cast<std::size_t>(i)] = sample_categorical(rng, logits.row(i));
            }
        }
        // w_j | z, rho, alpha
        {
            const Matrix row_onehot = one_hot(part.z, g);
            const Matrix ones_per_group = y.transpose() * row_onehot;           // q x g
            const Eigen::RowVectorXd row_sizes = row_onehot.colwise().sum();    // 1 x g
            Matrix logits = ones_per_group * diff;                              // q x m
            const Eigen::RowVectorXd base =
                (row_sizes * logs.log_not_alpha) + log_vector(params.rho).transpose();
            logits.rowwise() += base;
            for (Eigen::Index j = 0; j < q; ++j) {
                part.w[static_cast<std::size_t>(j)] = sample_categorical(rng, logits.row(j));
            }
        }
        params = sample_posterior(rng, data, part, prior);
    }
    return {std::move(params), std::move(part)};
}

VbUpdate vbayes_step(const BinaryMatrix& data, const VariationalState& state,
                     const LbmParameters& params, const Prior& prior, int iteration) {
    check_dimensions(data, state, params);
    const Matrix& y = data.values();
    const int g = params.g();
    const int m = params.m();

    const AlphaLogs logs = alpha_logs(params.alpha);
    const Matrix diff = logs.log_alpha - logs.log_not_alpha;

    VbUpdate out;

    // tau_ik ∝ pi_k exp(sum_jl nu_jl [y_ij log a_kl + (1 - y_ij) log(1 - a_kl)])
    {
        Matrix logits = (y * state.nu) * diff.transpose();
        const Eigen::RowVectorXd base = (state.nu.colwise().sum() * logs.log_not_alpha.transpose()) +
                                        log_vector(params.pi).transpose();
        logits.rowwise() += base;
        if (!softmax_rows(logits)) {
            numerical_failure("row responsibilities", iteration);
        }
        out.state.tau = std::move(logits);
    }
    {
        Matrix logits = (y.transpose() * out.state.tau) * diff;
        const Eigen::RowVectorXd base = (out.state.tau.colwise().sum() * logs.log_not_alpha) +
                                        log_vector(params.rho).transpose();
        logits.rowwise() += base;
        if (!softmax_rows(logits)) {
            numerical_failure("column responsibilities", iteration);
        }
        out.state.nu = std::move(logits);
    }

    const Vector row_mass = out.state.tau.colwise().sum().transpose();
    const Vector col_mass = out.state.nu.colwise().sum().transpose();
    out.params.pi = proportion_mode(row_mass, prior.a);
    out.params.rho = proportion_mode(col_mass, prior.a);

    const Matrix ones_mass = out.state.tau.transpose() * y * out.state.nu; // g x m
    out.params.alpha.resize(g, m);
    const double shift = prior.b - 1.0;
    for (int k = 0; k < g; ++k) {
        for (int l = 0; l < m; ++l) {
            const double denom = row_mass[k] * col_mass[l] + 2.0 * shift;
            // an empty block under a flat prior has no preferred value
            out.params.alpha(k, l) =
                denom > 0.0 ? std::clamp((ones_mass(k, l) + shift) / denom, 0.0, 1.0) : 0.5;
        }
    }

    if (!out.params.pi.allFinite() || !out.params.rho.allFinite() ||
        !out.params.alpha.allFinite()) {
        numerical_failure("parameter update", iteration);
    }
    return out;
}

double free_energy(const BinaryMatrix& data, const VariationalState& state,
                   const LbmParameters& params, const Prior& prior) {
    check_dimensions(data, state, params);
    const Matrix& y = data.values();
    const int g = params.g();
    const int m = params.m();
    const AlphaLogs logs = alpha_logs(params.alpha);

    const Vector row_mass = state.tau.colwise().sum().transpose();
    const Vector col_mass = state.nu.colwise().sum().transpose();
    const Matrix ones_mass = state.tau.transpose() * y * state.nu;

    double f = 0.0;
    for (int k = 0; k < g; ++k) {
        f += xlogy(row_mass[k], params.pi[k]);
    }
    for (int l = 0; l < m; ++l) {
        f += xlogy(col_mass[l], params.rho[l]);
    }
    for (int k = 0; k < g; ++k) {
        for (int l = 0; l < m; ++l) {
            const double ones = ones_mass(k, l);
            const double zeros = row_mass[k] * col_mass[l] - ones;
            f += ones * logs.log_alpha(k, l) + zeros * logs.log_not_alpha(k, l);
        }
    }
    // entropies
    for (Eigen::Index i = 0; i < state.tau.size(); ++i) {
        f -= xlogy(state.tau.data()[i], state.tau.data()[i]);
    }
    for (Eigen::Index i = 0; i < state.nu.size(); ++i) {
        f -= xlogy(state.nu.data()[i], state.nu.data()[i]);
    }
    // log-prior densities
    const double a = prior.a;
    const double b = prior.b;
    f += log_gamma(g * a) - g * log_gamma(a) + log_gamma(m * a) - m * log_gamma(a);
    for (int k = 0; k < g; ++k) {
        f += xlogy(a - 1.0, params.pi[k]);
    }
    for (int l = 0; l < m; ++l) {
        f += xlogy(a - 1.0, params.rho[l]);
    }
    f += g * m * (log_gamma(2.0 * b) - 2.0 * log_gamma(b));
    if (b != 1.0) {
        f += (b - 1.0) * (logs.log_alpha.sum() + logs.log_not_alpha.sum());
    }
    return f;
}

CoPartition map_partition(const VariationalState& state) {
    CoPartition part;
    part.g = static_cast<int>(state.tau.cols());
    part.m = static_cast<int>(state.nu.cols());
    part.z.resize(static_cast<std::size_t>(state.tau.rows()));
    part.w.resize(static_cast<std::size_t>(state.nu.rows()));
    for (Eigen::Index i = 0; i < state.tau.rows(); ++i) {
        Eigen::Index k = 0;
        state.tau.row(i).maxCoeff(&k);
        part.z[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }
    for (Eigen::Index j = 0; j < state.nu.rows(); ++j) {
        Eigen::Index l = 0;
        state.nu.row(j).maxCoeff(&l);
        part.w[static_cast<std::size_t>(j)] = static_cast<int>(l);
    }
    return part;
}

Seed chain_seed(Seed seed, int restart_index) {
    return derive_seed(seed, {static_cast<std::uint64_t>(restart_index)});
}

ChainResult run_chain(const BinaryMatrix& data, int g, int m, const Prior& prior,
                      const FitOptions& options, Seed seed, int restart_index) {
    options.validate();
    GibbsResult init = gibbs_init(data, g, m, prior, options.gibbs_sweeps, seed);

    VariationalState state = VariationalState::from_partition(init.part);
    LbmParameters params = std::move(init.params);
    double f = free_energy(data, state, params, prior);

    ChainResult out;
    out.free_energy_trace.reserve(static_cast<std::size_t>(options.max_iter) + 1);
    out.free_energy_trace.push_back(f);

    int iter = 0;
    while (iter < options.max_iter) {
        ++iter;
        VbUpdate next = vbayes_step(data, state, params, prior, iter);
        const double f_next = free_energy(data, next.state, next.params, prior);
        if (!std::isfinite(f_next)) {
            numerical_failure("free energy", iter);
        }
        state = std::move(next.state);
        params = std::move(next.params);
        out.free_energy_trace.push_back(f_next);
        const double change = std::abs(f_next - f);
        f = f_next;
        if (change < options.tol * std::abs(f_next)) {
            break;
        }
    }

    out.fit.map_part = map_partition(state);
    out.fit.icl_value = icl(data, out.fit.map_part, g, m, prior);
    out.fit.params = std::move(params);
    out.fit.state = std::move(state);
    out.fit.free_energy = f;
    out.fit.iterations = iter;
    out.fit.restart_index = restart_index;
    return out;
}

FitResult fit(const BinaryMatrix& data, int g, int m, const Prior& prior, const FitOptions& options,
              Seed seed) {
    options.validate();
    prior.validate();
    if (g < 1 || m < 1) {
        throw InvalidArgument("group counts must be >= 1");
    }

    const auto restarts = static_cast<std::size_t>(options.restarts);
    std::vector<std::optional<FitResult>> chains(restarts);
    std::vector<std::string> failures(restarts);
    parallel_for(restarts, options.threads, [&](std::size_t r) {
        const int idx = static_cast<int>(r);
        try {
            chains[r] = run_chain(data, g, m, prior, options, chain_seed(seed, idx), idx).fit;
        } catch (const NumericalFailure& e) {
            failures[r] = e.what();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (chains[r] && (!best || chains[r]->free_energy > chains[*best]->free_energy)) {
            best = r;
        }
    }
    if (!best) {
        std::ostringstream os;
        os << "all " << restarts << " chains failed for (g,m)=(" << g << "," << m << ")";
        for (std::size_t r = 0; r < restarts; ++r) {
            os << "; chain " << r << ": " << failures[r];
        }
        throw NumericalFailure(os.str());
    }
    return std::move(*chains[*best]);
}

} // namespace lbm
