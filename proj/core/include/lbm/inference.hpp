#pragma once

#include <vector>

#include "lbm/model.hpp"
#include "lbm/random.hpp"

namespace lbm {

/// Row responsibilities tau (n x g) and column responsibilities nu (q x m);
/// every row of each is a probability vector.
struct VariationalState {
    Matrix tau;
    Matrix nu;

    /// One-hot responsibilities of a hard partition.
    static VariationalState from_partition(const CoPartition& part);
};

struct FitResult {
    LbmParameters params;
    VariationalState state;
    CoPartition map_part;
    double free_energy = 0.0;
    double icl_value = 0.0;
    int iterations = 0;
    int restart_index = 0;
};

/// Estimation knobs shared by fit(), select_model() and the experiment drivers.
struct FitOptions {
    int restarts = 1;
    int gibbs_sweeps = 300;
    int max_iter = 500;
    double tol = 1e-6; // on |dF| / |F|
    int threads = 1;

    void validate() const;
};

struct GibbsResult {
    LbmParameters params;
    CoPartition part;
};

/// Gibbs sampler used to initialize V-Bayes. Starts from a uniform random
/// partition, draws (pi, rho, alpha) from their conjugate posteriors, then runs
/// `sweeps` sweeps of: all z_i | w, pi, alpha; all w_j | z, rho, alpha;
/// pi, rho | z, w; alpha | z, w. Returns the state after the last sweep.
GibbsResult gibbs_init(const BinaryMatrix& data, int g, int m, const Prior& prior, int sweeps,
                       Seed seed);

struct VbUpdate {
    VariationalState state;
    LbmParameters params;
};

/// One V-Bayes iteration: tau given (nu, params), then nu given (tau, params),
/// then pi, rho, alpha at their conjugate posterior modes. `iteration` is only
/// used to label a NumericalFailure.
VbUpdate vbayes_step(const BinaryMatrix& data, const VariationalState& state,
                     const LbmParameters& params, const Prior& prior, int iteration = 0);

/// Variational objective including the log-prior densities of pi, rho, alpha.
double free_energy(const BinaryMatrix& data, const VariationalState& state,
                   const LbmParameters& params, const Prior& prior);

/// Arg-max label per row of tau and of nu (first maximum on ties).
CoPartition map_partition(const VariationalState& state);

struct ChainResult {
    FitResult fit;
    std::vector<double> free_energy_trace; // F after initialization, then after each step
};

/// Seed of restart chain `restart_index` under a fit() master seed.
Seed chain_seed(Seed seed, int restart_index);

/// A single chain: gibbs_init followed by V-Bayes until the relative change of
/// the free energy drops below options.tol or options.max_iter steps.
ChainResult run_chain(const BinaryMatrix& data, int g, int m, const Prior& prior,
                      const FitOptions& options, Seed seed, int restart_index);

/// Runs options.restarts independent chains and keeps the one with the largest
/// final free energy (first one on ties). Result is independent of threads.
FitResult fit(const BinaryMatrix& data, int g, int m, const Prior& prior, const FitOptions& options,
              Seed seed);

} // namespace lbm
