#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "lbm/random.hpp"

namespace lbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// n x q matrix of 0/1 responses (rows are students, columns are items).
/// Cells are stored as doubles so the inference kernels can feed them straight
/// into matrix products; construction guarantees every cell is exactly 0 or 1.
class BinaryMatrix {
  public:
    /// Throws InvalidArgument if the matrix is empty or any cell is not 0/1.
    explicit BinaryMatrix(Matrix cells);

    static BinaryMatrix from_rows(const std::vector<std::vector<int>>& rows);

    Eigen::Index rows() const noexcept { return cells_.rows(); }
    Eigen::Index cols() const noexcept { return cells_.cols(); }
    int operator()(Eigen::Index i, Eigen::Index j) const {
        return cells_(i, j) != 0.0 ? 1 : 0;
    }
    const Matrix& values() const noexcept { return cells_; }

    /// Total number of ones.
    std::int64_t ones() const;

    /// Matrix with the given rows, in order.
    BinaryMatrix select_rows(const std::vector<int>& indices) const;

    friend bool operator==(const BinaryMatrix& a, const BinaryMatrix& b) {
        return a.cells_.rows() == b.cells_.rows() && a.cells_.cols() == b.cells_.cols() &&
               a.cells_ == b.cells_;
    }

  private:
    Matrix cells_;
};

/// Mixing proportions for row groups (pi) and column groups (rho) plus the
/// g x m matrix of block Bernoulli probabilities.
struct LbmParameters {
    Vector pi;
    Vector rho;
    Matrix alpha;

    int g() const noexcept { return static_cast<int>(pi.size()); }
    int m() const noexcept { return static_cast<int>(rho.size()); }

    /// Throws InvalidArgument unless pi/rho are probability vectors (sum 1
    /// within 1e-12) and every alpha lies in [0,1] with matching shape.
    void validate() const;
};

/// Row labels z and column labels w. Labels are 0-based in memory; the I/O
/// layer converts to and from the 1-based external form. Empty groups are
/// allowed.
struct CoPartition {
    std::vector<int> z;
    std::vector<int> w;
    int g = 1;
    int m = 1;

    void validate() const;
    friend bool operator==(const CoPartition&, const CoPartition&) = default;
};

struct BlockCounts {
    CountMatrix ones;  // N1_kl
    CountMatrix zeros; // N0_kl
    std::vector<std::int64_t> row_sizes;
    std::vector<std::int64_t> col_sizes;
};

/// Symmetric Dirichlet(a) prior on pi and rho, Beta(b, b) prior on each alpha.
struct Prior {
    double a = 4.0;
    double b = 1.0;

    void validate() const;
};

/// pi and rho uniform, alpha_kl = epsilon when k >= l and 1 - epsilon otherwise.
LbmParameters staircase_parameters(int g, int m, double epsilon);

struct SimulatedData {
    BinaryMatrix data;
    CoPartition truth;
};

/// Draws labels i.i.d. from pi / rho and cells from Bernoulli(alpha_{z_i, w_j}).
/// The same seed reproduces identical output.
SimulatedData simulate_dataset(const LbmParameters& params, int n, int q, Seed seed);

BlockCounts block_counts(const BinaryMatrix& data, const CoPartition& part);

/// Exact integrated completed likelihood of (data, part) for a (g, m) model,
/// with pi, rho, alpha integrated out against the conjugate priors.
double icl(const BinaryMatrix& data, const CoPartition& part, int g, int m, const Prior& prior);

/// Same criterion evaluated from precomputed block counts.
double icl(const BlockCounts& counts, const Prior& prior);

/// Accurate log-gamma for positive arguments; thread-safe.
double log_gamma(double x);

} // namespace lbm
