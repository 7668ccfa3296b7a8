#include "lbm/model.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "lbm/errors.hpp"

namespace lbm {
namespace {

void check_probability_vector(const Vector& v, const char* name) {
    if (v.size() < 1) {
        throw InvalidArgument(std::string(name) + " must have at least one entry");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
            throw InvalidArgument(std::string(name) + " has a negative or non-finite entry");
        }
    }
    if (std::abs(v.sum() - 1.0) > 1e-12) {
        std::ostringstream os;
        os << name << " sums to " << v.sum() << ", expected 1";
        throw InvalidArgument(os.str());
    }
}

int draw_label(Rng& rng, const Vector& probs) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    const auto last = static_cast<int>(probs.size()) - 1;
    for (int k = 0; k < last; ++k) {
        acc += probs[k];
        if (u < acc) {
            return k;
        }
    }
    return last;
}

} // namespace

BinaryMatrix::BinaryMatrix(Matrix cells) : cells_(std::move(cells)) {
    if (cells_.rows() < 1 || cells_.cols() < 1) {
        throw InvalidArgument("binary matrix must have at least one row and one column");
    }
    for (Eigen::Index i = 0; i < cells_.rows(); ++i) {
        for (Eigen::Index j = 0; j < cells_.cols(); ++j) {
            const double v = cells_(i, j);
            if (v != 0.0 && v != 1.0) {
                std::ostringstream os;
                os << "cell (" << i + 1 << "," << j + 1 << ") is " << v << ", expected 0 or 1";
                throw InvalidArgument(os.str());
            }
        }
    }
}

BinaryMatrix BinaryMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty() || rows.front().empty()) {
        throw InvalidArgument("binary matrix must have at least one row and one column");
    }
    Matrix cells(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            throw InvalidArgument("ragged rows in binary matrix");
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return BinaryMatrix(std::move(cells));
}

std::int64_t BinaryMatrix::ones() const {
    return static_cast<std::int64_t>(cells_.sum());
}

BinaryMatrix BinaryMatrix::select_rows(const std::vector<int>& indices) const {
    if (indices.empty()) {
        throw InvalidArgument("row selection must not be empty");
    }
    Matrix out(static_cast<Eigen::Index>(indices.size()), cells_.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] < 0 || indices[r] >= cells_.rows()) {
            throw InvalidArgument("row index out of range");
        }
        out.row(static_cast<Eigen::Index>(r)) = cells_.row(indices[r]);
    }
    return BinaryMatrix(std::move(out));
}

void LbmParameters::validate() const {
    check_probability_vector(pi, "pi");
    check_probability_vector(rho, "rho");
    if (alpha.rows() != pi.size() || alpha.cols() != rho.size()) {
        throw InvalidArgument("alpha must be g x m");
    }
    for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
        for (Eigen::Index l = 0; l < alpha.cols(); ++l) {
            if (!(alpha(k, l) >= 0.0 && alpha(k, l) <= 1.0)) {
                throw InvalidArgument("alpha entries must lie in [0,1]");
            }
        }
    }
}

void CoPartition::validate() const {
    if (g < 1 || m < 1) {
        throw InvalidArgument("group counts must be >= 1");
    }
    for (int k : z) {
        if (k < 0 || k >= g) {
            throw InvalidArgument("row label outside 1.." + std::to_string(g));
        }
    }
    for (int l : w) {
        if (l < 0 || l >= m) {
            throw InvalidArgument("column label outside 1.." + std::to_string(m));
        }
    }
}

void Prior::validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw InvalidArgument("prior hyperparameters a and b must be positive");
    }
}

LbmParameters staircase_parameters(int g, int m, double epsilon) {
    if (g < 1 || m < 1) {
        throw InvalidArgument("staircase parameters need g >= 1 and m >= 1");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw InvalidArgument("epsilon must lie in (0,1)");
    }
    LbmParameters p;
    p.pi = Vector::Constant(g, 1.0 / g);
    p.rho = Vector::Constant(m, 1.0 / m);
    p.alpha.resize(g, m);
    for (int k = 0; k < g; ++k) {
        for (int l = 0; l < m; ++l) {
            p.alpha(k, l) = k >= l ? epsilon : 1.0 - epsilon;
        }
    }
    return p;
}

SimulatedData simulate_dataset(const LbmParameters& params, int n, int q, Seed seed) {
    if (n < 1 || q < 1) {
        throw InvalidArgument("simulated dataset needs n >= 1 and q >= 1");
    }
    params.validate();
    Rng rng(seed);
    CoPartition part;
    part.g = params.g();
    part.m = params.m();
    part.z.resize(n);
    part.w.resize(q);
    for (int& k : part.z) {
        k = draw_label(rng, params.pi);
    }
    for (int& l : part.w) {
        l = draw_label(rng, params.rho);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix cells(n, q);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) {
            cells(i, j) = unif(rng) < params.alpha(part.z[i], part.w[j]) ? 1.0 : 0.0;
        }
    }
    return {BinaryMatrix(std::move(cells)), std::move(part)};
}

BlockCounts block_counts(const BinaryMatrix& data, const CoPartition& part) {
    if (static_cast<Eigen::Index>(part.z.size()) != data.rows() ||
        static_cast<Eigen::Index>(part.w.size()) != data.cols()) {
        throw InvalidArgument("partition lengths do not match the data dimensions");
    }
    part.validate();
    BlockCounts c;
    c.ones = CountMatrix::Zero(part.g, part.m);
    c.zeros = CountMatrix::Zero(part.g, part.m);
    c.row_sizes.assign(part.g, 0);
    c.col_sizes.assign(part.m, 0);
    for (int k : part.z) {
        ++c.row_sizes[k];
    }
    for (int l : part.w) {
        ++c.col_sizes[l];
    }
    // ones per (row, column group), then fold rows into row groups
    const auto n = data.rows();
    const auto q = data.cols();
    CountMatrix row_ones = CountMatrix::Zero(n, part.m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < q; ++j) {
            row_ones(i, part.w[j]) += data(i, j);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        c.ones.row(part.z[i]) += row_ones.row(i);
    }
    for (int k = 0; k < part.g; ++k) {
        for (int l = 0; l < part.m; ++l) {
            c.zeros(k, l) = c.row_sizes[k] * c.col_sizes[l] - c.ones(k, l);
        }
    }
    return c;
}

double log_gamma(double x) {
    return boost::math::lgamma(x);
}

double icl(const BlockCounts& counts, const Prior& prior) {
    prior.validate();
    const double a = prior.a;
    const double b = prior.b;
    const auto g = static_cast<double>(counts.row_sizes.size());
    const auto m = static_cast<double>(counts.col_sizes.size());
    double n = 0.0;
    double q = 0.0;
    for (auto s : counts.row_sizes) {
        n += static_cast<double>(s);
    }
    for (auto s : counts.col_sizes) {
        q += static_cast<double>(s);
    }

    double value = log_gamma(g * a) + log_gamma(m * a) - (m + g) * log_gamma(a) +
                   m * g * (log_gamma(2.0 * b) - 2.0 * log_gamma(b)) - log_gamma(n + g * a) -
                   log_gamma(q + m * a);
    for (auto s : counts.row_sizes) {
        value += log_gamma(static_cast<double>(s) + a);
    }
    for (auto s : counts.col_sizes) {
        value += log_gamma(static_cast<double>(s) + a);
    }
    for (std::size_t k = 0; k < counts.row_sizes.size(); ++k) {
        for (std::size_t l = 0; l < counts.col_sizes.size(); ++l) {
            const auto kk = static_cast<Eigen::Index>(k);
            const auto ll = static_cast<Eigen::Index>(l);
            const double block =
                static_cast<double>(counts.row_sizes[k]) * static_cast<double>(counts.col_sizes[l]);
            value += log_gamma(static_cast<double>(counts.ones(kk, ll)) + b) +
                     log_gamma(static_cast<double>(counts.zeros(kk, ll)) + b) -
                     log_gamma(block + 2.0 * b);
        }
    }
    return value;
}

double icl(const BinaryMatrix& data, const CoPartition& part, int g, int m, const Prior& prior) {
    if (part.g != g || part.m != m) {
        throw InvalidArgument("partition group counts do not match (g, m)");
    }
    return icl(block_counts(data, part), prior);
}

} // namespace lbm
