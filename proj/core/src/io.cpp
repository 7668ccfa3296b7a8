#include "lbm/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string_view>

#include "lbm/errors.hpp"

namespace lbm {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                               : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

bool is_numeric(std::string_view token) {
    if (token.empty()) {
        return false;
    }
    if (token.front() == '+') {
        token.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    return ec == std::errc() && ptr == token.data() + token.size();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace

BinaryMatrix parse_matrix(std::istream& in) {
    std::vector<std::vector<int>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first_content = true;
    std::size_t blank_run_start = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            if (blank_run_start == 0) {
                blank_run_start = line_no;
            }
            continue;
        }
        if (blank_run_start != 0 && !rows.empty()) {
            throw ParseError("blank line inside the data", blank_run_start, 1);
        }
        blank_run_start = 0;
        const auto tokens = split(line);
        if (first_content) {
            first_content = false;
            if (std::any_of(tokens.begin(), tokens.end(),
                            [](std::string_view t) { return !is_numeric(t); })) {
                continue; // header
            }
        }
        if (rows.empty()) {
            width = tokens.size();
        } else if (tokens.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " values, found " +
                                 std::to_string(tokens.size()),
                             line_no, std::min(tokens.size(), width) + 1);
        }
        std::vector<int> row;
        row.reserve(tokens.size());
        for (std::size_t c = 0; c < tokens.size(); ++c) {
            if (tokens[c] == "0") {
                row.push_back(0);
            } else if (tokens[c] == "1") {
                row.push_back(1);
            } else {
                throw ParseError("non-binary value '" + std::string(tokens[c]) + "'", line_no, c + 1);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParseError("no data rows", std::max<std::size_t>(line_no, 1), 1);
    }
    return BinaryMatrix::from_rows(rows);
}

BinaryMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return parse_matrix(in);
}

void write_matrix(std::ostream& out, const BinaryMatrix& data) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << data(i, j);
        }
        out << '\n';
    }
}

void save_matrix(const BinaryMatrix& data, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_matrix(out, data);
    check_written(out, path);
}

std::vector<int> group_order(const std::vector<int>& labels) {
    std::vector<int> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
    });
    return order;
}

BinaryMatrix reorder(const BinaryMatrix& data, const CoPartition& part) {
    if (static_cast<Eigen::Index>(part.z.size()) != data.rows() ||
        static_cast<Eigen::Index>(part.w.size()) != data.cols()) {
        throw InvalidArgument("partition does not match the data dimensions");
    }
    const auto rows = group_order(part.z);
    const auto cols = group_order(part.w);
    Matrix out(data.rows(), data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                data(rows[i], cols[j]);
        }
    }
    return BinaryMatrix(std::move(out));
}

namespace {

void write_order(std::ostream& out, const char* name, const std::vector<int>& labels, int groups) {
    const auto order = group_order(labels);
    out << name << "_order";
    for (int i : order) {
        out << ' ' << i + 1;
    }
    out << '\n' << name << "_boundaries 0";
    std::vector<int> sizes(static_cast<std::size_t>(groups), 0);
    for (int k : labels) {
        ++sizes[static_cast<std::size_t>(k)];
    }
    int acc = 0;
    for (int s : sizes) {
        acc += s;
        out << ' ' << acc;
    }
    out << '\n';
}

} // namespace

void write_block_summary(std::ostream& out, const FitResult& fit) {
    const auto& p = fit.params;
    const int g = p.g();
    const int m = p.m();
    out << "# rho across the top, pi down the left, alpha in the body\n";
    out << "g " << g << "\nm " << m << '\n';
    write_order(out, "row", fit.map_part.z, g);
    write_order(out, "col", fit.map_part.w, m);
    out << '\n' << std::fixed << std::setprecision(4);
    out << std::setw(8) << "" << " |";
    for (int l = 0; l < m; ++l) {
        out << ' ' << std::setw(8) << p.rho[l];
    }
    out << '\n' << std::string(9, '-') << '+' << std::string(static_cast<std::size_t>(9 * m), '-')
        << '\n';
    for (int k = 0; k < g; ++k) {
        out << std::setw(8) << p.pi[k] << " |";
        for (int l = 0; l < m; ++l) {
            out << ' ' << std::setw(8) << p.alpha(k, l);
        }
        out << '\n';
    }
}

void export_reordered(const BinaryMatrix& data, const FitResult& fit,
                      const std::filesystem::path& matrix_path,
                      const std::filesystem::path& summary_path) {
    const BinaryMatrix sorted = reorder(data, fit.map_part);
    const auto cols = group_order(fit.map_part.w);
    {
        auto out = open_output(matrix_path);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out << (j > 0 ? "," : "") << 'j' << cols[j] + 1 << ':'
                << fit.map_part.w[static_cast<std::size_t>(cols[j])] + 1;
        }
        out << '\n';
        write_matrix(out, sorted);
        check_written(out, matrix_path);
    }
    auto out = open_output(summary_path);
    write_block_summary(out, fit);
    check_written(out, summary_path);
}

} // namespace lbm
