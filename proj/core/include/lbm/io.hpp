#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lbm/inference.hpp"

namespace lbm {

/// Parses comma-separated 0/1 rows. A first row containing any non-numeric
/// token is treated as a header and skipped. LF and CRLF endings are accepted.
/// Errors carry the 1-based line and column of the offending cell.
BinaryMatrix parse_matrix(std::istream& in);
BinaryMatrix load_matrix(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const BinaryMatrix& data);
void save_matrix(const BinaryMatrix& data, const std::filesystem::path& path);

/// Indices sorted by label, original order kept within a label.
std::vector<int> group_order(const std::vector<int>& labels);

/// Matrix with rows ordered by MAP row group and columns by MAP column group.
BinaryMatrix reorder(const BinaryMatrix& data, const CoPartition& part);

/// Table layout: rho across the top, pi down the left, alpha in the body.
void write_block_summary(std::ostream& out, const FitResult& fit);

/// Writes the reordered matrix as CSV (the header row names each column as
/// j<original index>:<group>, both 1-based) and the block summary, which also
/// records the row/column orders and group boundaries.
void export_reordered(const BinaryMatrix& data, const FitResult& fit,
                      const std::filesystem::path& matrix_path,
                      const std::filesystem::path& summary_path);

} // namespace lbm
