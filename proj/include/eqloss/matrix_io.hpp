#pragma once

// Matrix CSV format: one sample per line, comma-separated decimal values,
// optional leading header line starting with '#'. Blank lines are ignored.

#include <iosfwd>
#include <string>

#include "eqloss/matrix.hpp"

namespace eqloss {

/// Parses a matrix CSV. Throws DimensionError for ragged or empty input and
/// std::invalid_argument (with line number) for unparseable fields.
Matrix read_matrix_csv(std::istream& in);

/// Reads from a file path, or from stdin when path is "-".
Matrix read_matrix_csv_file(const std::string& path);

/// Writes the shortest representation of each value that round-trips exactly.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& header = {});
void write_matrix_csv_file(const std::string& path, const Matrix& m,
                           const std::string& header = {});

}  // namespace eqloss
