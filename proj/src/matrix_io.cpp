#include "eqloss/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "eqloss/errors.hpp"

namespace eqloss {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_field(std::string_view field, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << "line " << line << ": cannot parse '" << field << "' as a number";
    throw std::invalid_argument(msg.str());
  }
  return value;
}

}  // namespace

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    if (first_content && content.front() == '#') {
      first_content = false;
      continue;
    }
    first_content = false;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = content.find(',', start);
      row.push_back(parse_field(content.substr(start, comma - start), line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": " << row.size() << " fields, expected "
          << rows.front().size();
      throw DimensionError(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DimensionError("matrix CSV contains no rows");
  return Matrix::from_rows(rows);
}

Matrix read_matrix_csv_file(const std::string& path) {
  if (path == "-") return read_matrix_csv(std::cin);
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open matrix file '" + path + "'");
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& header) {
  if (!header.empty()) out << "# " << header << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      const double x = m(i, j) == 0.0 ? 0.0 : m(i, j);  // no "-0"
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  write_matrix_csv(out, m, header);
}

}  // namespace eqloss
