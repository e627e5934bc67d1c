#include "eqloss/matrix_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "eqloss/errors.hpp"
#include "eqloss/random.hpp"

namespace eqloss {
namespace {

TEST(MatrixCsvTest, ParsesHeaderAndBlankLines) {
  std::istringstream in("# P3\n1,0\n\n1,0\n0,1\n0,1\n");
  const Matrix m = read_matrix_csv(in);
  EXPECT_EQ(m.rows(), 4u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_EQ(m(2, 1), 1.0);
}

TEST(MatrixCsvTest, ToleratesSpacesAndCrlf) {
  std::istringstream in("0.25, 0.75\r\n 1 ,0\r\n");
  const Matrix m = read_matrix_csv(in);
  EXPECT_EQ(m(0, 1), 0.75);
  EXPECT_EQ(m(1, 0), 1.0);
}

TEST(MatrixCsvTest, RaggedInputNamesTheLine) {
  std::istringstream in("1,0\n0.5,0.25,0.25\n");
  try {
    read_matrix_csv(in);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(MatrixCsvTest, BadNumberNamesTheLine) {
  std::istringstream in("# h\n1,0\nabc,1\n");
  try {
    read_matrix_csv(in);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(MatrixCsvTest, EmptyInput) {
  std::istringstream in("# nothing\n\n");
  EXPECT_THROW(read_matrix_csv(in), DimensionError);
}

TEST(MatrixCsvTest, RoundTripsBitExactly) {
  Rng rng(3);
  Matrix m(7, 4);
  for (double& x : m.data()) x = rng.uniform() * std::pow(10.0, rng.uniform(-20, 5));
  m(0, 0) = 0.1;
  m(0, 1) = 1.0 / 3.0;
  std::ostringstream out;
  write_matrix_csv(out, m, "header text");
  EXPECT_EQ(out.str().rfind("# header text\n", 0), 0u);
  std::istringstream in(out.str());
  EXPECT_EQ(read_matrix_csv(in), m);
}

TEST(MatrixCsvTest, NegativeZeroPrintedAsZero) {
  Matrix m(1, 2);
  m(0, 0) = -0.0;
  m(0, 1) = 1.0;
  std::ostringstream out;
  write_matrix_csv(out, m);
  EXPECT_EQ(out.str(), "0,1\n");
}

TEST(MatrixCsvTest, MissingFile) {
  EXPECT_THROW(read_matrix_csv_file("/nonexistent/eqloss/p.csv"), std::invalid_argument);
}

}  // namespace
}  // namespace eqloss
