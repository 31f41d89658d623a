#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "keratoflow/csv.hpp"
#include "keratoflow/error.hpp"
#include "keratoflow/matrix.hpp"
#include "keratoflow/random.hpp"

using namespace keratoflow;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(42, 1), d(42, 2);
  EXPECT_NE(c.next_u64(), d.next_u64());
}

TEST(Rng, UniformStaysInUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BelowCoversRangeWithoutBias) {
  Rng rng(3);
  std::array<int, 7> counts{};
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, draws / 7, 400);  // ~4.5 sd
  EXPECT_EQ(rng.below(1), 0u);
  EXPECT_EQ(rng.below(0), 0u);
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Matrix, ConstructionAndAccess) {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_EQ(m.shape_string(), "2x3");
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), ShapeError);
}

TEST(Matrix, SelectRowsKeepsRequestedOrder) {
  Matrix m{{1, 1}, {2, 2}, {3, 3}};
  const std::vector<std::size_t> idx{2, 0};
  const Matrix s = m.select_rows(idx);
  EXPECT_EQ(s, (Matrix{{3, 3}, {1, 1}}));
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(m.select_rows(bad), ShapeError);
}

TEST(Csv, ParsesQuotesBomAndCrlf) {
  std::istringstream in("\xEF\xBB\xBF" "a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\r\n1,\r\n");
  const auto t = parse_csv(in, "mem");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x, y");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_EQ(t.column("zzz"), std::string::npos);
}

TEST(Csv, RejectsRaggedRows) {
  std::istringstream in("a,b\n1,2,3\n");
  EXPECT_THROW(parse_csv(in, "mem"), ValidationError);
}

TEST(Csv, EscapeRoundTrips) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  std::istringstream in("v\n" + csv_escape("q\"uote,") + "\n");
  EXPECT_EQ(parse_csv(in, "mem").rows[0][0], "q\"uote,");
}

TEST(Csv, DoublesRoundTripExactly) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal(0.0, 1e3);
    ASSERT_EQ(parse_double(format_double(v), "v"), v);
  }
  EXPECT_EQ(format_double(0.25), "0.25");
  EXPECT_THROW(parse_double("1.5x", "field"), ValidationError);
  EXPECT_THROW(parse_double("", "field"), ValidationError);
  EXPECT_THROW(parse_long("2.5", "field"), ValidationError);
}

TEST(Csv, MissingFileIsIoError) {
  EXPECT_THROW(read_text_file("/nonexistent/keratoflow/file.csv"), IoError);
}
