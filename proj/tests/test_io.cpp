#include <gtest/gtest.h>

#include <charconv>
#include <cmath>

#include "zk/errors.hpp"
#include "zk/io.hpp"

using namespace zk;

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.66032}) {
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v) << s;
  }
}

TEST(KeyValueConfig, ParsesCommentsAndOverrides) {
  KeyValueConfig kv({"dr", "rmax", "name"}, {{"rmax", "20"}});
  kv.parse("# header\n dr = 0.05  # trailing\n\nname = run one\n");
  EXPECT_DOUBLE_EQ(kv.get_double("dr"), 0.05);
  EXPECT_EQ(kv.get_int("rmax"), 20);
  EXPECT_EQ(kv.get_string("name"), "run one");
  kv.set("rmax=15");
  EXPECT_EQ(kv.get_int("rmax"), 15);
}

TEST(KeyValueConfig, RejectsBadInput) {
  KeyValueConfig kv({"dr"}, {});
  EXPECT_THROW(kv.parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(kv.parse("dr 0.1\n"), ConfigError);
  EXPECT_THROW(kv.set("dr="), ConfigError);
  EXPECT_THROW(kv.get_double("dr"), ConfigError);
  kv.set("dr=abc");
  EXPECT_THROW(kv.get_double("dr"), ConfigError);
  kv.set("dr=1.5");
  EXPECT_THROW(kv.get_int("dr"), ConfigError);
}

TEST(DoubleList, Splits) {
  const auto v = parse_double_list("0.05, 0.02,0.01");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[1], 0.02);
  EXPECT_THROW(parse_double_list("1,x"), ConfigError);
}

TEST(Csv, HeaderAndRows) {
  CsvWriter w({"a", "b"});
  w.row({1.0, 0.5});
  EXPECT_EQ(w.str(), "a,b\n1,0.5\n");
  EXPECT_THROW(w.row({1.0}), std::exception);
}

TEST(ExitCodes, MapExceptionTypes) {
  EXPECT_EQ(exit_code_for(NumericalFailure("x")), 2);
  EXPECT_EQ(exit_code_for(ConfigError("x")), 3);
  EXPECT_EQ(exit_code_for(DomainError("x")), 3);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 2);
}
