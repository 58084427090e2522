// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "semio/io.hpp"
#include "semio/rng.hpp"
#include "support/temp_dir.hpp"

using namespace semio;

TEST(Io, JsonlSkipsBlankLinesAndReportsLineNumbers) {
  const auto recs = parse_jsonl("{\"a\":1}\n\n{\"a\":2}\r\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1]["a"], 2);
  try {
    parse_jsonl("{}\n{oops\n", "x");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Io, AppenderAppends) {
  semio::testing::TempDir dir;
  const auto p = dir / "a.jsonl";
  {
    JsonlAppender a(p);
    a.append({{"k", 1}});
  }
  {
    JsonlAppender a(p);
    a.append({{"k", 2}});
  }
  const auto recs = read_jsonl(p);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0]["k"], 1);
  EXPECT_EQ(recs[1]["k"], 2);
}

TEST(Io, ChecksummedRoundTripAndTamper) {
  const auto text = make_checksummed("labels", "body\n");
  EXPECT_EQ(verify_checksummed(text, "labels", "t"), "body\n");
  EXPECT_THROW(verify_checksummed(text, "faces", "t"), FixtureError);
  auto bad = text;
  bad.back() = 'X';
  EXPECT_THROW(verify_checksummed(bad, "labels", "t"), FixtureError);
  EXPECT_THROW(verify_checksummed("no header", "labels", "t"), FixtureError);
}

TEST(Io, Base64RoundTripsAllLengths) {
  std::string s;
  for (int n = 0; n < 40; ++n) {
    EXPECT_EQ(base64_decode(base64_encode(s)), s);
    s += static_cast<char>(n * 37);
  }
  EXPECT_EQ(base64_encode("Man"), "TWFu");
  EXPECT_EQ(base64_encode("Ma"), "TWE=");
  EXPECT_THROW(base64_decode("@@@@"), ProtocolError);
}

TEST(Io, ThreeDecimalFormatting) {
  EXPECT_EQ(fixed3(0.7727), "0.773");
  EXPECT_EQ(fixed3(0.0), "0.000");
  EXPECT_DOUBLE_EQ(round_to(0.77272, 3), 0.773);
}

TEST(Rng, SeededAndReproducible) {
  Rng a(5), b(5), c(6);
  std::vector<int> va(20), vb(20), vc(20);
  std::iota(va.begin(), va.end(), 0);
  vb = va;
  vc = va;
  a.shuffle(va);
  b.shuffle(vb);
  c.shuffle(vc);
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_EQ(std::set<int>(va.begin(), va.end()).size(), 20u);
}

TEST(Rng, BelowStaysInRange) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Rng, KeyHashIsOrderSensitive) {
  EXPECT_EQ(KeyHash(1).add("a").add("b").value(), KeyHash(1).add("a").add("b").value());
  EXPECT_NE(KeyHash(1).add("a").add("b").value(), KeyHash(1).add("b").add("a").value());
  EXPECT_NE(KeyHash(1).add("ab").value(), KeyHash(1).add("a").add("b").value());
  const double u = KeyHash(3).add(std::int64_t{4}).unit();
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}
