// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "semio/faithfulness.hpp"
#include "semio/rng.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace semio;
using semio::testing::TempDir;

namespace {

struct Table {
  std::vector<VideoVerdict> verdicts;
  GroundTruth truth;
};

// tp/tn/fp/fn videos for feature "f".
Table table(int tp, int tn, int fp = 0, int fn = 0) {
  Table t;
  int v = 0;
  auto add = [&](bool present, bool actual, int n) {
    for (int i = 0; i < n; ++i, ++v) {
      const auto id = "v" + std::to_string(1000 + v);
      t.verdicts.push_back({id, "f", PromptStyle::expert, present, present ? std::vector<int>{0} : std::vector<int>{},
                            "because " + id});
      t.truth[id]["f"] = actual;
    }
  };
  add(true, true, tp);
  add(false, false, tn);
  add(true, false, fp);
  add(false, true, fn);
  return t;
}

FaithfulnessRecord rec(const std::string& sample, const std::string& reviewer, int score,
                       const std::string& feature = "f") {
  return {sample, feature, reviewer, score, "2026-01-01T00:00:00Z"};
}

}  // namespace

TEST(Select, TenPositivesFortyNegatives) {
  const auto t = table(10, 40, 3, 2);
  const auto set = select_review_set(t.verdicts, t.truth, {"f"}, 7);
  EXPECT_EQ(set.samples.size(), 20u);
  EXPECT_EQ(set.features.at("f").true_positives, 10u);
  EXPECT_EQ(set.features.at("f").true_negatives, 10u);
  EXPECT_FALSE(set.features.at("f").shortfall);
  EXPECT_EQ(semio::testing::check_review_set(set, t.verdicts, t.truth, {"f"}), "");
}

TEST(Select, ShortfallWhenNegativesRunOut) {
  const auto t = table(5, 3);
  const auto set = select_review_set(t.verdicts, t.truth, {"f"}, 7);
  EXPECT_EQ(set.samples.size(), 8u);
  EXPECT_TRUE(set.features.at("f").shortfall);
}

TEST(Select, NoPositivesGivesEmptyFlaggedSet) {
  const auto t = table(0, 12, 2, 2);
  const auto set = select_review_set(t.verdicts, t.truth, {"f"}, 7);
  EXPECT_TRUE(set.samples.empty());
  EXPECT_TRUE(set.features.at("f").empty);
}

TEST(Select, IncompleteVerdictsAreNotEligible) {
  auto t = table(3, 3);
  t.verdicts[0].complete = false;
  const auto set = select_review_set(t.verdicts, t.truth, {"f"}, 7);
  EXPECT_EQ(set.features.at("f").true_positives, 2u);
  EXPECT_EQ(set.find(make_sample_id("f", t.verdicts[0].video_id)), nullptr);
}

TEST(Select, DeterministicPerSeed) {
  const auto t = table(6, 30);
  const auto a = select_review_set(t.verdicts, t.truth, {"f"}, 1);
  EXPECT_EQ(select_review_set(t.verdicts, t.truth, {"f"}, 1).samples, a.samples);
  bool differs = false;
  for (std::uint64_t s = 2; s < 8 && !differs; ++s)
    differs = select_review_set(t.verdicts, t.truth, {"f"}, s).samples != a.samples;
  EXPECT_TRUE(differs);
}

TEST(Select, RandomTablesObeyTheRule) {
  Rng rng(99);
  const std::vector<std::string> features = {"a", "b", "c"};
  for (int c = 0; c < 200; ++c) {
    std::vector<VideoVerdict> verdicts;
    GroundTruth truth;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int v = 0; v < n; ++v) {
      const auto id = "v" + std::to_string(v);
      for (const auto& f : features) {
        const bool present = rng.below(2) == 0;
        truth[id][f] = rng.below(3) == 0;
        VideoVerdict vd{id, f, PromptStyle::expert, present};
        vd.complete = rng.below(10) != 0;
        verdicts.push_back(vd);
      }
    }
    const auto set = select_review_set(verdicts, truth, features, rng.below(1000));
    ASSERT_EQ(semio::testing::check_review_set(set, verdicts, truth, features), "") << "table " << c;
  }
}

TEST(Select, SamplesCarryJustificationAndMediaRef) {
  const auto t = table(1, 1);
  Manifest man;
  for (const auto& v : t.verdicts) {
    MediaItem m;
    m.video_id = v.video_id;
    m.video_path = "/data/" + v.video_id + ".svid";
    man.items.push_back(m);
  }
  const auto set = select_review_set(t.verdicts, t.truth, {"f"}, 1, &man);
  const auto* s = set.find("f:v1000");
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->justification, "because v1000");
  EXPECT_EQ(s->media_ref.clip, "/data/v1000.svid");
  EXPECT_EQ(s->media_ref.segment_index, 0);
  EXPECT_EQ(set.find("f:v1001")->media_ref.segment_index, std::nullopt);
}

TEST(Select, ExportImportRoundTrip) {
  const auto t = table(4, 9);
  const auto set = select_review_set(t.verdicts, t.truth, {"f"}, 3);
  TempDir dir;
  save_review_set(dir / "set.json", set);
  const auto back = load_review_set(dir / "set.json");
  EXPECT_EQ(back.samples, set.samples);
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(back.features.at("f").true_negatives, 4u);
  write_file(dir / "bad.json", "{\"format\": \"other\"}");
  EXPECT_THROW(load_review_set(dir / "bad.json"), ValidationError);
}

TEST(Summary, Examples) {
  auto s = summarize_values({3, 4, 5});
  EXPECT_DOUBLE_EQ(s.proportion_at_least_3, 1.0);
  EXPECT_DOUBLE_EQ(s.median, 4.0);
  EXPECT_DOUBLE_EQ(summarize_values({4, 5}).median, 4.5);
  EXPECT_DOUBLE_EQ(summarize_values({1, 2}).proportion_at_least_3, 0.0);
  s = summarize_values({5, 5, 1});
  EXPECT_EQ(s.histogram, (std::array<std::int64_t, 5>{1, 0, 0, 0, 2}));
}

TEST(Summary, Errors) {
  EXPECT_THROW(summarize_values({}), SummaryError);
  EXPECT_THROW(summarize_values({3, 6}), SummaryError);
  EXPECT_THROW(summarize_values({0}), SummaryError);
  EXPECT_THROW(summarize_scores({rec("s", "r", 3, "a")}, std::string("b")), SummaryError);
}

TEST(Summary, RandomMultisetsMatchBruteForce) {
  Rng rng(123);
  for (int c = 0; c < 1000; ++c) {
    std::vector<int> xs(1 + rng.below(40));
    for (auto& x : xs) x = 1 + static_cast<int>(rng.below(5));
    const auto got = summarize_values(xs);
    const auto want = semio::testing::summary_oracle(xs);
    ASSERT_DOUBLE_EQ(got.median, want.median);
    ASSERT_DOUBLE_EQ(got.proportion_at_least_3, want.proportion_at_least_3);
    ASSERT_EQ(got.histogram, want.histogram);
    ASSERT_EQ(got.n, static_cast<std::int64_t>(xs.size()));
  }
}

TEST(Summary, PerFeatureAndPooled) {
  const std::vector<FaithfulnessRecord> rs = {rec("a:1", "r", 2, "a"), rec("a:2", "r", 4, "a"), rec("b:1", "r", 5, "b")};
  EXPECT_DOUBLE_EQ(summarize_scores(rs, std::string("a")).median, 3.0);
  EXPECT_EQ(summarize_scores(rs).n, 3);
  EXPECT_DOUBLE_EQ(rec("x", "r", 3).correctness(), 0.6);
}

TEST(Store, OverwriteKeepsAuditTrail) {
  TempDir dir;
  const auto path = dir / "scores.jsonl";
  {
    ScoreStore store(path);
    EXPECT_FALSE(store.put(rec("f:1", "alice", 2)));
    EXPECT_FALSE(store.put(rec("f:1", "bob", 3)));
    EXPECT_TRUE(store.put(rec("f:1", "alice", 5)));
    EXPECT_EQ(store.effective().size(), 2u);
    EXPECT_EQ(store.audit_trail().size(), 3u);
    EXPECT_TRUE(store.audit_trail()[2].overwrite);
  }
  ScoreStore reopened(path);
  EXPECT_EQ(reopened.effective().size(), 2u);
  EXPECT_EQ(reopened.audit_trail().size(), 3u);
  EXPECT_TRUE(reopened.scored("f:1", "alice"));
  EXPECT_FALSE(reopened.scored("f:2", "alice"));
  const auto offline = effective_scores_from_file(path);
  ASSERT_EQ(offline.size(), 2u);
  for (const auto& r : offline)
    if (r.reviewer_id == "alice") EXPECT_EQ(r.score, 5);
}

TEST(Store, CorruptScoreInLogRejected) {
  TempDir dir;
  auto j = to_json(rec("f:1", "a", 3));
  j["score"] = 9;
  write_file(dir / "s.jsonl", j.dump() + "\n");
  EXPECT_THROW(ScoreStore(dir / "s.jsonl"), ValidationError);
}

TEST(Service, StatusCodes) {
  const auto t = table(2, 2);
  ScoreStore store;
  ReviewService svc(select_review_set(t.verdicts, t.truth, {"f"}, 1), store, nullptr, [] { return std::string("T"); });
  EXPECT_EQ(svc.next("").status, 400);
  auto n = svc.next("r");
  ASSERT_EQ(n.status, 200);
  EXPECT_EQ(n.body["sample_id"], "f:v1000");  // lowest id first
  EXPECT_FALSE(n.body.contains("outcome"));
  EXPECT_FALSE(n.body.contains("present"));
  EXPECT_EQ(svc.score({{"sample_id", "f:v1000"}, {"reviewer_id", "r"}, {"score", 7}}).status, 422);
  EXPECT_EQ(svc.score({{"sample_id", "f:v1000"}, {"reviewer_id", "r"}, {"score", 2.5}}).status, 422);
  EXPECT_EQ(svc.score({{"sample_id", "f:nope"}, {"reviewer_id", "r"}, {"score", 3}}).status, 404);
  EXPECT_EQ(svc.score({{"sample_id", "f:v1000"}, {"score", 3}}).status, 400);
  EXPECT_EQ(svc.score(json::array()).status, 400);
  auto ok = svc.score({{"sample_id", "f:v1000"}, {"reviewer_id", "r"}, {"score", 3}});
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body["overwrite"], false);
  EXPECT_EQ(svc.score({{"sample_id", "f:v1000"}, {"reviewer_id", "r"}, {"score", 4}}).body["overwrite"], true);
  EXPECT_EQ(svc.next("r").body["progress"]["scored"], 1);
  for (const auto& s : svc.review_set().samples)
    svc.score({{"sample_id", s.sample_id}, {"reviewer_id", "r"}, {"score", 5}});
  EXPECT_EQ(svc.next("r").status, 204);
  EXPECT_EQ(svc.next("other").status, 200);
  const auto sum = svc.summary(std::nullopt);
  EXPECT_EQ(sum.body["n"], 4);
  EXPECT_EQ(sum.body["histogram"]["5"], 4);
  EXPECT_TRUE(svc.summary(std::string("zzz")).body["median"].is_null());
}
