// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "semio/detection.hpp"
#include "semio/evaluate.hpp"
#include "support/suite.hpp"
#include "support/temp_dir.hpp"

using namespace semio;
using namespace std::chrono_literals;
using semio::testing::TempDir;

namespace {

BackendConfig mocks(double noise = 0, std::uint64_t seed = 0) {
  auto c = BackendConfig::all_mocks();
  c.retry.initial_delay = 0ms;
  c.retry.max_attempts = 2;
  c.mock.noise_rate = noise;
  c.mock.seed = seed;
  return c;
}

struct Run {
  DetectionResult result;
  std::int64_t calls = 0;
};

Run run(const Manifest& man, const Catalog& cat, const DetectionConfig& cfg, const BackendConfig& bc,
        const fs::path& root) {
  auto backends = make_backends(bc);
  Run r;
  r.result = run_detection(man, cat, cfg, backends, OutputLayout{root});
  r.calls = backends.stats->total();
  return r;
}

}  // namespace

class DetectionRun : public ::testing::Test {
 protected:
  void SetUp() override { man = semio::testing::load_suite_manifest(cat); }
  Catalog cat = Catalog::load_default();
  Manifest man;
};

TEST_F(DetectionRun, NoiseFreeVerdictsEqualPlantedLabels) {
  for (auto variant : {Variant::enhanced, Variant::raw}) {
    TempDir out;
    DetectionConfig cfg;
    cfg.variant = variant;
    const auto r = run(man, cat, cfg, mocks(), out.path());
    ASSERT_EQ(r.result.verdicts.size(), man.items.size() * cat.size());
    EXPECT_EQ(r.result.incomplete(), 0u);
    EXPECT_TRUE(r.result.failures.empty());
    for (const auto& v : r.result.verdicts)
      EXPECT_EQ(v.present, man.truth.at(v.video_id).at(v.feature_id))
          << to_string(variant) << " " << v.video_id << "/" << v.feature_id;
    for (const auto& [f, m] : evaluate_verdicts(r.result.verdicts, man, cat.ids()))
      EXPECT_DOUBLE_EQ(m.metrics.f1, 1.0) << f;
  }
}

TEST_F(DetectionRun, PositiveVerdictsCarryJustifications) {
  TempDir out;
  const auto r = run(man, cat, {}, mocks(), out.path());
  for (const auto& v : r.result.verdicts) {
    if (!v.present) continue;
    EXPECT_FALSE(v.supporting_segments.empty());
    EXPECT_FALSE(v.representative_justification.empty());
  }
}

TEST_F(DetectionRun, SecondRunMakesNoBackendCalls) {
  TempDir out;
  const auto first = run(man, cat, {}, mocks(), out.path());
  EXPECT_GT(first.calls, 0);
  const auto before = read_file(OutputLayout{out.path()}.verdicts(Variant::enhanced));
  const auto second = run(man, cat, {}, mocks(), out.path());
  EXPECT_EQ(second.calls, 0);
  EXPECT_EQ(second.result.stats.executed, 0u);
  EXPECT_EQ(second.result.stats.skipped, first.result.stats.tasks);
  EXPECT_EQ(read_file(OutputLayout{out.path()}.verdicts(Variant::enhanced)), before);
  EXPECT_EQ(read_detections(OutputLayout{out.path()}.detections(Variant::enhanced)).size(), first.result.stats.tasks);
}

TEST_F(DetectionRun, DownVisionBackendLeavesVideoFeaturesIncomplete) {
  TempDir out;
  auto bc = mocks();
  bc.roles[BackendRole::vlm].id = "mock:down";
  DetectionConfig cfg;
  cfg.variant = Variant::raw;
  const auto r = run(man, cat, cfg, bc, out.path());
  for (const auto& v : r.result.verdicts) {
    const bool audio = cat.feature(v.feature_id).category == Category::audio;
    EXPECT_EQ(v.complete, audio) << v.video_id << "/" << v.feature_id;
  }
  EXPECT_EQ(r.result.incomplete(), man.items.size() * 18);
  EXPECT_EQ(read_jsonl(OutputLayout{out.path()}.failures(Variant::raw)).size(), r.result.failures.size());
  EXPECT_EQ(r.result.stats.failed, r.result.failures.size());

  // Once the backend is back, only the failed tasks are retried.
  const auto again = run(man, cat, cfg, mocks(), out.path());
  EXPECT_EQ(again.result.incomplete(), 0u);
  EXPECT_EQ(again.result.stats.executed, r.result.stats.failed);
}

TEST_F(DetectionRun, NoisyRunsDegradeAndAreDeterministic) {
  TempDir a, b;
  const auto ra = run(man, cat, {}, mocks(0.2, 11), a.path());
  const auto rb = run(man, cat, {}, mocks(0.2, 11), b.path());
  EXPECT_EQ(ra.result.verdicts, rb.result.verdicts);
  const OutputLayout la{a.path()}, lb{b.path()};
  EXPECT_EQ(read_file(la.detections(Variant::enhanced)), read_file(lb.detections(Variant::enhanced)));
  EXPECT_EQ(read_file(la.verdicts(Variant::enhanced)), read_file(lb.verdicts(Variant::enhanced)));
  const auto rep = evaluate_verdicts(ra.result.verdicts, man, cat.ids());
  double sum = 0;
  for (const auto& [_, m] : rep) sum += m.metrics.f1;
  EXPECT_LT(sum / static_cast<double>(rep.size()), 1.0);
}

TEST_F(DetectionRun, WorkerCountDoesNotChangeOutputs) {
  TempDir a, b;
  DetectionConfig one, many;
  one.workers = 1;
  many.workers = 6;
  run(man, cat, one, mocks(0.1, 2), a.path());
  run(man, cat, many, mocks(0.1, 2), b.path());
  EXPECT_EQ(read_file(OutputLayout{a.path()}.detections(Variant::enhanced)),
            read_file(OutputLayout{b.path()}.detections(Variant::enhanced)));
}

TEST_F(DetectionRun, StagedEnhancementMatchesDirectRun) {
  TempDir staged, direct;
  DetectionConfig cfg;
  {
    auto backends = make_backends(mocks());
    EXPECT_TRUE(run_enhancement(man, cat, cfg, backends, OutputLayout{staged.path()}).empty());
  }
  const auto s = run(man, cat, cfg, mocks(), staged.path());
  run(man, cat, cfg, mocks(), direct.path());
  EXPECT_EQ(s.calls, s.result.stats.tasks);  // only inference is left, one call per task
  const OutputLayout ls{staged.path()}, ld{direct.path()};
  EXPECT_EQ(read_file(ls.verdicts(Variant::enhanced)), read_file(ld.verdicts(Variant::enhanced)));
  EXPECT_EQ(read_file(ls.segment_plan()), read_file(ld.segment_plan()));
  const auto& v0 = man.items.front().video_id;
  EXPECT_EQ(read_file(ls.face_crop(v0, 0)), read_file(ld.face_crop(v0, 0)));
  EXPECT_EQ(read_file(ls.transcript(v0)), read_file(ld.transcript(v0)));
}

TEST_F(DetectionRun, EnhancedArtifactsExist) {
  TempDir out;
  run(man, cat, {}, mocks(), out.path());
  const OutputLayout l{out.path()};
  const auto& m = man.items.front();
  const auto crop = probe_video(l.face_crop(m.video_id, 0));
  EXPECT_LT(crop.width, m.width);
  const auto overlay = probe_video(l.pose_overlay(m.video_id, 0));
  EXPECT_EQ(overlay.width, m.width);
  EXPECT_EQ(overlay.frame_count, 60);  // 30 s at 2 fps
  EXPECT_TRUE(fs::exists(l.denoised_audio(m.video_id)));
}

TEST_F(DetectionRun, StylePenaltyShowsOnlyOnFacialRows) {
  TempDir out;
  auto bc = mocks();
  bc.mock.penalties.push_back({PromptStyle::simple, Category::facial, {}});
  std::map<PromptStyle, SystemReport> reports;
  for (auto style : {PromptStyle::expert, PromptStyle::simple}) {
    DetectionConfig cfg;
    cfg.style = style;
    reports[style] = evaluate_verdicts(run(man, cat, cfg, bc, out.path()).result.verdicts, man, cat.ids());
  }
  const auto cmp = compare_prompt_styles(reports);
  for (const auto& row : cmp.rows) {
    const double d = row.delta.at(PromptStyle::simple);
    if (cat.feature(row.feature_id).category == Category::facial) EXPECT_LT(d, 0) << row.feature_id;
    else EXPECT_EQ(d, 0) << row.feature_id;
  }
  // Both styles now live side by side in one store.
  EXPECT_EQ(read_verdicts(OutputLayout{out.path()}.verdicts(Variant::enhanced)).size(), 2 * man.items.size() * cat.size());
}

TEST_F(DetectionRun, TranscriptFlagControlsAudioPrompt) {
  TempDir out;
  DetectionConfig cfg;
  cfg.variant = Variant::raw;
  cfg.transcript_features = std::set<std::string>{"verbal_responsiveness"};
  EXPECT_TRUE(cfg.wants_transcript(cat.feature("verbal_responsiveness")));
  EXPECT_FALSE(cfg.wants_transcript(cat.feature("ictal_vocalization")));
  EXPECT_FALSE(cfg.wants_transcript(cat.feature("tonic")));
  const auto r = run(man, cat, cfg, mocks(), out.path());
  EXPECT_EQ(r.result.incomplete(), 0u);
}

TEST(Plumbing, OrderedWriterEmitsInSequence) {
  TempDir dir;
  {
    JsonlAppender sink(dir / "o.jsonl");
    OrderedWriter w(sink);
    w.put(2, json{{"i", 2}});
    w.put(1, std::nullopt);
    w.put(3, json{{"i", 3}});
    w.put(0, json{{"i", 0}});
  }
  const auto recs = read_jsonl(dir / "o.jsonl");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0]["i"], 0);
  EXPECT_EQ(recs[1]["i"], 2);
  EXPECT_EQ(recs[2]["i"], 3);
}

TEST(Plumbing, MemoComputesOncePerKey) {
  Memo<int, int> memo;
  std::atomic<int> calls{0};
  parallel_for(64, 8, [&](std::size_t i) {
    const auto v = memo.get(static_cast<int>(i % 4), [&] {
      ++calls;
      std::this_thread::sleep_for(1ms);
      return static_cast<int>(i % 4) * 10;
    });
    EXPECT_EQ(*v, static_cast<int>(i % 4) * 10);
  });
  EXPECT_EQ(calls.load(), 4);
  Memo<int, int> failing;
  auto boom = []() -> int { throw IoError("x"); };
  EXPECT_THROW(failing.get(1, boom), IoError);
  EXPECT_THROW(failing.get(1, [] { return 1; }), IoError);  // memoized failure
}

TEST(Plumbing, ParallelForVisitsEachIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(hits.size(), 5, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  int serial = 0;
  parallel_for(3, 1, [&](std::size_t) { ++serial; });
  EXPECT_EQ(serial, 3);
}

TEST(Plumbing, ExpectedSegmentsForAudioIsWholeRecording) {
  const auto cat = Catalog::load_default();
  const auto plans = plan_video("v", 90, {30, 1});
  EXPECT_EQ(expected_segments(cat.feature("ictal_vocalization"), plans), std::vector<int>{0});
  EXPECT_EQ(expected_segments(cat.feature("tonic"), plans), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_THROW(parse_variant("fancy"), ConfigError);
}
