// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "semio/backends.hpp"
#include "semio/fixtures.hpp"
#include "support/suite.hpp"
#include "support/temp_dir.hpp"

using namespace semio;
using semio::testing::TempDir;

namespace {

FixtureSpec base(const std::string& id, double duration = 8) {
  FixtureSpec s;
  s.clip_id = id;
  s.patient_id = "P";
  s.duration_s = duration;
  s.fps = {10, 1};
  return s;
}

}  // namespace

TEST(Fixture, TonicOnlyClipLabelsTonicOnly) {
  TempDir dir;
  auto s = base("T", 12);
  s.planted["tonic"] = {0, 0, 2, 9};
  const auto cat = Catalog::load_default();
  const auto files = generate_fixture(s, cat, dir.path());
  const auto labels = oracle_labels(files.video);
  EXPECT_EQ(labels.size(), 20u);
  for (const auto& [f, v] : labels) EXPECT_EQ(v, f == "tonic") << f;
  const auto side = read_label_sidecar(files.labels);
  EXPECT_TRUE(side.active_in("tonic", 0, 3));
  EXPECT_FALSE(side.active_in("tonic", 9, 12));
  const auto info = probe_video(files.video);
  EXPECT_EQ(info.frame_count, 120);
  EXPECT_EQ(info.width, 160);
}

TEST(Fixture, UtteranceReachesRecognizer) {
  TempDir dir;
  auto s = base("U");
  s.planted["ictal_vocalization"] = {1, 1, 0, 8};
  s.utterance = "help me";
  const auto files = generate_fixture(s, Catalog::load_default(), dir.path());
  MockRecognizer asr;
  EXPECT_EQ(asr.transcribe(read_wav(files.audio), {files.video, -1}), "help me");
  EXPECT_EQ(read_utterance(files.utterance), "help me");
}

TEST(Fixture, GenerationIsByteIdentical) {
  TempDir a, b;
  auto s = base("D");
  s.planted["clonic"] = default_motion("clonic");
  s.planted["clonic"].onset_s = 1;
  s.planted["clonic"].offset_s = 7;
  s.seed = 3;
  const auto cat = Catalog::load_default();
  const auto fa = generate_fixture(s, cat, a.path());
  const auto fb = generate_fixture(s, cat, b.path());
  for (auto m : {&FixtureFiles::video, &FixtureFiles::audio, &FixtureFiles::labels, &FixtureFiles::faces,
                 &FixtureFiles::skeleton, &FixtureFiles::utterance})
    EXPECT_EQ(read_file(fa.*m), read_file(fb.*m)) << (fa.*m).filename();
}

TEST(Fixture, PlantedMotionChangesPixels) {
  TempDir dir;
  auto s = base("M");
  s.planted["clonic"] = default_motion("clonic");
  s.planted["clonic"].onset_s = 4;
  s.planted["clonic"].offset_s = 8;
  const auto files = generate_fixture(s, Catalog::load_default(), dir.path());
  VideoReader r(files.video);
  EXPECT_EQ(r.frame(0), r.frame(10));   // rest pose is static
  EXPECT_NE(r.frame(40), r.frame(41));  // oscillation
}

TEST(Fixture, TamperedOrMissingSidecarFails) {
  TempDir dir;
  const auto files = generate_fixture(base("X"), Catalog::load_default(), dir.path());
  auto text = read_file(files.labels);
  text[text.size() - 3] = text[text.size() - 3] == 'e' ? 'a' : 'e';
  write_file(files.labels, text);
  EXPECT_THROW(read_label_sidecar(files.labels), FixtureError);
  EXPECT_THROW(oracle_labels(files.video), FixtureError);
  fs::remove(files.faces);
  EXPECT_THROW(read_face_track(files.faces), FixtureError);
  EXPECT_THROW(oracle_labels(dir / "nothing.svid"), FixtureError);
}

TEST(Fixture, NoPlantedFeaturesMeansAllFalse) {
  TempDir dir;
  const auto files = generate_fixture(base("Z"), Catalog::load_default(), dir.path());
  for (const auto& [f, v] : oracle_labels(files.video)) EXPECT_FALSE(v) << f;
  EXPECT_EQ(read_utterance(files.utterance), "");
}

TEST(Fixture, SkeletonsAndFacesAreValid) {
  TempDir dir;
  auto s = base("S");
  s.planted["head_turning"] = default_motion("head_turning");
  s.planted["head_turning"].onset_s = 0;
  s.planted["head_turning"].offset_s = 8;
  const auto files = generate_fixture(s, Catalog::load_default(), dir.path());
  const auto skels = read_skeleton_track(files.skeleton);
  const auto faces = read_face_track(files.faces);
  ASSERT_EQ(skels.size(), 80u);
  ASSERT_EQ(faces.size(), 80u);
  for (const auto& k : skels) {
    EXPECT_NO_THROW(k.validate());
    EXPECT_EQ(k.keypoints.size(), static_cast<std::size_t>(kJointCount));
    for (const auto& p : k.keypoints) {
      EXPECT_GE(p.x, 0);
      EXPECT_LT(p.x, 160);
      EXPECT_GE(p.y, 0);
      EXPECT_LT(p.y, 120);
    }
  }
  for (const auto& f : faces) {
    ASSERT_TRUE(f);
    EXPECT_TRUE(clamp_box(*f, 160, 120));
  }
}

TEST(Fixture, InvalidSpecsAreGenerationErrors) {
  TempDir dir;
  const auto cat = Catalog::load_default();
  auto s = base("E");
  s.planted["head_turning"] = {0, 500, 0, 4};  // swings the head off screen
  EXPECT_THROW(generate_fixture(s, cat, dir.path()), GenerationError);
  s = base("E");
  s.planted["made_up"] = {1, 1, 0, 4};
  EXPECT_THROW(generate_fixture(s, cat, dir.path()), GenerationError);
  s = base("E");
  s.planted["tonic"] = {0, 0, 0, 4};  // shorter than the minimum
  EXPECT_THROW(generate_fixture(s, cat, dir.path()), GenerationError);
  s = base("E");
  s.planted["clonic"] = {3, 5, 6, 9};  // past the end
  EXPECT_THROW(generate_fixture(s, cat, dir.path()), GenerationError);
  s = base("E");
  s.width = 32;
  EXPECT_THROW(generate_fixture(s, cat, dir.path()), GenerationError);
}

TEST(Suite, SpecsCoverEveryFeatureBothWays) {
  const auto cat = Catalog::load_default();
  const auto specs = default_suite_specs(cat);
  ASSERT_EQ(specs.size(), 12u);
  std::set<std::string> patients;
  for (const auto& s : specs) patients.insert(s.patient_id);
  EXPECT_EQ(patients.size(), 6u);
  for (const auto& id : cat.ids()) {
    int pos = 0;
    for (const auto& s : specs) pos += s.planted.count(id) > 0;
    EXPECT_GE(pos, 1) << id;
    EXPECT_LT(pos, 12) << id;
  }
  EXPECT_THROW(default_suite_specs(cat, {1, 1, {30, 1}, 7}), GenerationError);
}

TEST(Suite, GeneratedManifestLoadsWithOracleLabels) {
  const auto cat = Catalog::load_default();
  const auto man = semio::testing::load_suite_manifest(cat);
  ASSERT_EQ(man.items.size(), 12u);
  for (const auto& id : cat.ids()) {
    int pos = 0, neg = 0;
    for (const auto& it : man.items) (man.truth.at(it.video_id).at(id) ? pos : neg) += 1;
    EXPECT_GE(pos, 1) << id;
    EXPECT_GE(neg, 1) << id;
  }
  for (const auto& it : man.items) {
    EXPECT_EQ(it.fps, (Rational{30, 1}));
    EXPECT_GE(it.duration_s, 60.0);
    EXPECT_TRUE(fs::exists(it.audio_path));
  }
}
