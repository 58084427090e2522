// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "semio/enhance.hpp"
#include "semio/fixtures.hpp"
#include "semio/rng.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace semio;
using namespace std::chrono_literals;
using semio::testing::changed_pixels;

namespace {

using OptBox = std::optional<BoundingBox>;

template <typename Impl>
BackendHandle<Impl> handle(std::shared_ptr<Impl> impl, int attempts = 2) {
  BackendHandle<Impl> h;
  h.impl = std::move(impl);
  h.retry.max_attempts = attempts;
  h.retry.initial_delay = 0ms;
  return h;
}

Skeleton two_joints(double conf_a, double conf_b) {
  Skeleton s;
  s.keypoints = {{0, 0, 0, conf_a}, {1, 10, 0, conf_b}};
  s.edges = {{0, 1}};
  return s;
}

}  // namespace

TEST(Smooth, AlternatingInputFollowsRecurrence) {
  std::vector<OptBox> d;
  for (int i = 0; i < 4; ++i) d.push_back(BoundingBox{i % 2 ? 100.0 : 0.0, 0, 10, 10});
  const auto out = smooth_boxes(d, 0.5, 1000, 1000);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_DOUBLE_EQ(out[0].x, 0);
  EXPECT_DOUBLE_EQ(out[1].x, 50);
  EXPECT_DOUBLE_EQ(out[2].x, 25);
  EXPECT_DOUBLE_EQ(out[3].x, 62.5);
}

TEST(Smooth, AlphaOneIsIdentity) {
  std::vector<OptBox> d = {BoundingBox{1, 2, 3, 4}, BoundingBox{9, 8, 7, 6}, BoundingBox{5, 5, 5, 5}};
  const auto out = smooth_boxes(d, 1.0, 100, 100);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(out[i], *d[i]);
}

TEST(Smooth, ConstantIsFixedPoint) {
  const BoundingBox b{12.5, 7, 30, 41};
  std::vector<OptBox> d(25, b);
  for (const auto& o : smooth_boxes(d, 0.3, 200, 200)) EXPECT_EQ(o, b);
}

TEST(Smooth, GapsHoldAndLeadingGapsBackfill) {
  std::vector<OptBox> d = {std::nullopt, std::nullopt, BoundingBox{10, 10, 10, 10}, std::nullopt,
                           BoundingBox{20, 10, 10, 10}};
  const auto out = smooth_boxes(d, 0.5, 100, 100);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(out[0], (BoundingBox{10, 10, 10, 10}));
  EXPECT_EQ(out[1], out[2]);
  EXPECT_EQ(out[3], out[2]);
  EXPECT_DOUBLE_EQ(out[4].x, 15);
}

TEST(Smooth, ErrorsAndClamping) {
  std::vector<OptBox> none(3);
  EXPECT_THROW(smooth_boxes(none, 0.5, 10, 10), EnhancementError);
  std::vector<OptBox> outside = {BoundingBox{500, 500, 10, 10}};
  EXPECT_THROW(smooth_boxes(outside, 0.5, 100, 100), EnhancementError);
  EXPECT_THROW(BoxSmoother(0.0), ParameterError);
  EXPECT_THROW(BoxSmoother(1.5), ParameterError);
  std::vector<OptBox> edge = {BoundingBox{90, -5, 20, 20}};
  const auto c = smooth_boxes(edge, 0.5, 100, 100)[0];
  EXPECT_EQ(c, (BoundingBox{90, 0, 10, 15}));
}

TEST(Smooth, ConvergenceBoundOnRandomCases) {
  Rng rng(21);
  for (int c = 0; c < 100; ++c) {
    const double alpha = 0.01 + 0.99 * rng.unit();
    const BoundingBox b0{rng.unit() * 500, rng.unit() * 500, 1 + rng.unit() * 200, 1 + rng.unit() * 200};
    const BoundingBox d{rng.unit() * 500, rng.unit() * 500, 1 + rng.unit() * 200, 1 + rng.unit() * 200};
    auto dist = [&](const BoundingBox& b) {
      return std::max({std::abs(b.x - d.x), std::abs(b.y - d.y), std::abs(b.w - d.w), std::abs(b.h - d.h)});
    };
    BoxSmoother sm(alpha, b0);
    const double e0 = dist(b0);
    for (int t = 1; t <= 60; ++t) {
      const double et = dist(*sm.update(d));
      ASSERT_LE(et, std::pow(1 - alpha, t) * e0 + 1e-9) << "case " << c << " t " << t;
    }
  }
}

TEST(Crop, PadRuleExample) {
  EXPECT_EQ(crop_region({40, 40, 20, 20}, 0.25, 100, 100), (PixelRect{35, 35, 30, 30}));
  Image f(100, 100, {1, 1, 1});
  const auto c = crop_face(f, {40, 40, 20, 20});
  EXPECT_EQ(c.width, 30);
  EXPECT_EQ(c.height, 30);
}

TEST(Crop, FullFrameWithoutPadIsIdentical) {
  Image f(13, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 13; ++x) f.set(x, y, {std::uint8_t(x * 9), std::uint8_t(y * 20), 3});
  EXPECT_EQ(crop_face(f, {0, 0, 13, 9}, 0.0), f);
}

TEST(Crop, OutsideAndDegenerateBoxesFail) {
  Image f(50, 50);
  EXPECT_THROW(crop_face(f, {60, 60, 10, 10}), EnhancementError);
  EXPECT_THROW(crop_face(f, {10, 10, 0, 10}), EnhancementError);
  EXPECT_THROW(crop_face(Image(), {1, 1, 1, 1}), EnhancementError);
  EXPECT_THROW(crop_region({1, 1, 5, 5}, -0.1, 50, 50), ParameterError);
}

TEST(Crop, MatchesOracleOnRandomCases) {
  Rng rng(8);
  for (int c = 0; c < 500; ++c) {
    const int fw = 16 + static_cast<int>(rng.below(300)), fh = 16 + static_cast<int>(rng.below(300));
    const BoundingBox b{rng.unit() * fw * 0.9, rng.unit() * fh * 0.9, 1 + rng.unit() * fw * 0.5,
                        1 + rng.unit() * fh * 0.5};
    const double pad = rng.unit() * 0.5;
    const auto want = semio::testing::crop_oracle(b, pad, fw, fh);
    Image f(fw, fh, {4, 5, 6});
    const auto got = crop_face(f, b, pad);
    ASSERT_EQ(crop_region(b, pad, fw, fh), want) << "case " << c;
    ASSERT_EQ(got.width, want.w);
    ASSERT_EQ(got.height, want.h);
  }
}

TEST(Crop, CopiesTheRightPixels) {
  Image f(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) f.set(x, y, {std::uint8_t(x), std::uint8_t(y), 0});
  const auto c = crop_face(f, {5, 6, 4, 4}, 0.0);
  EXPECT_EQ(c.at(0, 0), (Rgb{5, 6, 0}));
  EXPECT_EQ(c.at(3, 3), (Rgb{8, 9, 0}));
}

TEST(Overlay, NothingDrawnChangesNothing) {
  Image f(40, 30, {7, 7, 7});
  f.set(3, 3, {200, 1, 1});
  EXPECT_EQ(overlay_skeleton(f, Skeleton{}), f);
  EXPECT_EQ(overlay_skeleton(f, two_joints(0.9, 0.2)), f);
  EXPECT_EQ(overlay_skeleton(f, two_joints(0.29, 0.29)), f);
  EXPECT_NE(overlay_skeleton(f, two_joints(0.3, 0.3)), f);  // threshold is inclusive
}

TEST(Overlay, HorizontalEdgeMatchesRasterOracle) {
  Image f(30, 20, {10, 10, 10});
  const auto out = overlay_skeleton(f, two_joints(0.9, 0.9));
  // Square 3 px brush along y = 0 from x = 0..10, plus radius-3 disks at the
  // two endpoints, clipped to the frame.
  std::set<std::pair<int, int>> want;
  for (int x = -1; x <= 11; ++x)
    for (int y = -1; y <= 1; ++y)
      if (x >= 0 && y >= 0) want.insert({x, y});
  for (int cx : {0, 10})
    for (int dy = -3; dy <= 3; ++dy)
      for (int dx = -3; dx <= 3; ++dx)
        if (dx * dx + dy * dy <= 9 && cx + dx >= 0 && dy >= 0) want.insert({cx + dx, dy});
  EXPECT_EQ(changed_pixels(f, out), want);
}

TEST(Overlay, ThinLinesFollowIdealSegment) {
  Rng rng(4);
  OverlayStyle thin;
  thin.line_thickness = 1;
  thin.marker_radius = 0;
  for (int c = 0; c < 200; ++c) {
    const int x0 = int(rng.below(60)), y0 = int(rng.below(40)), x1 = int(rng.below(60)), y1 = int(rng.below(40));
    Skeleton s;
    s.keypoints = {{0, double(x0), double(y0), 1.0}, {1, double(x1), double(y1), 1.0}};
    s.edges = {{0, 1}};
    Image f(60, 40);
    const auto px = changed_pixels(f, overlay_skeleton(f, s, 0.3, thin));
    ASSERT_TRUE(semio::testing::thin_line_matches(px, x0, y0, x1, y1))
        << "(" << x0 << "," << y0 << ")-(" << x1 << "," << y1 << ")";
  }
}

TEST(Overlay, DeterministicAndValidates) {
  Image f(64, 48, {30, 40, 50});
  Skeleton s;
  for (int j = 0; j < kJointCount; ++j) s.keypoints.push_back({j, 5.0 + 3 * j, 4.0 + 2 * j, 0.8});
  s = Skeleton::with_default_edges(s.keypoints);
  EXPECT_EQ(overlay_skeleton(f, s), overlay_skeleton(f, s));
  s.edges.push_back({3, 40});
  EXPECT_THROW(overlay_skeleton(f, s), ValidationError);
}

TEST(Audio, IdentityIsBitExactAndGainScales) {
  AudioClip clip{{0.1f, -0.2f, 0.3f, 0.4f}, 44100};
  auto id = handle<SpeechEnhancer>(std::make_shared<IdentityEnhancer>());
  EXPECT_EQ(enhance_audio(clip, id).samples, clip.samples);
  auto half = handle<SpeechEnhancer>(std::make_shared<GainEnhancer>(0.5f));
  const auto out = enhance_audio(clip, half);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) EXPECT_FLOAT_EQ(out.samples[i], clip.samples[i] * 0.5f);
}

namespace {
class Truncating : public SpeechEnhancer {
 public:
  std::string id() const override { return "trunc"; }
  AudioClip enhance(const AudioClip& c, const FrameContext&) override {
    AudioClip o = c;
    o.samples.resize(c.samples.size() / 2);
    return o;
  }
};
class Resampling : public SpeechEnhancer {
 public:
  std::string id() const override { return "rate"; }
  AudioClip enhance(const AudioClip& c, const FrameContext&) override {
    AudioClip o = c;
    o.sample_rate = 16000;
    return o;
  }
};
}  // namespace

TEST(Audio, ContractViolationsAndOutages) {
  AudioClip clip{std::vector<float>(1000, 0.1f), 44100};
  auto down = handle<SpeechEnhancer>(std::make_shared<DownBackend>());
  EXPECT_THROW(enhance_audio(clip, down), EnhancementError);
  auto trunc = handle<SpeechEnhancer>(std::make_shared<Truncating>());
  EXPECT_THROW(enhance_audio(clip, trunc), EnhancementError);
  auto rate = handle<SpeechEnhancer>(std::make_shared<Resampling>());
  EXPECT_THROW(enhance_audio(clip, rate), EnhancementError);
}

TEST(Transcript, PhraseSilenceAndOutage) {
  semio::testing::TempDir dir;
  const auto cat = Catalog::load_default();
  FixtureSpec talk;
  talk.clip_id = "T";
  talk.patient_id = "P";
  talk.duration_s = 4;
  talk.fps = {10, 1};
  talk.planted["ictal_vocalization"] = {1, 1, 0, 4};
  talk.utterance = "help me";
  const auto a = generate_fixture(talk, cat, dir.path());
  FixtureSpec quiet = talk;
  quiet.clip_id = "Q";
  quiet.planted.clear();
  quiet.utterance.reset();
  const auto b = generate_fixture(quiet, cat, dir.path());

  auto asr = handle<SpeechRecognizer>(std::make_shared<MockRecognizer>());
  EXPECT_EQ(transcribe(read_wav(a.audio), asr, {a.video, -1}), "help me");
  EXPECT_EQ(transcribe(read_wav(b.audio), asr, {b.video, -1}), "");
  auto down = handle<SpeechRecognizer>(std::make_shared<DownBackend>());
  EXPECT_THROW(transcribe(read_wav(a.audio), down), EnhancementError);
}

TEST(FaceCrop, FallsBackToFullFramesWithoutFaces) {
  std::vector<Image> frames(3, Image(32, 24, {9, 9, 9}));
  std::vector<FrameContext> ctx(3);
  auto face = handle<FaceDetector>(std::make_shared<MockFaceDetector>());
  const auto r = face_crop_frames(frames, ctx, face);
  EXPECT_TRUE(r.fell_back);
  EXPECT_EQ(r.frames, frames);
  EXPECT_TRUE(r.boxes.empty());
  std::vector<FrameContext> short_ctx(2);
  EXPECT_THROW(face_crop_frames(frames, short_ctx, face), ParameterError);
}

TEST(FaceCrop, CropsFixtureFramesAroundSidecarBoxes) {
  semio::testing::TempDir dir;
  FixtureSpec s;
  s.clip_id = "F";
  s.patient_id = "P";
  s.duration_s = 3;
  s.fps = {10, 1};
  const auto files = generate_fixture(s, Catalog::load_default(), dir.path());
  VideoReader r(files.video);
  std::vector<Image> frames;
  std::vector<FrameContext> ctx;
  for (std::int64_t i = 0; i < 6; ++i) {
    frames.push_back(r.frame(i));
    ctx.push_back({files.video, i});
  }
  auto face = handle<FaceDetector>(std::make_shared<MockFaceDetector>());
  const auto out = face_crop_frames(frames, ctx, face);
  ASSERT_FALSE(out.fell_back);
  ASSERT_EQ(out.frames.size(), 6u);
  const auto track = read_face_track(files.faces);
  const auto want = semio::testing::crop_oracle(out.boxes[0], kDefaultCropPad, 160, 120);
  EXPECT_EQ(out.frames[0].width, want.w);
  EXPECT_EQ(out.boxes[0], *clamp_box(*track[0], 160, 120));
  EXPECT_LT(out.frames[0].width, 160);
}
