// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic labeled clips: an 18-joint stick figure animated by one simple
// parametric motion program per catalog feature, a matching audio track, and
// checksummed sidecars (labels, face boxes, skeletons, utterance) that the mock
// backends read. These are plumbing fixtures, not clinical simulations.

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semio/catalog.hpp"
#include "semio/draw.hpp"
#include "semio/ingest.hpp"
#include "semio/media.hpp"
#include "semio/rng.hpp"
#include "semio/segmenter.hpp"
#include "semio/sidecar.hpp"
#include "semio/types.hpp"

namespace semio {

// Meaning of frequency/amplitude depends on the program; see program_for.
struct MotionParams {
  double frequency_hz = 1.0;
  double amplitude_px = 4.0;
  double onset_s = 0.0;
  double offset_s = 10.0;
};

struct FixtureSpec {
  std::string clip_id;
  std::string patient_id;
  double duration_s = 60.0;
  Rational fps{30, 1};
  int width = 160;
  int height = 120;
  int audio_rate = 16000;
  std::map<std::string, MotionParams> planted;
  std::optional<std::string> utterance;
  std::uint64_t seed = 0;

  std::set<std::string> planted_features() const {
    std::set<std::string> out;
    for (const auto& [f, _] : planted) out.insert(f);
    return out;
  }
};

inline constexpr double kMinTonicSeconds = 5.0;

inline void validate_spec(const FixtureSpec& s, const Catalog& catalog) {
  if (s.clip_id.empty()) throw GenerationError("fixture needs a clip id");
  if (!(s.duration_s > 0)) throw GenerationError(s.clip_id + ": duration must be positive");
  if (!s.fps.valid()) throw GenerationError(s.clip_id + ": invalid fps");
  if (s.width < 64 || s.height < 64) throw GenerationError(s.clip_id + ": frame too small");
  for (const auto& [f, p] : s.planted) {
    if (!catalog.find(f)) throw GenerationError(s.clip_id + ": unknown feature '" + f + "'");
    if (!(p.onset_s >= 0 && p.onset_s < p.offset_s && p.offset_s <= s.duration_s))
      throw GenerationError(s.clip_id + ": motion interval of " + f + " outside the clip");
    if (f == "tonic" && p.offset_s - p.onset_s < kMinTonicSeconds)
      throw GenerationError(s.clip_id + ": tonic posture must last at least 5 s");
  }
}

namespace fixture_detail {

struct Vec2 {
  double x = 0, y = 0;
};

inline Vec2 lerp(Vec2 a, Vec2 b, double t) { return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}; }

enum class Eyes { open, closed, wide };

struct Pose {
  std::array<Vec2, kJointCount> joints;
  Eyes eyes = Eyes::open;
  double mouth_open = 0;  // px
  double mouth_tilt = 0;  // px, right corner raised
  bool dimmed = false;
};

// Joint layout of a figure facing the camera in a 160x120 frame, scaled to
// the actual frame size.
inline Pose base_pose(int w, int h) {
  static constexpr std::array<Vec2, kJointCount> ref = {{
      {80, 24}, {80, 34}, {68, 38}, {62, 56}, {60, 72}, {92, 38}, {98, 56}, {100, 72}, {72, 72},
      {70, 92}, {70, 110}, {88, 72}, {90, 92}, {90, 110}, {77, 20}, {83, 20}, {73, 21}, {87, 21}}};
  Pose p;
  for (int i = 0; i < kJointCount; ++i)
    p.joints[static_cast<std::size_t>(i)] = {ref[static_cast<std::size_t>(i)].x * w / 160.0,
                                             ref[static_cast<std::size_t>(i)].y * h / 120.0};
  return p;
}

enum J { nose, neck, rsh, rel, rwr, lsh, lel, lwr, rhip, rkn, rank, lhip, lkn, lank, reye, leye, rear, lear };

inline Vec2& at(Pose& p, J j) { return p.joints[static_cast<std::size_t>(j)]; }

inline double wave(double f, double t, double phase = 0) {
  return std::sin(2 * std::numbers::pi * f * t + phase);
}
inline double ramp(double t, double over = 1.0) { return std::min(1.0, t / over); }

inline void shift_head(Pose& p, double dx, double dy) {
  for (J j : {nose, reye, leye, rear, lear}) at(p, j).x += dx, at(p, j).y += dy;
}

// Applies one feature's program at local time t (seconds since onset).
inline void apply_program(const std::string& f, const MotionParams& m, double t, double phase,
                          Pose& p, const Pose& base) {
  const double A = m.amplitude_px, F = m.frequency_hz;
  auto arms_to = [&](Vec2 re, Vec2 rw, Vec2 le, Vec2 lw, double s) {
    at(p, rel) = lerp(at(p, rel), re, s);
    at(p, rwr) = lerp(at(p, rwr), rw, s);
    at(p, lel) = lerp(at(p, lel), le, s);
    at(p, lwr) = lerp(at(p, lwr), lw, s);
  };
  const Vec2 rs = base.joints[rsh], ls = base.joints[lsh];
  if (f == "blank_stare") {
    p.eyes = Eyes::wide;  // fixed, widened eyes; head held still
  } else if (f == "closed_eyes") {
    p.eyes = Eyes::closed;
  } else if (f == "eye_blinking") {
    const double cyc = F * t - std::floor(F * t);
    if (cyc < 0.3) p.eyes = Eyes::closed;
  } else if (f == "face_pulling") {
    p.mouth_tilt += A * (0.5 - 0.5 * std::cos(2 * std::numbers::pi * F * t));
  } else if (f == "face_twitching") {
    if (wave(F, t, phase) > 0.6) {
      p.mouth_tilt -= A;
      at(p, reye).y += A / 2;
    }
  } else if (f == "oral_automatisms") {
    p.mouth_open += A * (0.5 - 0.5 * std::cos(2 * std::numbers::pi * F * t + phase));
  } else if (f == "head_turning") {
    shift_head(p, A * ramp(t), 0);  // sustained version to one side
  } else if (f == "occur_during_sleep") {
    p.dimmed = true;
  } else if (f == "arm_flexion") {
    arms_to({rs.x - 8, rs.y + 14}, {rs.x - 2, rs.y + 4}, {ls.x + 8, ls.y + 14}, {ls.x + 2, ls.y + 4},
            ramp(t));
  } else if (f == "arms_move_simultaneously") {
    const double d = A * wave(F, t, phase);
    for (J j : {rel, lel}) at(p, j).y -= d / 2;
    for (J j : {rwr, lwr}) at(p, j).y -= d;
  } else if (f == "arm_straightening") {
    arms_to({rs.x - 16, rs.y}, {rs.x - 30, rs.y}, {ls.x + 16, ls.y}, {ls.x + 30, ls.y}, ramp(t));
  } else if (f == "figure_4") {
    arms_to({rs.x - 16, rs.y}, {rs.x - 30, rs.y}, {ls.x + 8, ls.y + 14}, {ls.x + 2, ls.y + 4},
            ramp(t));
  } else if (f == "tonic") {
    const double s = ramp(t, 0.3);  // then rigid: no further motion
    arms_to({rs.x - 10, rs.y - 10}, {rs.x - 20, rs.y - 20}, {ls.x + 10, ls.y - 10},
            {ls.x + 20, ls.y - 20}, s);
    at(p, rkn) = lerp(at(p, rkn), {base.joints[rhip].x - 6, base.joints[rkn].y}, s);
    at(p, rank) = lerp(at(p, rank), {base.joints[rhip].x - 12, base.joints[rank].y}, s);
    at(p, lkn) = lerp(at(p, lkn), {base.joints[lhip].x + 6, base.joints[lkn].y}, s);
    at(p, lank) = lerp(at(p, lank), {base.joints[lhip].x + 12, base.joints[lank].y}, s);
  } else if (f == "clonic") {
    const double d = A * wave(F, t, phase);
    for (J j : {rel, lel}) at(p, j).y += d / 2;
    for (J j : {rwr, lwr}) at(p, j).y += d;
  } else if (f == "limb_automatisms") {
    const double a = 2 * std::numbers::pi * F * t + phase;
    at(p, rwr).x += A * std::cos(a);
    at(p, rwr).y += A * std::sin(a);
  } else if (f == "asynchronous_movement") {
    at(p, rwr).y -= A * wave(F, t, phase);
    at(p, rel).y -= A / 2 * wave(F, t, phase);
    at(p, lwr).y -= A * wave(1.7 * F, t, phase + 1.0);
    at(p, lel).y -= A / 2 * wave(1.7 * F, t, phase + 1.0);
  } else if (f == "pelvic_thrusting") {
    const double d = A * wave(F, t, phase);
    for (J j : {rhip, lhip}) at(p, j).y += d;
    for (J j : {rkn, lkn}) at(p, j).y += d / 2;
  } else if (f == "full_body_shaking") {
    const double d = A * wave(F, t, phase);
    for (auto& j : p.joints) j.x += d;
  }
  // verbal_responsiveness and ictal_vocalization are audio-only.
}

struct Palette {
  Rgb background{200, 200, 196};
  Rgb dimmed{58, 58, 70};
  Rgb figure{24, 24, 28};
  Rgb mouth{150, 40, 40};
};

inline Vec2 head_center(const Pose& p) {
  return {p.joints[nose].x, p.joints[nose].y - 2.0};
}

inline constexpr int kHeadRadius = 8;

inline Image render(const Pose& p, int w, int h, const Palette& pal = {}) {
  using draw::to_pixel;
  Image img(w, h, p.dimmed ? pal.dimmed : pal.background);
  for (const auto& [a, b] : default_edges()) {
    if (a == nose || b == nose) continue;  // head drawn separately
    if (a >= reye || b >= reye) continue;
    const auto& pa = p.joints[static_cast<std::size_t>(a)];
    const auto& pb = p.joints[static_cast<std::size_t>(b)];
    draw::line(img, to_pixel(pa.x), to_pixel(pa.y), to_pixel(pb.x), to_pixel(pb.y), pal.figure, 2);
  }
  const auto hc = head_center(p);
  const int hx = to_pixel(hc.x), hy = to_pixel(hc.y);
  // neck to chin
  draw::line(img, to_pixel(p.joints[neck].x), to_pixel(p.joints[neck].y), hx, hy + kHeadRadius,
             pal.figure, 2);
  draw::ring(img, hx, hy, kHeadRadius, pal.figure, 1);
  for (J e : {reye, leye}) {
    const int ex = to_pixel(p.joints[e].x), ey = to_pixel(p.joints[e].y);
    switch (p.eyes) {
      case Eyes::open: draw::disk(img, ex, ey, 1, pal.figure); break;
      case Eyes::wide: draw::ring(img, ex, ey, 2, pal.figure, 1); break;
      case Eyes::closed: draw::line(img, ex - 1, ey, ex + 1, ey, pal.figure, 1); break;
    }
  }
  const int mx = to_pixel(p.joints[nose].x), my = to_pixel(p.joints[nose].y + 3);
  const int open = to_pixel(p.mouth_open), tilt = to_pixel(p.mouth_tilt);
  if (open > 0) draw::rect(img, mx - 3, my, 7, open + 1, pal.mouth);
  else draw::line(img, mx - 3, my, mx + 3, my - tilt, pal.mouth, 1);
  return img;
}

inline BoundingBox face_box(const Pose& p) {
  const auto hc = head_center(p);
  return {hc.x - 10, hc.y - 11, 20, 22};
}

inline constexpr double kJointConfidence = 0.95;

inline Skeleton skeleton_of(const Pose& p) {
  std::vector<Keypoint> kps;
  for (int i = 0; i < kJointCount; ++i)
    kps.push_back({i, std::round(p.joints[static_cast<std::size_t>(i)].x * 100) / 100,
                   std::round(p.joints[static_cast<std::size_t>(i)].y * 100) / 100, kJointConfidence});
  return Skeleton::with_default_edges(std::move(kps));
}

inline void check_in_frame(const Pose& p, int w, int h, const std::string& clip, double t) {
  auto inside = [&](double x, double y) { return x >= 0 && y >= 0 && x <= w - 1 && y <= h - 1; };
  bool ok = true;
  for (const auto& j : p.joints) ok = ok && inside(j.x, j.y);
  const auto hc = head_center(p);
  ok = ok && inside(hc.x - kHeadRadius, hc.y - kHeadRadius) && inside(hc.x + kHeadRadius, hc.y + kHeadRadius);
  if (!ok) throw GenerationError(clip + ": figure leaves the frame at t=" + fixed3(t) + " s");
}

// ---- audio ------------------------------------------------------------------

inline void add_tone(std::vector<float>& out, int rate, double start, double end, double f0,
                     double amp, double vibrato_hz = 0) {
  const auto a = static_cast<std::size_t>(std::max(0.0, start * rate));
  const auto b = std::min(out.size(), static_cast<std::size_t>(end * rate));
  double phase = 0;
  for (std::size_t i = a; i < b; ++i) {
    const double t = double(i - a) / rate, len = end - start;
    const double env = std::min({1.0, t / 0.05, (len - t) / 0.05});
    const double f = f0 * (1.0 + 0.03 * std::sin(2 * std::numbers::pi * vibrato_hz * t));
    phase += 2 * std::numbers::pi * f / rate;
    const double v = std::sin(phase) + 0.5 * std::sin(2 * phase) + 0.25 * std::sin(3 * phase);
    out[i] += static_cast<float>(amp * env * v / 1.75);
  }
}

}  // namespace fixture_detail

struct FixtureFiles {
  fs::path video, audio, labels, faces, skeleton, utterance;
};

// Renders the clip and writes media plus sidecars into `dir` as
// <clip_id>.svid / .wav / .labels.jsonl / .faces.jsonl / .skeleton.jsonl /
// .utterance.txt.
inline FixtureFiles generate_fixture(const FixtureSpec& spec, const Catalog& catalog,
                                     const fs::path& dir) {
  using namespace fixture_detail;
  validate_spec(spec, catalog);
  const int w = spec.width, h = spec.height;
  const auto n_frames = frame_count_for(spec.duration_s, spec.fps);
  const Pose base = base_pose(w, h);

  std::map<std::string, double> phases;
  Rng rng(KeyHash(spec.seed).add(spec.clip_id).value());
  for (const auto& [f, _] : spec.planted) phases[f] = rng.unit() * 2 * std::numbers::pi;

  VideoWriter video(w, h, spec.fps);
  std::vector<std::optional<BoundingBox>> faces;
  std::vector<Skeleton> skeletons;
  for (std::int64_t i = 0; i < n_frames; ++i) {
    const double t = static_cast<double>(i) / spec.fps.value();
    Pose p = base;
    for (const auto& [f, m] : spec.planted)
      if (t >= m.onset_s && t < m.offset_s) apply_program(f, m, t - m.onset_s, phases[f], p, base);
    check_in_frame(p, w, h, spec.clip_id, t);
    video.add(render(p, w, h));
    faces.push_back(clamp_box(face_box(p), w, h));
    skeletons.push_back(skeleton_of(p));
  }

  AudioClip audio;
  audio.sample_rate = spec.audio_rate;
  audio.samples.assign(static_cast<std::size_t>(std::llround(spec.duration_s * spec.audio_rate)), 0.0f);
  {
    Rng hiss(KeyHash(spec.seed).add(spec.clip_id).add("audio").value());
    for (auto& s : audio.samples) s = static_cast<float>((hiss.unit() - 0.5) * 0.004);
  }
  if (auto it = spec.planted.find("ictal_vocalization"); it != spec.planted.end()) {
    // Sustained low groans with vibrato.
    for (double t = it->second.onset_s; t + 1.2 <= it->second.offset_s; t += 2.0)
      add_tone(audio.samples, spec.audio_rate, t, t + 1.2, 140, 0.35, 5);
  }
  if (auto it = spec.planted.find("verbal_responsiveness"); it != spec.planted.end()) {
    // Short syllable-like bursts.
    int k = 0;
    for (double t = it->second.onset_s; t + 0.2 <= it->second.offset_s; t += 0.35, ++k)
      add_tone(audio.samples, spec.audio_rate, t, t + 0.2, 210 + 30 * (k % 4), 0.25);
  }

  LabelSidecar labels;
  labels.clip_id = spec.clip_id;
  for (const auto& f : catalog) {
    PlantedFeature pf{f.feature_id, false, 0, 0};
    if (auto it = spec.planted.find(f.feature_id); it != spec.planted.end())
      pf = {f.feature_id, true, it->second.onset_s, it->second.offset_s};
    labels.features[f.feature_id] = pf;
  }

  FixtureFiles files;
  files.video = dir / (spec.clip_id + ".svid");
  files.audio = dir / (spec.clip_id + ".wav");
  const auto side = sidecar_paths(files.video);
  files.labels = side.labels;
  files.faces = side.faces;
  files.skeleton = side.skeleton;
  files.utterance = side.utterance;
  video.save(files.video);
  write_wav(files.audio, audio);
  write_file(files.labels, label_sidecar_text(labels));
  write_file(files.faces, face_track_text(faces));
  write_file(files.skeleton, skeleton_track_text(skeletons));
  write_file(files.utterance, utterance_text(spec.utterance.value_or("")));
  return files;
}

// Planted labels of a generated clip, read back from its checksummed sidecar.
inline std::map<std::string, bool> oracle_labels(const fs::path& media_path) {
  const auto paths = sidecar_paths(media_path);
  if (!fs::exists(paths.labels)) throw FixtureError("missing label sidecar " + paths.labels.string());
  std::map<std::string, bool> out;
  for (const auto& [f, p] : read_label_sidecar(paths.labels).features) out[f] = p.present;
  return out;
}

// ---- default suite ----------------------------------------------------------

struct SuiteOptions {
  int patients = 6;
  int clips_per_patient = 2;
  Rational fps{30, 1};
  std::uint64_t seed = 7;
};

// Program parameters per feature: frequency (Hz) and amplitude (px).
inline MotionParams default_motion(const std::string& f) {
  static const std::map<std::string, std::pair<double, double>> table = {
      {"eye_blinking", {2.5, 0}},  {"face_pulling", {0.5, 3}},  {"face_twitching", {5, 2}},
      {"oral_automatisms", {1.5, 3}}, {"head_turning", {0, 6}},  {"arms_move_simultaneously", {1, 10}},
      {"clonic", {3, 5}},          {"limb_automatisms", {1, 4}}, {"asynchronous_movement", {1.2, 8}},
      {"pelvic_thrusting", {1.5, 4}}, {"full_body_shaking", {5, 3}}};
  MotionParams m;
  if (auto it = table.find(f); it != table.end()) {
    m.frequency_hz = it->second.first;
    m.amplitude_px = it->second.second;
  }
  return m;
}

inline std::string utterance_for(const std::string& feature) {
  if (feature == "ictal_vocalization") return "help me";
  if (feature == "verbal_responsiveness") return "yes I can hear you";
  return {};
}

// Feature j (catalog order) is planted in clips j mod n and (j + 5) mod n, so
// with 12 clips every feature has two positive and ten negative clips. Each
// clip's features get disjoint 10 s slots.
inline std::vector<FixtureSpec> default_suite_specs(const Catalog& catalog, const SuiteOptions& opt = {}) {
  const int n = opt.patients * opt.clips_per_patient;
  if (n < 2) throw GenerationError("suite needs at least two clips");
  std::vector<FixtureSpec> specs(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    auto& s = specs[static_cast<std::size_t>(c)];
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%02d", c / opt.clips_per_patient + 1);
    s.patient_id = buf;
    std::snprintf(buf, sizeof buf, "P%02d_C%d", c / opt.clips_per_patient + 1, c % opt.clips_per_patient + 1);
    s.clip_id = buf;
    s.duration_s = 60.0 + (c * 13) % 36;
    s.fps = opt.fps;
    s.seed = opt.seed;
  }
  const auto ids = catalog.ids();
  for (std::size_t j = 0; j < ids.size(); ++j)
    for (int c : {static_cast<int>(j) % n, static_cast<int>(j + 5) % n})
      specs[static_cast<std::size_t>(c)].planted[ids[j]] = default_motion(ids[j]);
  for (auto& s : specs) {
    int slot = 0;
    // Catalog order, not map order, decides the slot.
    for (const auto& id : ids) {
      auto it = s.planted.find(id);
      if (it == s.planted.end()) continue;
      it->second.onset_s = 4.0 + 14.0 * slot;
      it->second.offset_s = it->second.onset_s + 10.0;
      ++slot;
      if (it->second.offset_s > s.duration_s)
        throw GenerationError(s.clip_id + ": too many planted features for its duration");
      if (auto u = utterance_for(id); !u.empty()) s.utterance = s.utterance ? *s.utterance + " " + u : u;
    }
  }
  return specs;
}

struct SuiteResult {
  std::vector<FixtureSpec> specs;
  fs::path manifest;
};

// Generates every clip and a manifest with probed fields and oracle labels.
inline SuiteResult generate_suite(const fs::path& out_dir, const Catalog& catalog,
                                  const SuiteOptions& opt = {}) {
  const auto dir = fs::absolute(out_dir);
  SuiteResult out;
  out.specs = default_suite_specs(catalog, opt);
  fs::create_directories(dir / "clips");
  Manifest man;
  for (const auto& s : out.specs) {
    const auto files = generate_fixture(s, catalog, dir / "clips");
    const auto info = probe_video(files.video);
    MediaItem m{s.clip_id, s.patient_id, files.video, files.audio, info.fps, info.duration_s(),
                info.width, info.height};
    man.items.push_back(m);
    man.truth[s.clip_id] = oracle_labels(files.video);
  }
  out.manifest = dir / "manifest.jsonl";
  save_manifest(out.manifest, man);
  return out;
}

}  // namespace semio
