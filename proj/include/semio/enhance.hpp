// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Feature-targeted signal enhancement: temporally smoothed face crops for
// facial features, pose-skeleton overlays for limb/body features, and the
// speech enhancement + transcript chain for audio features.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "semio/backends.hpp"
#include "semio/draw.hpp"
#include "semio/error.hpp"
#include "semio/types.hpp"

namespace semio {

inline constexpr double kDefaultSmoothingAlpha = 0.5;
inline constexpr double kDefaultCropPad = 0.25;
inline constexpr double kDefaultPoseConfidence = 0.3;

// Per-coordinate exponential moving average over a box stream. A missing
// detection holds the previous smoothed box.
class BoxSmoother {
 public:
  explicit BoxSmoother(double alpha, std::optional<BoundingBox> initial = std::nullopt)
      : alpha_(alpha), state_(initial) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must be in (0, 1]");
  }

  const std::optional<BoundingBox>& update(const std::optional<BoundingBox>& d) {
    if (!d) return state_;
    if (!state_) {
      state_ = d;
      return state_;
    }
    auto mix = [&](double now, double prev) { return alpha_ * now + (1.0 - alpha_) * prev; };
    state_ = BoundingBox{mix(d->x, state_->x), mix(d->y, state_->y), mix(d->w, state_->w),
                         mix(d->h, state_->h)};
    return state_;
  }

  const std::optional<BoundingBox>& state() const { return state_; }

 private:
  double alpha_;
  std::optional<BoundingBox> state_;
};

// Smooths a detection track. Leading gaps are backfilled from the first
// smoothed box; every output is clamped to the frame. Throws when the track
// has no detection at all, or when a smoothed box misses the frame.
inline std::vector<BoundingBox> smooth_boxes(std::span<const std::optional<BoundingBox>> detections,
                                             double alpha, int frame_width, int frame_height) {
  BoxSmoother sm(alpha);
  std::vector<std::optional<BoundingBox>> raw;
  raw.reserve(detections.size());
  for (const auto& d : detections) raw.push_back(sm.update(d));
  const auto first = std::find_if(raw.begin(), raw.end(), [](const auto& b) { return b.has_value(); });
  if (first == raw.end()) throw EnhancementError("no face detected in any frame");
  const BoundingBox fill = **first;
  std::vector<BoundingBox> out;
  out.reserve(raw.size());
  for (const auto& b : raw) {
    auto c = clamp_box(b.value_or(fill), frame_width, frame_height);
    if (!c) throw EnhancementError("smoothed face box lies outside the frame");
    out.push_back(*c);
  }
  return out;
}

struct PixelRect {
  int x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Box grown by `pad` of its size on every side, snapped outward to whole
// pixels and clamped to the frame.
inline PixelRect crop_region(const BoundingBox& box, double pad, int frame_width, int frame_height) {
  if (!(box.w > 0 && box.h > 0)) throw EnhancementError("degenerate face box");
  if (pad < 0) throw ParameterError("negative crop padding");
  const double x0 = box.x - pad * box.w;
  const double y0 = box.y - pad * box.h;
  const double x1 = box.right() + pad * box.w;
  const double y1 = box.bottom() + pad * box.h;
  const int left = std::clamp(static_cast<int>(std::floor(x0)), 0, frame_width);
  const int top = std::clamp(static_cast<int>(std::floor(y0)), 0, frame_height);
  const int right = std::clamp(static_cast<int>(std::ceil(x1)), 0, frame_width);
  const int bottom = std::clamp(static_cast<int>(std::ceil(y1)), 0, frame_height);
  if (right <= left || bottom <= top) throw EnhancementError("face crop region is empty after clamping");
  return {left, top, right - left, bottom - top};
}

inline Image crop(const Image& frame, const PixelRect& r) {
  Image out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    const auto* src = frame.rgb.data() + (std::size_t(r.y + y) * frame.width + r.x) * 3;
    std::copy(src, src + std::size_t(r.w) * 3, out.rgb.data() + std::size_t(y) * r.w * 3);
  }
  return out;
}

inline Image crop_face(const Image& frame, const BoundingBox& box, double pad = kDefaultCropPad) {
  if (frame.empty()) throw EnhancementError("empty frame");
  return crop(frame, crop_region(box, pad, frame.width, frame.height));
}

struct OverlayStyle {
  int line_thickness = 3;
  int marker_radius = 3;
  Rgb marker_color{255, 64, 64};
  // Indexed by position in default_edges(); other edges use fallback_color.
  std::vector<Rgb> edge_colors = {
      {255, 170, 0}, {255, 120, 0}, {255, 85, 0},  // right arm
      {85, 255, 0},  {0, 255, 85},  {0, 255, 170}, // left arm
      {0, 170, 255}, {0, 120, 255}, {0, 85, 255},  // right leg
      {170, 0, 255}, {120, 0, 255}, {85, 0, 255},  // left leg
      {255, 255, 0},                               // neck-nose
      {255, 0, 170}, {255, 0, 120}, {255, 0, 200}, {255, 0, 90}};  // face
  Rgb fallback_color{255, 255, 255};

  Rgb color_for(const Edge& e) const {
    const auto& edges = default_edges();
    for (std::size_t i = 0; i < edges.size() && i < edge_colors.size(); ++i)
      if (edges[i] == e) return edge_colors[i];
    return fallback_color;
  }
};

// Draws every edge whose endpoints both reach `confidence_threshold`, then a
// marker on each endpoint of a drawn edge. Other pixels are untouched.
inline Image overlay_skeleton(const Image& frame, const Skeleton& skeleton,
                              double confidence_threshold = kDefaultPoseConfidence,
                              const OverlayStyle& style = {}) {
  skeleton.validate();
  Image out = frame;
  std::vector<const Keypoint*> markers;
  for (const auto& e : skeleton.edges) {
    const auto* a = skeleton.joint(e.first);
    const auto* b = skeleton.joint(e.second);
    if (!a || !b || a->confidence < confidence_threshold || b->confidence < confidence_threshold)
      continue;
    draw::line(out, draw::to_pixel(a->x), draw::to_pixel(a->y), draw::to_pixel(b->x),
               draw::to_pixel(b->y), style.color_for(e), style.line_thickness);
    markers.push_back(a);
    markers.push_back(b);
  }
  for (const auto* k : markers)
    draw::disk(out, draw::to_pixel(k->x), draw::to_pixel(k->y), style.marker_radius,
               style.marker_color);
  return out;
}

// ---- audio chain ------------------------------------------------------------

inline constexpr double kEnhancedDurationTolerance = 0.10;

inline AudioClip enhance_audio(const AudioClip& clip, EnhancerHandle& backend,
                               const FrameContext& ctx = {}) {
  clip.validate();
  AudioClip out;
  try {
    out = backend.call([&](SpeechEnhancer& e) { return e.enhance(clip, ctx); }).first;
  } catch (const EnhancementError&) {
    throw;
  } catch (const Error& e) {
    throw EnhancementError(std::string("speech enhancement failed: ") + e.what());
  }
  if (out.sample_rate != clip.sample_rate)
    throw EnhancementError("speech enhancement changed the sample rate");
  const double d0 = clip.duration_s(), d1 = out.duration_s();
  if (std::abs(d1 - d0) > kEnhancedDurationTolerance * d0)
    throw EnhancementError("speech enhancement changed the duration beyond 10%");
  return out;
}

inline std::string transcribe(const AudioClip& clip, RecognizerHandle& backend,
                              const FrameContext& ctx = {}) {
  clip.validate();
  try {
    return backend.call([&](SpeechRecognizer& r) { return r.transcribe(clip, ctx); }).first;
  } catch (const Error& e) {
    throw EnhancementError(std::string("speech recognition failed: ") + e.what());
  }
}

// ---- per-segment drivers ----------------------------------------------------

struct FaceCropOptions {
  double alpha = kDefaultSmoothingAlpha;
  double pad = kDefaultCropPad;
};

struct FaceCropResult {
  std::vector<Image> frames;
  std::vector<BoundingBox> boxes;  // empty when falling back to full frames
  bool fell_back = false;
};

// Detect, smooth and crop across a segment's sampled frames. When no face is
// found anywhere the full frames are passed through.
inline FaceCropResult face_crop_frames(std::span<const Image> frames,
                                       std::span<const FrameContext> ctx, FaceHandle& detector,
                                       const FaceCropOptions& opt = {}) {
  if (frames.size() != ctx.size()) throw ParameterError("frame/context length mismatch");
  FaceCropResult out;
  if (frames.empty()) return out;
  std::vector<std::optional<BoundingBox>> dets;
  dets.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
    dets.push_back(detect_faces(frames[i], detector, ctx[i]));
  try {
    out.boxes = smooth_boxes(dets, opt.alpha, frames[0].width, frames[0].height);
    for (std::size_t i = 0; i < frames.size(); ++i)
      out.frames.push_back(crop_face(frames[i], out.boxes[i], opt.pad));
  } catch (const EnhancementError&) {
    out.frames.assign(frames.begin(), frames.end());
    out.boxes.clear();
    out.fell_back = true;
  }
  return out;
}

inline std::vector<Image> pose_overlay_frames(std::span<const Image> frames,
                                              std::span<const FrameContext> ctx,
                                              PoseHandle& estimator,
                                              double confidence_threshold = kDefaultPoseConfidence,
                                              const OverlayStyle& style = {}) {
  if (frames.size() != ctx.size()) throw ParameterError("frame/context length mismatch");
  std::vector<Image> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
    out.push_back(overlay_skeleton(frames[i], estimate_pose(frames[i], estimator, ctx[i]),
                                   confidence_threshold, style));
  return out;
}

}  // namespace semio
