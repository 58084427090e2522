// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Overlapping window planning and fixed-rate frame sampling.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semio/error.hpp"
#include "semio/io.hpp"
#include "semio/types.hpp"

namespace semio {

inline constexpr double kDefaultSegmentLength = 30.0;
inline constexpr double kDefaultOverlap = 5.0;
inline constexpr double kDefaultTargetFps = 2.0;

struct TimeWindow {
  double start_s = 0;
  double end_s = 0;
  double length() const { return end_s - start_s; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

// Windows [k*stride, min(k*stride + L, D)) for k = 0, 1, ... while
// k*stride < D, stride = L - V. A window contained in its predecessor (only
// possible once the predecessor already reached D) is dropped.
inline std::vector<TimeWindow> plan_segments(double duration_s,
                                             double segment_len_s = kDefaultSegmentLength,
                                             double overlap_s = kDefaultOverlap) {
  if (!(duration_s > 0)) throw ParameterError("duration must be positive");
  if (!(segment_len_s > 0)) throw ParameterError("segment length must be positive");
  if (!(overlap_s >= 0) || overlap_s >= segment_len_s)
    throw ParameterError("overlap must satisfy 0 <= overlap < segment length");
  const double stride = segment_len_s - overlap_s;
  std::vector<TimeWindow> out;
  for (std::int64_t k = 0;; ++k) {
    const double start = static_cast<double>(k) * stride;
    if (!(start < duration_s)) break;
    const TimeWindow w{start, std::min(start + segment_len_s, duration_s)};
    if (!out.empty() && w.end_s <= out.back().end_s) break;
    out.push_back(w);
  }
  return out;
}

inline std::int64_t round_half_up(double v) { return static_cast<std::int64_t>(std::floor(v + 0.5)); }

inline std::int64_t frame_count_for(double duration_s, Rational fps) {
  return round_half_up(duration_s * fps.value());
}

struct FrameSample {
  std::vector<double> times;
  std::vector<std::int64_t> indices;
};

// Times start + i/target while < end; index = round_half_up(t * fps), clamped
// to the last valid source frame when `source_frame_count` is given.
inline FrameSample sample_frames(double start_s, double end_s, Rational source_fps,
                                 double target_fps = kDefaultTargetFps,
                                 std::optional<std::int64_t> source_frame_count = std::nullopt) {
  if (!source_fps.valid()) throw ParameterError("source fps must be positive");
  if (!(target_fps > 0)) throw ParameterError("target fps must be positive");
  if (target_fps > source_fps.value())
    throw ParameterError("target fps exceeds source fps");
  if (!(end_s > start_s)) throw ParameterError("empty sampling interval");
  FrameSample out;
  const std::int64_t last =
      source_frame_count ? std::max<std::int64_t>(*source_frame_count - 1, 0)
                         : std::numeric_limits<std::int64_t>::max();
  for (std::int64_t i = 0;; ++i) {
    const double t = start_s + static_cast<double>(i) / target_fps;
    if (!(t < end_s)) break;
    out.times.push_back(t);
    out.indices.push_back(std::min(round_half_up(t * source_fps.value()), last));
  }
  return out;
}

struct SegmentPlan {
  std::string video_id;
  int index = 0;
  double start_s = 0;
  double end_s = 0;
  std::vector<double> frame_times;
  std::vector<std::int64_t> frame_indices;

  TimeWindow window() const { return {start_s, end_s}; }
};

struct SegmenterConfig {
  double segment_len_s = kDefaultSegmentLength;
  double overlap_s = kDefaultOverlap;
  double target_fps = kDefaultTargetFps;
};

inline std::vector<SegmentPlan> plan_video(const std::string& video_id, double duration_s,
                                           Rational fps, const SegmenterConfig& cfg = {}) {
  std::vector<SegmentPlan> out;
  const auto frames = frame_count_for(duration_s, fps);
  int idx = 0;
  for (const auto& w : plan_segments(duration_s, cfg.segment_len_s, cfg.overlap_s)) {
    auto s = sample_frames(w.start_s, w.end_s, fps, cfg.target_fps, frames);
    out.push_back({video_id, idx++, w.start_s, w.end_s, std::move(s.times), std::move(s.indices)});
  }
  return out;
}

inline json segment_plan_to_json(const SegmentPlan& s) {
  return {{"video_id", s.video_id},       {"index", s.index},
          {"start_s", s.start_s},         {"end_s", s.end_s},
          {"frame_times", s.frame_times}, {"frame_indices", s.frame_indices}};
}

inline SegmentPlan segment_plan_from_json(const json& j) {
  SegmentPlan s;
  s.video_id = j.at("video_id").get<std::string>();
  s.index = j.at("index").get<int>();
  s.start_s = j.at("start_s").get<double>();
  s.end_s = j.at("end_s").get<double>();
  s.frame_times = j.at("frame_times").get<std::vector<double>>();
  s.frame_indices = j.at("frame_indices").get<std::vector<std::int64_t>>();
  return s;
}

}  // namespace semio
