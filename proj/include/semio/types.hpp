// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semio/error.hpp"

namespace semio {

struct Rational {
  std::int64_t num = 30;
  std::int64_t den = 1;

  constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool valid() const { return num > 0 && den > 0; }
  Rational reduced() const {
    const auto g = std::gcd(num, den);
    return g ? Rational{num / g, den / g} : *this;
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num * b.den == b.num * a.den;
  }
  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Packed 8-bit RGB, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, Rgb fill = {}) : width(w), height(h), rgb(std::size_t(w) * h * 3) {
    if (w <= 0 || h <= 0) throw ParameterError("image dimensions must be positive");
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
      rgb[i] = fill.r;
      rgb[i + 1] = fill.g;
      rgb[i + 2] = fill.b;
    }
  }

  bool empty() const { return width <= 0 || height <= 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  Rgb at(int x, int y) const {
    const auto i = (std::size_t(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    if (!contains(x, y)) return;
    const auto i = (std::size_t(y) * width + x) * 3;
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
  }

  // True when every pixel has the same colour.
  bool uniform() const {
    for (std::size_t i = 3; i < rgb.size(); i += 3)
      if (rgb[i] != rgb[0] || rgb[i + 1] != rgb[1] || rgb[i + 2] != rgb[2]) return false;
    return true;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr int kCanonicalSampleRate = 44100;

struct AudioClip {
  std::vector<float> samples;  // mono, nominal range [-1, 1]
  int sample_rate = kCanonicalSampleRate;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  void validate() const {
    if (sample_rate <= 0) throw ParameterError("audio sample_rate must be positive");
  }
  friend bool operator==(const AudioClip&, const AudioClip&) = default;
};

struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Intersection of the box with [0,width) x [0,height); nullopt when empty.
inline std::optional<BoundingBox> clamp_box(const BoundingBox& b, int width, int height) {
  const double x0 = std::clamp(b.x, 0.0, double(width));
  const double y0 = std::clamp(b.y, 0.0, double(height));
  const double x1 = std::clamp(b.right(), 0.0, double(width));
  const double y1 = std::clamp(b.bottom(), 0.0, double(height));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

struct Keypoint {
  int joint_id = 0;
  double x = 0, y = 0;
  double confidence = 1.0;
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

using Edge = std::pair<int, int>;

// 18-joint body layout:
//  0 nose  1 neck  2 r_shoulder 3 r_elbow 4 r_wrist 5 l_shoulder 6 l_elbow
//  7 l_wrist 8 r_hip 9 r_knee 10 r_ankle 11 l_hip 12 l_knee 13 l_ankle
//  14 r_eye 15 l_eye 16 r_ear 17 l_ear
inline constexpr int kJointCount = 18;

inline constexpr std::array<const char*, kJointCount> kJointNames = {
    "nose",  "neck",  "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
    "l_elbow", "l_wrist", "r_hip", "r_knee", "r_ankle", "l_hip",
    "l_knee", "l_ankle", "r_eye", "l_eye", "r_ear", "l_ear"};

inline const std::vector<Edge>& default_edges() {
  static const std::vector<Edge> edges = {
      {1, 2}, {2, 3},  {3, 4},   {1, 5},   {5, 6},  {6, 7},   {1, 8},  {8, 9},  {9, 10},
      {1, 11}, {11, 12}, {12, 13}, {1, 0}, {0, 14}, {14, 16}, {0, 15}, {15, 17}};
  return edges;
}

struct Skeleton {
  std::vector<Keypoint> keypoints;
  std::vector<Edge> edges;

  bool empty() const { return keypoints.empty(); }

  const Keypoint* joint(int id) const {
    for (const auto& k : keypoints)
      if (k.joint_id == id) return &k;
    return nullptr;
  }

  void validate() const {
    std::set<int> ids;
    for (const auto& k : keypoints) {
      if (!ids.insert(k.joint_id).second)
        throw ValidationError("duplicate joint id " + std::to_string(k.joint_id));
      if (!(k.confidence >= 0.0 && k.confidence <= 1.0))
        throw ValidationError("joint confidence outside [0,1]");
    }
    for (const auto& [a, b] : edges)
      if (!ids.count(a) || !ids.count(b))
        throw ValidationError("edge references missing joint");
  }

  static Skeleton with_default_edges(std::vector<Keypoint> kps) {
    Skeleton s;
    s.keypoints = std::move(kps);
    std::set<int> ids;
    for (const auto& k : s.keypoints) ids.insert(k.joint_id);
    for (const auto& e : default_edges())
      if (ids.count(e.first) && ids.count(e.second)) s.edges.push_back(e);
    return s;
  }

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

}  // namespace semio
