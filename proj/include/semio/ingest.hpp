// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Media manifest: one JSON record per line with media metadata, patient
// linkage and the adjudicated per-video label for every feature.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semio/catalog.hpp"
#include "semio/error.hpp"
#include "semio/io.hpp"
#include "semio/media.hpp"
#include "semio/types.hpp"

namespace semio {

struct MediaItem {
  std::string video_id;
  std::string patient_id;
  fs::path video_path;
  fs::path audio_path;
  Rational fps;
  double duration_s = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const MediaItem&, const MediaItem&) = default;
};

// video_id -> feature_id -> present
using GroundTruth = std::map<std::string, std::map<std::string, bool>>;

struct Manifest {
  std::vector<MediaItem> items;
  GroundTruth truth;

  bool empty() const { return items.empty(); }

  const MediaItem* find(std::string_view video_id) const {
    for (const auto& m : items)
      if (m.video_id == video_id) return &m;
    return nullptr;
  }
  const MediaItem& item(std::string_view video_id) const {
    if (const auto* m = find(video_id)) return *m;
    throw NotFoundError("unknown video '" + std::string(video_id) + "'");
  }
  const std::string& patient_of(std::string_view video_id) const {
    return item(video_id).patient_id;
  }
  std::vector<std::string> video_ids() const {
    std::vector<std::string> out;
    for (const auto& m : items) out.push_back(m.video_id);
    return out;
  }

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct ManifestOptions {
  bool strict = true;
  bool probe = false;
  // When set, strict mode requires a label for every catalog feature and
  // rejects labels for unknown features.
  const Catalog* catalog = nullptr;
};

inline Rational parse_fps(const json& j) {
  if (j.is_number_integer()) return {j.get<std::int64_t>(), 1};
  if (j.is_number()) {
    const double v = j.get<double>();
    const auto scaled = static_cast<std::int64_t>(std::llround(v * 1000.0));
    return Rational{scaled, 1000}.reduced();
  }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return {std::stoll(s), 1};
      return Rational{std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))}.reduced();
    } catch (const std::exception&) {
    }
  }
  throw ValidationError("invalid fps value " + j.dump());
}

inline json fps_to_json(Rational r) {
  r = r.reduced();
  if (r.den == 1) return r.num;
  return r.str();
}

inline json media_item_to_json(const MediaItem& m, const std::map<std::string, bool>& labels,
                               const fs::path& base_dir) {
  auto rel = [&](const fs::path& p) {
    if (p.is_relative() || base_dir.empty()) return p.generic_string();
    return fs::proximate(p, base_dir).generic_string();
  };
  json lab = json::object();
  for (const auto& [k, v] : labels) lab[k] = v;
  return {{"video_id", m.video_id},
          {"patient_id", m.patient_id},
          {"video_path", rel(m.video_path)},
          {"audio_path", rel(m.audio_path)},
          {"fps", fps_to_json(m.fps)},
          {"duration_s", m.duration_s},
          {"width", m.width},
          {"height", m.height},
          {"labels", lab}};
}

inline Manifest parse_manifest(std::string_view text, const fs::path& base_dir,
                               const ManifestOptions& opts = {}) {
  Manifest man;
  std::set<std::string> seen;
  std::set<std::string> label_union;
  int lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "manifest line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": " + e.what());
    }
    auto req_str = [&](const char* k) {
      if (!j.contains(k) || !j[k].is_string() || j[k].get<std::string>().empty())
        throw ValidationError(where + ": missing field '" + k + "'");
      return j[k].get<std::string>();
    };
    MediaItem m;
    m.video_id = req_str("video_id");
    m.patient_id = req_str("patient_id");
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_relative() && !base_dir.empty() ? (base_dir / path).lexically_normal() : path;
    };
    m.video_path = resolve(req_str("video_path"));
    m.audio_path = resolve(req_str("audio_path"));
    if (!seen.insert(m.video_id).second)
      throw ValidationError(where + ": duplicate video_id '" + m.video_id + "'");

    if (opts.probe) {
      VideoInfo vi;
      try {
        vi = probe_video(m.video_path);
        (void)probe_wav(m.audio_path);
      } catch (const Error& e) {
        throw IoError(where + ": " + e.what());
      }
      m.fps = vi.fps;
      m.duration_s = vi.duration_s();
      m.width = vi.width;
      m.height = vi.height;
    } else {
      try {
        m.fps = parse_fps(j.at("fps"));
        m.duration_s = j.at("duration_s").get<double>();
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
      } catch (const json::exception& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    if (!m.fps.valid()) throw ValidationError(where + ": fps must be positive");
    if (!(m.duration_s > 0)) throw ValidationError(where + ": duration_s must be positive");
    if (m.width <= 0 || m.height <= 0) throw ValidationError(where + ": invalid frame size");

    auto& labels = man.truth[m.video_id];
    if (j.contains("labels")) {
      if (!j["labels"].is_object()) throw ValidationError(where + ": labels must be an object");
      for (const auto& [fid, v] : j["labels"].items()) {
        if (!v.is_boolean())
          throw ValidationError(where + ": label '" + fid + "' is not a boolean");
        if (opts.strict && opts.catalog && !opts.catalog->find(fid))
          throw ValidationError(where + ": label for unknown feature '" + fid + "'");
        labels[fid] = v.get<bool>();
        label_union.insert(fid);
      }
    }
    man.items.push_back(std::move(m));
  }

  if (opts.strict) {
    std::vector<std::string> required;
    if (opts.catalog) {
      required = opts.catalog->ids();
    } else {
      required.assign(label_union.begin(), label_union.end());
    }
    for (const auto& m : man.items) {
      const auto& labels = man.truth[m.video_id];
      for (const auto& fid : required)
        if (!labels.count(fid))
          throw ValidationError("video '" + m.video_id + "' lacks a label for '" + fid + "'");
    }
  }
  return man;
}

inline Manifest load_manifest(const fs::path& path, const ManifestOptions& opts = {}) {
  if (!fs::exists(path)) throw IoError("manifest not found: " + path.string());
  return parse_manifest(read_file(path), fs::absolute(path).parent_path(), opts);
}

inline std::string manifest_text(const Manifest& man, const fs::path& base_dir) {
  std::string out;
  static const std::map<std::string, bool> kNoLabels;
  for (const auto& m : man.items) {
    auto it = man.truth.find(m.video_id);
    out += to_jsonl_line(media_item_to_json(m, it == man.truth.end() ? kNoLabels : it->second,
                                            base_dir));
  }
  return out;
}

inline void save_manifest(const fs::path& path, const Manifest& man) {
  write_file(path, manifest_text(man, fs::absolute(path).parent_path()));
}

// De-duplicated, sorted patient ids.
inline std::vector<std::string> patients_of(const Manifest& man) {
  std::set<std::string> ids;
  for (const auto& m : man.items) ids.insert(m.patient_id);
  return {ids.begin(), ids.end()};
}

}  // namespace semio
