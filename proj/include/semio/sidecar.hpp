// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fixture sidecars co-located with the media of a synthetic clip:
//   <clip>.labels.jsonl    planted labels and motion intervals
//   <clip>.faces.jsonl     per-frame head box
//   <clip>.skeleton.jsonl  per-frame 18-joint skeleton
//   <clip>.utterance.txt   planted speech text (possibly empty)
// Each file starts with a checksum header (see make_checksummed).

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semio/error.hpp"
#include "semio/io.hpp"
#include "semio/types.hpp"

namespace semio {

struct PlantedFeature {
  std::string feature_id;
  bool present = false;
  double onset_s = 0;
  double offset_s = 0;
};

struct LabelSidecar {
  std::string clip_id;
  std::map<std::string, PlantedFeature> features;

  bool present(const std::string& fid) const {
    auto it = features.find(fid);
    return it != features.end() && it->second.present;
  }
  // True when the feature is planted and its motion interval intersects
  // [start, end).
  bool active_in(const std::string& fid, double start, double end) const {
    auto it = features.find(fid);
    if (it == features.end() || !it->second.present) return false;
    return it->second.onset_s < end && it->second.offset_s > start;
  }
};

struct SidecarPaths {
  fs::path labels, faces, skeleton, utterance;
};

inline SidecarPaths sidecar_paths(const fs::path& media_path) {
  const auto dir = media_path.parent_path();
  const auto stem = media_path.stem().string();
  return {dir / (stem + ".labels.jsonl"), dir / (stem + ".faces.jsonl"),
          dir / (stem + ".skeleton.jsonl"), dir / (stem + ".utterance.txt")};
}

inline std::string label_sidecar_text(const LabelSidecar& s) {
  std::string body;
  for (const auto& [fid, f] : s.features)
    body += to_jsonl_line({{"clip_id", s.clip_id},
                           {"feature_id", fid},
                           {"present", f.present},
                           {"onset_s", f.onset_s},
                           {"offset_s", f.offset_s}});
  return make_checksummed("labels", body);
}

inline LabelSidecar parse_label_sidecar(std::string_view content, const std::string& origin) {
  LabelSidecar s;
  for (const auto& j : parse_jsonl(verify_checksummed(content, "labels", origin), origin)) {
    PlantedFeature f;
    s.clip_id = j.at("clip_id").get<std::string>();
    f.feature_id = j.at("feature_id").get<std::string>();
    f.present = j.at("present").get<bool>();
    f.onset_s = j.at("onset_s").get<double>();
    f.offset_s = j.at("offset_s").get<double>();
    s.features[f.feature_id] = f;
  }
  return s;
}

inline LabelSidecar read_label_sidecar(const fs::path& path) {
  if (!fs::exists(path)) throw FixtureError("missing label sidecar " + path.string());
  return parse_label_sidecar(read_file(path), path.string());
}

inline std::string face_track_text(const std::vector<std::optional<BoundingBox>>& track) {
  std::string body;
  for (std::size_t i = 0; i < track.size(); ++i) {
    json j{{"frame", i}};
    if (track[i]) {
      j["box"] = {track[i]->x, track[i]->y, track[i]->w, track[i]->h};
    } else {
      j["box"] = nullptr;
    }
    body += to_jsonl_line(j);
  }
  return make_checksummed("faces", body);
}

inline std::vector<std::optional<BoundingBox>> read_face_track(const fs::path& path) {
  if (!fs::exists(path)) throw FixtureError("missing face sidecar " + path.string());
  std::vector<std::optional<BoundingBox>> out;
  for (const auto& j :
       parse_jsonl(verify_checksummed(read_file(path), "faces", path.string()), path.string())) {
    const auto& b = j.at("box");
    if (b.is_null()) {
      out.emplace_back();
    } else {
      out.push_back(BoundingBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                b[3].get<double>()});
    }
  }
  return out;
}

inline json skeleton_to_json(const Skeleton& s) {
  json kps = json::array();
  for (const auto& k : s.keypoints) kps.push_back({k.joint_id, k.x, k.y, k.confidence});
  json edges = json::array();
  for (const auto& [a, b] : s.edges) edges.push_back({a, b});
  return {{"keypoints", kps}, {"edges", edges}};
}

inline Skeleton skeleton_from_json(const json& j) {
  Skeleton s;
  for (const auto& k : j.at("keypoints"))
    s.keypoints.push_back(
        {k[0].get<int>(), k[1].get<double>(), k[2].get<double>(), k[3].get<double>()});
  for (const auto& e : j.at("edges")) s.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  return s;
}

inline std::string skeleton_track_text(const std::vector<Skeleton>& track) {
  std::string body;
  for (std::size_t i = 0; i < track.size(); ++i) {
    json j{{"frame", i}};
    j.update(skeleton_to_json(track[i]));
    body += to_jsonl_line(j);
  }
  return make_checksummed("skeleton", body);
}

inline std::vector<Skeleton> read_skeleton_track(const fs::path& path) {
  if (!fs::exists(path)) throw FixtureError("missing skeleton sidecar " + path.string());
  std::vector<Skeleton> out;
  for (const auto& j : parse_jsonl(verify_checksummed(read_file(path), "skeleton", path.string()),
                                   path.string()))
    out.push_back(skeleton_from_json(j));
  return out;
}

inline std::string utterance_text(const std::string& utterance) {
  return make_checksummed("utterance", utterance.empty() ? "" : utterance + "\n");
}

inline std::string read_utterance(const fs::path& path) {
  if (!fs::exists(path)) throw FixtureError("missing utterance sidecar " + path.string());
  return std::string(trim(verify_checksummed(read_file(path), "utterance", path.string())));
}

// Lazily loads and memoizes sidecars per clip; safe for concurrent use.
class SidecarCache {
 public:
  std::shared_ptr<const LabelSidecar> labels(const fs::path& media) {
    return get(labels_, media, [](const SidecarPaths& p) { return read_label_sidecar(p.labels); });
  }
  std::shared_ptr<const std::vector<std::optional<BoundingBox>>> faces(const fs::path& media) {
    return get(faces_, media, [](const SidecarPaths& p) { return read_face_track(p.faces); });
  }
  std::shared_ptr<const std::vector<Skeleton>> skeletons(const fs::path& media) {
    return get(skeletons_, media,
               [](const SidecarPaths& p) { return read_skeleton_track(p.skeleton); });
  }
  std::shared_ptr<const std::string> utterance(const fs::path& media) {
    return get(utterances_, media, [](const SidecarPaths& p) { return read_utterance(p.utterance); });
  }

 private:
  template <typename T, typename Load>
  std::shared_ptr<const T> get(std::unordered_map<std::string, std::shared_ptr<const T>>& map,
                               const fs::path& media, Load load) {
    const auto key = media.lexically_normal().string();
    {
      std::lock_guard lock(mu_);
      if (auto it = map.find(key); it != map.end()) return it->second;
    }
    auto value = std::make_shared<const T>(load(sidecar_paths(media)));
    std::lock_guard lock(mu_);
    return map.emplace(key, std::move(value)).first->second;
  }

  std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const LabelSidecar>> labels_;
  std::unordered_map<std::string, std::shared_ptr<const std::vector<std::optional<BoundingBox>>>>
      faces_;
  std::unordered_map<std::string, std::shared_ptr<const std::vector<Skeleton>>> skeletons_;
  std::unordered_map<std::string, std::shared_ptr<const std::string>> utterances_;
};

}  // namespace semio
