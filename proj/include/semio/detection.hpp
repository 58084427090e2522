// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Drives segment planning, enhancement artifacts and detection over a
// manifest, persisting everything under one output directory:
//
//   segments/plan.jsonl
//   enhanced/<video>/face_crop/seg_NNNN.svid
//   enhanced/<video>/pose_overlay/seg_NNNN.svid
//   enhanced/<video>/audio.denoised.wav, enhanced/<video>/transcript.txt
//   detections/<variant>.jsonl           append-only segment_detection records
//   detections/<variant>.failures.jsonl  failures of the latest run
//   verdicts/<variant>.jsonl             video_verdict records, rewritten per run

#include <atomic>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <tuple>

#include "semio/backends.hpp"
#include "semio/detect.hpp"
#include "semio/enhance.hpp"
#include "semio/ingest.hpp"
#include "semio/media.hpp"
#include "semio/segmenter.hpp"

namespace semio {

enum class Variant { raw, enhanced };

inline std::string_view to_string(Variant v) { return v == Variant::raw ? "raw" : "enhanced"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "raw") return Variant::raw;
  if (s == "enhanced") return Variant::enhanced;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

struct DetectionConfig {
  SegmenterConfig segmenter;
  PromptStyle style = PromptStyle::expert;
  Variant variant = Variant::enhanced;
  FaceCropOptions face;
  double pose_confidence = kDefaultPoseConfidence;
  OverlayStyle overlay;
  bool denoise = true;
  // Features whose audio prompt carries the transcript; unset means every
  // audio feature.
  std::optional<std::set<std::string>> transcript_features;
  int workers = 4;

  bool wants_transcript(const FeatureSpec& f) const {
    if (f.category != Category::audio) return false;
    return !transcript_features || transcript_features->count(f.feature_id) > 0;
  }
};

// ---- layout -----------------------------------------------------------------

struct OutputLayout {
  fs::path root;

  fs::path segment_plan() const { return root / "segments" / "plan.jsonl"; }
  fs::path enhanced_dir(std::string_view video) const { return root / "enhanced" / std::string(video); }
  fs::path face_crop(std::string_view video, int seg) const {
    return enhanced_dir(video) / "face_crop" / seg_name(seg);
  }
  fs::path pose_overlay(std::string_view video, int seg) const {
    return enhanced_dir(video) / "pose_overlay" / seg_name(seg);
  }
  fs::path denoised_audio(std::string_view video) const {
    return enhanced_dir(video) / "audio.denoised.wav";
  }
  fs::path transcript(std::string_view video) const { return enhanced_dir(video) / "transcript.txt"; }
  fs::path detections(Variant v) const {
    return root / "detections" / (std::string(to_string(v)) + ".jsonl");
  }
  fs::path failures(Variant v) const {
    return root / "detections" / (std::string(to_string(v)) + ".failures.jsonl");
  }
  fs::path verdicts(Variant v) const {
    return root / "verdicts" / (std::string(to_string(v)) + ".jsonl");
  }
  fs::path reports() const { return root / "reports"; }
  fs::path review() const { return root / "review"; }

  static std::string seg_name(int seg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "seg_%04d.svid", seg);
    return buf;
  }
};

// Write to a sibling temp file and rename, so an interrupted run never leaves
// a truncated artifact behind that a later run would trust.
inline void write_atomically(const fs::path& path, const std::function<void(const fs::path&)>& write) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  write(tmp);
  fs::rename(tmp, path);
}

// ---- segmentation stage -----------------------------------------------------

using SegmentPlans = std::map<std::string, std::vector<SegmentPlan>>;

inline SegmentPlans plan_manifest(const Manifest& man, const SegmenterConfig& cfg) {
  SegmentPlans out;
  for (const auto& m : man.items) {
    if (m.duration_s <= 0)
      throw ValidationError("video '" + m.video_id + "' has no duration; probe the manifest");
    out[m.video_id] = plan_video(m.video_id, m.duration_s, m.fps, cfg);
  }
  return out;
}

inline void write_segment_plans(const fs::path& path, const Manifest& man, const SegmentPlans& plans) {
  std::vector<json> records;
  for (const auto& m : man.items)
    for (const auto& s : plans.at(m.video_id)) records.push_back(segment_plan_to_json(s));
  write_atomically(path, [&](const fs::path& p) { write_jsonl(p, records); });
}

inline SegmentPlans read_segment_plans(const fs::path& path) {
  SegmentPlans out;
  for (const auto& j : read_jsonl(path)) {
    auto s = segment_plan_from_json(j);
    out[s.video_id].push_back(std::move(s));
  }
  for (auto& [_, v] : out)
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

// Existing plans are reused; a video missing from them is planned fresh.
inline SegmentPlans load_or_plan(const Manifest& man, const SegmenterConfig& cfg,
                                 const OutputLayout& layout) {
  SegmentPlans plans;
  if (fs::exists(layout.segment_plan())) plans = read_segment_plans(layout.segment_plan());
  bool changed = false;
  for (const auto& m : man.items)
    if (!plans.count(m.video_id)) {
      plans[m.video_id] = plan_video(m.video_id, m.duration_s, m.fps, cfg);
      changed = true;
    }
  if (changed) write_segment_plans(layout.segment_plan(), man, plans);
  return plans;
}

// ---- enhancement artifacts --------------------------------------------------

struct StageFailure {
  std::string video_id;
  std::string feature_id;  // empty for enhancement failures
  int segment_index = -1;
  std::string message;

  json to_json() const {
    return {{"kind", "failure"},
            {"video_id", video_id},
            {"feature_id", feature_id},
            {"segment_index", segment_index},
            {"message", message}};
  }
};

inline Rational sampled_fps(double target_fps) {
  return Rational{std::llround(target_fps * 1000.0), 1000}.reduced();
}

inline std::vector<FrameContext> frame_contexts(const MediaItem& m, const SegmentPlan& s) {
  std::vector<FrameContext> ctx;
  for (auto i : s.frame_indices) ctx.push_back({m.video_path, i});
  return ctx;
}

// Memoizes one computation per key; concurrent callers of the same key wait
// on the first one. Exceptions are memoized too.
template <typename Key, typename Value>
class Memo {
 public:
  std::shared_ptr<const Value> get(const Key& key, const std::function<Value()>& make) {
    std::shared_future<std::shared_ptr<const Value>> fut;
    std::promise<std::shared_ptr<const Value>> promise;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      auto it = map_.find(key);
      if (it == map_.end()) {
        fut = promise.get_future().share();
        map_.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(std::make_shared<const Value>(make()));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

 private:
  std::mutex mu_;
  std::map<Key, std::shared_future<std::shared_ptr<const Value>>> map_;
};

// Per-video source of (possibly enhanced) inputs, backed by on-disk artifacts.
class VideoInputs {
 public:
  VideoInputs(const MediaItem& item, const OutputLayout& layout, BackendSet& backends,
              const DetectionConfig& cfg)
      : item_(item), layout_(layout), backends_(backends), cfg_(cfg) {}

  std::shared_ptr<const std::vector<Image>> raw(const SegmentPlan& s) {
    return raw_.get(s.index, [&] {
      std::lock_guard lock(reader_mu_);
      if (!reader_) reader_ = std::make_unique<VideoReader>(item_.video_path);
      return reader_->frames(s.frame_indices);
    });
  }

  std::shared_ptr<const std::vector<Image>> face_crop(const SegmentPlan& s) {
    return face_.get(s.index, [&] {
      const auto path = layout_.face_crop(item_.video_id, s.index);
      if (fs::exists(path)) return load_all_frames(path);
      auto frames = *raw(s);
      const auto ctx = frame_contexts(item_, s);
      auto result = face_crop_frames(frames, ctx, backends_.face, cfg_.face);
      write_atomically(path, [&](const fs::path& p) {
        save_frames(p, result.frames, sampled_fps(cfg_.segmenter.target_fps));
      });
      return std::move(result.frames);
    });
  }

  std::shared_ptr<const std::vector<Image>> pose_overlay(const SegmentPlan& s) {
    return pose_.get(s.index, [&] {
      const auto path = layout_.pose_overlay(item_.video_id, s.index);
      if (fs::exists(path)) return load_all_frames(path);
      auto frames = *raw(s);
      const auto ctx = frame_contexts(item_, s);
      auto out = pose_overlay_frames(frames, ctx, backends_.pose, cfg_.pose_confidence, cfg_.overlay);
      write_atomically(path, [&](const fs::path& p) {
        save_frames(p, out, sampled_fps(cfg_.segmenter.target_fps));
      });
      return out;
    });
  }

  std::shared_ptr<const AudioClip> raw_audio() {
    return audio_.get(0, [&] { return read_wav(item_.audio_path); });
  }

  std::shared_ptr<const AudioClip> denoised_audio() {
    if (!cfg_.denoise) return raw_audio();
    return audio_.get(1, [&] {
      const auto path = layout_.denoised_audio(item_.video_id);
      if (fs::exists(path)) return read_wav(path);
      auto clip = enhance_audio(*raw_audio(), backends_.enhancer, {item_.video_path, -1});
      write_atomically(path, [&](const fs::path& p) { write_wav(p, clip); });
      return clip;
    });
  }

  // Transcribed from the original recording, not the denoised one.
  std::shared_ptr<const std::string> transcript() {
    return text_.get(0, [&] {
      const auto path = layout_.transcript(item_.video_id);
      if (fs::exists(path)) return read_file(path);
      auto text = transcribe(*raw_audio(), backends_.asr, {item_.video_path, -1});
      write_atomically(path, [&](const fs::path& p) { write_file(p, text); });
      return text;
    });
  }

 private:
  const MediaItem& item_;
  const OutputLayout& layout_;
  BackendSet& backends_;
  const DetectionConfig& cfg_;
  std::mutex reader_mu_;
  std::unique_ptr<VideoReader> reader_;
  Memo<int, std::vector<Image>> raw_, face_, pose_;
  Memo<int, AudioClip> audio_;
  Memo<int, std::string> text_;
};

inline std::set<Enhancement> enhancements_needed(const Catalog& catalog) {
  std::set<Enhancement> out;
  for (const auto& f : catalog) out.insert(f.enhancement);
  return out;
}

// Materializes every enhancement artifact the catalog routes to. Failures are
// collected; detection retries them and marks the affected pairs incomplete.
inline std::vector<StageFailure> run_enhancement(const Manifest& man, const Catalog& catalog,
                                                 const DetectionConfig& cfg, BackendSet& backends,
                                                 const OutputLayout& layout) {
  const auto plans = load_or_plan(man, cfg.segmenter, layout);
  const auto needed = enhancements_needed(catalog);
  bool wants_asr = false;
  for (const auto& f : catalog) wants_asr = wants_asr || cfg.wants_transcript(f);
  std::vector<StageFailure> failures;
  auto attempt = [&](const MediaItem& m, int seg, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      failures.push_back({m.video_id, "", seg, e.what()});
    }
  };
  for (const auto& m : man.items) {
    VideoInputs inputs(m, layout, backends, cfg);
    for (const auto& s : plans.at(m.video_id)) {
      if (needed.count(Enhancement::face_crop)) attempt(m, s.index, [&] { inputs.face_crop(s); });
      if (needed.count(Enhancement::pose_overlay)) attempt(m, s.index, [&] { inputs.pose_overlay(s); });
    }
    if (needed.count(Enhancement::audio_chain)) {
      attempt(m, -1, [&] { inputs.denoised_audio(); });
      if (wants_asr) attempt(m, -1, [&] { inputs.transcript(); });
    }
  }
  return failures;
}

// ---- detection stage --------------------------------------------------------

struct DetectionKey {
  std::string video_id, feature_id;
  int segment_index = 0;
  PromptStyle style = PromptStyle::expert;
  auto tie() const { return std::tie(video_id, feature_id, segment_index, style); }
  friend bool operator<(const DetectionKey& a, const DetectionKey& b) { return a.tie() < b.tie(); }
};

inline DetectionKey key_of(const SegmentDetection& d) {
  return {d.video_id, d.feature_id, d.segment_index, d.prompt_style};
}

struct DetectionStats {
  std::size_t tasks = 0;
  std::size_t skipped = 0;
  std::size_t executed = 0;
  std::size_t failed = 0;
};

struct DetectionResult {
  std::vector<VideoVerdict> verdicts;  // for the configured style
  std::vector<StageFailure> failures;
  DetectionStats stats;

  std::size_t incomplete() const {
    return static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return !v.complete; }));
  }
};

// Segment indices a (video, feature) must cover; audio features use the whole
// recording as segment 0.
inline std::vector<int> expected_segments(const FeatureSpec& f, const std::vector<SegmentPlan>& plans) {
  if (f.category == Category::audio) return {0};
  std::vector<int> out;
  for (const auto& s : plans) out.push_back(s.index);
  return out;
}

// Verdicts for every style present in `detections` plus `style`, in manifest
// × catalog order per style.
inline std::vector<VideoVerdict> build_verdicts(const Manifest& man, const Catalog& catalog,
                                                const SegmentPlans& plans,
                                                const std::vector<SegmentDetection>& detections,
                                                PromptStyle style) {
  std::map<std::tuple<PromptStyle, std::string, std::string>, std::map<int, SegmentDetection>> by_pair;
  std::set<PromptStyle> styles{style};
  for (const auto& d : detections) {
    styles.insert(d.prompt_style);
    by_pair[{d.prompt_style, d.video_id, d.feature_id}].insert_or_assign(d.segment_index, d);
  }
  std::vector<VideoVerdict> out;
  for (auto s : styles)
    for (const auto& m : man.items)
      for (const auto& f : catalog) {
        const auto& got = by_pair[{s, m.video_id, f.feature_id}];
        std::vector<SegmentDetection> ds;
        bool complete = true;
        for (int idx : expected_segments(f, plans.at(m.video_id))) {
          auto it = got.find(idx);
          if (it == got.end()) complete = false;
          else ds.push_back(it->second);
        }
        VideoVerdict v;
        if (complete && !ds.empty()) {
          v = aggregate_any_yes(ds);
        } else {
          v.video_id = m.video_id;
          v.feature_id = f.feature_id;
          v.prompt_style = s;
          v.complete = false;
        }
        out.push_back(std::move(v));
      }
  return out;
}

// Emits records in task order regardless of completion order.
class OrderedWriter {
 public:
  explicit OrderedWriter(JsonlAppender& sink) : sink_(sink) {}
  void put(std::size_t seq, std::optional<json> record) {
    std::lock_guard lock(mu_);
    pending_.emplace(seq, std::move(record));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      if (pending_.begin()->second) sink_.append(*pending_.begin()->second);
      pending_.erase(pending_.begin());
      ++next_;
    }
  }
  void reset() {
    std::lock_guard lock(mu_);
    pending_.clear();
    next_ = 0;
  }

 private:
  JsonlAppender& sink_;
  std::mutex mu_;
  std::map<std::size_t, std::optional<json>> pending_;
  std::size_t next_ = 0;
};

inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

inline RequestContext context_for(const MediaItem& m, const FeatureSpec& f, PromptStyle style,
                                  int segment, double start, double end) {
  return {m.video_id, f.feature_id, f.category, style, segment, start, end, m.video_path};
}

inline SegmentDetection detect_segment(const MediaItem& m, const FeatureSpec& f,
                                       const SegmentPlan* seg, const Catalog& catalog,
                                       const DetectionConfig& cfg, BackendSet& backends,
                                       VideoInputs& inputs) {
  SegmentDetection d;
  d.video_id = m.video_id;
  d.feature_id = f.feature_id;
  d.prompt_style = cfg.style;
  BackendResponse resp;
  if (f.category == Category::audio) {
    const bool enhanced = cfg.variant == Variant::enhanced;
    std::optional<std::string> transcript;
    if (enhanced && cfg.wants_transcript(f)) transcript = *inputs.transcript();
    const auto clip = enhanced ? inputs.denoised_audio() : inputs.raw_audio();
    AudioRequest req;
    req.clip = clip.get();
    req.transcript = transcript;
    req.prompt = build_prompt(catalog, f.feature_id, cfg.style, transcript).text;
    req.context = context_for(m, f, cfg.style, 0, 0.0, clip->duration_s());
    resp = alm_infer(req, backends.alm);
  } else {
    std::shared_ptr<const std::vector<Image>> frames;
    if (cfg.variant == Variant::raw || f.enhancement == Enhancement::none) frames = inputs.raw(*seg);
    else if (f.enhancement == Enhancement::face_crop) frames = inputs.face_crop(*seg);
    else frames = inputs.pose_overlay(*seg);
    VisionRequest req;
    req.frames = *frames;
    req.prompt = build_prompt(catalog, f.feature_id, cfg.style).text;
    req.context = context_for(m, f, cfg.style, seg->index, seg->start_s, seg->end_s);
    d.segment_index = seg->index;
    resp = vlm_infer(req, backends.vlm);
  }
  auto parsed = parse_response(resp.text);
  d.decision = parsed.decision;
  d.justification = std::move(parsed.justification);
  d.raw_response = std::move(resp.text);
  return d;
}

inline DetectionResult run_detection(const Manifest& man, const Catalog& catalog,
                                     const DetectionConfig& cfg, BackendSet& backends,
                                     const OutputLayout& layout) {
  const auto plans = load_or_plan(man, cfg.segmenter, layout);
  const auto store_path = layout.detections(cfg.variant);
  auto stored = read_detections(store_path);
  std::set<DetectionKey> done;
  for (const auto& d : stored) done.insert(key_of(d));

  DetectionResult result;
  std::mutex mu;
  std::vector<SegmentDetection> fresh;
  {
    JsonlAppender sink(store_path);
    OrderedWriter writer(sink);
    for (const auto& m : man.items) {
      struct Task {
        const FeatureSpec* feature;
        const SegmentPlan* segment;  // null for audio features
      };
      std::vector<Task> tasks;
      const auto& segs = plans.at(m.video_id);
      for (const auto& f : catalog) {
        for (int idx : expected_segments(f, segs)) {
          ++result.stats.tasks;
          if (done.count({m.video_id, f.feature_id, idx, cfg.style})) ++result.stats.skipped;
          else tasks.push_back({&f, f.category == Category::audio ? nullptr : &segs[static_cast<std::size_t>(idx)]});
        }
      }
      if (tasks.empty()) continue;
      VideoInputs inputs(m, layout, backends, cfg);
      writer.reset();
      parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
        const auto& t = tasks[i];
        try {
          auto d = detect_segment(m, *t.feature, t.segment, catalog, cfg, backends, inputs);
          writer.put(i, to_json(d));
          std::lock_guard lock(mu);
          ++result.stats.executed;
          fresh.push_back(std::move(d));
        } catch (const Error& e) {
          writer.put(i, std::nullopt);
          std::lock_guard lock(mu);
          ++result.stats.failed;
          result.failures.push_back(
              {m.video_id, t.feature->feature_id, t.segment ? t.segment->index : 0, e.what()});
        }
      });
    }
  }

  auto by_key = [](const StageFailure& a, const StageFailure& b) {
    return std::tie(a.video_id, a.feature_id, a.segment_index) <
           std::tie(b.video_id, b.feature_id, b.segment_index);
  };
  std::sort(result.failures.begin(), result.failures.end(), by_key);
  {
    std::vector<json> records;
    for (const auto& f : result.failures) records.push_back(f.to_json());
    write_atomically(layout.failures(cfg.variant), [&](const fs::path& p) { write_jsonl(p, records); });
  }

  stored.insert(stored.end(), fresh.begin(), fresh.end());
  const auto all = build_verdicts(man, catalog, plans, stored, cfg.style);
  {
    std::vector<json> records;
    for (const auto& v : all) records.push_back(to_json(v));
    write_atomically(layout.verdicts(cfg.variant), [&](const fs::path& p) { write_jsonl(p, records); });
  }
  for (const auto& v : all)
    if (v.prompt_style == cfg.style) result.verdicts.push_back(v);
  return result;
}

}  // namespace semio
