// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Clients for the external model roles (vision-language, audio-language,
// face detection, pose estimation, speech enhancement, speech recognition),
// a retry/concurrency wrapper shared by all of them, deterministic mocks
// driven by fixture sidecars, and a generic HTTP transport.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "semio/catalog.hpp"
#include "semio/error.hpp"
#include "semio/io.hpp"
#include "semio/media.hpp"
#include "semio/rng.hpp"
#include "semio/sidecar.hpp"
#include "semio/types.hpp"

namespace semio {

enum class BackendRole { vlm, alm, face, pose, enhance, asr };

inline constexpr std::array kAllRoles = {BackendRole::vlm,  BackendRole::alm,
                                         BackendRole::face, BackendRole::pose,
                                         BackendRole::enhance, BackendRole::asr};

inline std::string_view to_string(BackendRole r) {
  switch (r) {
    case BackendRole::vlm: return "vlm";
    case BackendRole::alm: return "alm";
    case BackendRole::face: return "face";
    case BackendRole::pose: return "pose";
    case BackendRole::enhance: return "enhance";
    case BackendRole::asr: return "asr";
  }
  return "?";
}

inline BackendRole parse_role(std::string_view s) {
  for (auto r : kAllRoles)
    if (to_string(r) == s) return r;
  throw ConfigError("unknown backend role '" + std::string(s) + "'");
}

// Where a request comes from. Remote backends receive it as metadata; mock
// backends use it to look up fixture sidecars.
struct RequestContext {
  std::string video_id;
  std::string feature_id;
  Category category = Category::facial;
  PromptStyle style = PromptStyle::expert;
  int segment_index = 0;
  double start_s = 0;
  double end_s = 0;
  fs::path media_path;

  json to_json() const {
    return {{"video_id", video_id},
            {"feature_id", feature_id},
            {"category", to_string(category)},
            {"prompt_style", to_string(style)},
            {"segment_index", segment_index},
            {"start_s", start_s},
            {"end_s", end_s}};
  }
};

struct VisionRequest {
  std::span<const Image> frames;
  std::string prompt;
  int max_response_tokens = 256;
  double temperature = 0.0;
  RequestContext context;

  void validate() const {
    if (frames.empty()) throw ParameterError("vision request needs at least one frame");
    if (trim(prompt).empty()) throw ParameterError("vision request prompt is empty");
    if (temperature < 0) throw ParameterError("temperature must be >= 0");
  }
};

inline constexpr std::string_view kSecondaryEvidenceMarker = "Secondary evidence";

struct AudioRequest {
  const AudioClip* clip = nullptr;
  std::optional<std::string> transcript;
  std::string prompt;
  int max_response_tokens = 256;
  double temperature = 0.0;
  RequestContext context;

  void validate() const {
    if (!clip) throw ParameterError("audio request has no clip");
    clip->validate();
    if (trim(prompt).empty()) throw ParameterError("audio request prompt is empty");
    if (transcript && prompt.find(kSecondaryEvidenceMarker) == std::string::npos)
      throw ParameterError("transcript present but prompt does not mark it secondary evidence");
  }
};

struct BackendResponse {
  std::string text;
  std::int64_t latency_ms = 0;
  std::string backend_id;
  int attempt = 1;
};

// Identifies the source frame an image was decoded from.
struct FrameContext {
  fs::path media_path;
  std::int64_t frame_index = -1;
};

class VisionLanguageModel {
 public:
  virtual ~VisionLanguageModel() = default;
  virtual std::string id() const = 0;
  virtual std::string infer(const VisionRequest& req) = 0;
};

class AudioLanguageModel {
 public:
  virtual ~AudioLanguageModel() = default;
  virtual std::string id() const = 0;
  virtual std::string infer(const AudioRequest& req) = 0;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual std::string id() const = 0;
  virtual std::optional<BoundingBox> detect(const Image& frame, const FrameContext& ctx) = 0;
};

class PoseEstimator {
 public:
  virtual ~PoseEstimator() = default;
  virtual std::string id() const = 0;
  virtual Skeleton estimate(const Image& frame, const FrameContext& ctx) = 0;
};

class SpeechEnhancer {
 public:
  virtual ~SpeechEnhancer() = default;
  virtual std::string id() const = 0;
  virtual AudioClip enhance(const AudioClip& clip, const FrameContext& ctx) = 0;
};

class SpeechRecognizer {
 public:
  virtual ~SpeechRecognizer() = default;
  virtual std::string id() const = 0;
  virtual std::string transcribe(const AudioClip& clip, const FrameContext& ctx) = 0;
};

// ---- retries and concurrency ---------------------------------------------

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{100};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{5000};
};

// Delay before attempt i+2, for i in [0, max_attempts-1).
inline std::vector<std::chrono::milliseconds> backoff_schedule(const RetryPolicy& p) {
  std::vector<std::chrono::milliseconds> out;
  double d = static_cast<double>(p.initial_delay.count());
  for (int i = 1; i < p.max_attempts; ++i) {
    out.emplace_back(std::min<std::int64_t>(static_cast<std::int64_t>(d), p.max_delay.count()));
    d *= std::max(1.0, p.multiplier);
  }
  return out;
}

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

// Bounds the number of in-flight calls to one backend.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit) : limit_(std::max(1, limit)) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      --in_flight_;
    }
    cv_.notify_one();
  }
  int limit() const { return limit_; }
  int peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter& l) : l_(l) { l_.acquire(); }
    ~Slot() { l_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter& l_;
  };

 private:
  const int limit_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

// Attempt counters per role, shared across every handle of a BackendSet.
class CallStats {
 public:
  void record(BackendRole r) { counts_[static_cast<std::size_t>(r)].fetch_add(1); }
  std::int64_t calls(BackendRole r) const { return counts_[static_cast<std::size_t>(r)].load(); }
  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& c : counts_) n += c.load();
    return n;
  }
  void reset() {
    for (auto& c : counts_) c.store(0);
  }

 private:
  std::array<std::atomic<std::int64_t>, kAllRoles.size()> counts_{};
};

template <typename Impl>
struct BackendHandle {
  std::shared_ptr<Impl> impl;
  BackendRole role = BackendRole::vlm;
  RetryPolicy retry;
  std::shared_ptr<ConcurrencyLimiter> limiter = std::make_shared<ConcurrencyLimiter>(4);
  std::shared_ptr<CallStats> stats = std::make_shared<CallStats>();
  Sleeper sleep = real_sleeper();

  std::string id() const { return impl ? impl->id() : std::string("<unset>"); }

  // Runs `fn` under the concurrency limit, retrying TransientError with
  // exponential backoff. Returns the value and the attempt that produced it.
  template <typename F>
  auto call(F&& fn) -> std::pair<decltype(fn(*impl)), int> {
    if (!impl) throw BackendError(std::string(to_string(role)) + " backend not configured");
    const auto delays = backoff_schedule(retry);
    const int attempts = std::max(1, retry.max_attempts);
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      try {
        stats->record(role);
        ConcurrencyLimiter::Slot slot(*limiter);
        return {fn(*impl), attempt};
      } catch (const TransientError& e) {
        last_error = e.what();
      }
      if (attempt < attempts && sleep) sleep(delays[static_cast<std::size_t>(attempt - 1)]);
    }
    throw BackendError(std::string(to_string(role)) + " backend '" + id() + "' failed after " +
                       std::to_string(attempts) + " attempts: " + last_error);
  }
};

using VisionHandle = BackendHandle<VisionLanguageModel>;
using AudioHandle = BackendHandle<AudioLanguageModel>;
using FaceHandle = BackendHandle<FaceDetector>;
using PoseHandle = BackendHandle<PoseEstimator>;
using EnhancerHandle = BackendHandle<SpeechEnhancer>;
using RecognizerHandle = BackendHandle<SpeechRecognizer>;

namespace detail {

template <typename Handle, typename F>
BackendResponse timed_text_call(Handle& h, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  auto [text, attempt] = h.call(std::forward<F>(fn));
  if (trim(text).empty())
    throw ProtocolError(std::string(to_string(h.role)) + " backend '" + h.id() +
                        "' returned an empty reply");
  const auto t1 = std::chrono::steady_clock::now();
  return {std::move(text),
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count(), h.id(),
          attempt};
}

}  // namespace detail

inline BackendResponse vlm_infer(const VisionRequest& req, VisionHandle& backend) {
  req.validate();
  return detail::timed_text_call(backend, [&](VisionLanguageModel& m) { return m.infer(req); });
}

inline BackendResponse alm_infer(const AudioRequest& req, AudioHandle& backend) {
  req.validate();
  return detail::timed_text_call(backend, [&](AudioLanguageModel& m) { return m.infer(req); });
}

inline std::optional<BoundingBox> detect_faces(const Image& frame, FaceHandle& backend,
                                               const FrameContext& ctx = {}) {
  if (frame.empty()) throw ParameterError("empty frame");
  return backend.call([&](FaceDetector& d) { return d.detect(frame, ctx); }).first;
}

inline Skeleton estimate_pose(const Image& frame, PoseHandle& backend,
                              const FrameContext& ctx = {}) {
  if (frame.empty()) throw ParameterError("empty frame");
  auto s = backend.call([&](PoseEstimator& p) { return p.estimate(frame, ctx); }).first;
  s.validate();
  return s;
}

// ---- mocks ----------------------------------------------------------------

// Forces a "No" answer for matching (style, category) requests; used to
// model prompt styles that hurt some feature groups.
struct StylePenalty {
  PromptStyle style = PromptStyle::simple;
  std::optional<Category> category;
  std::set<std::string> features;

  bool applies(const RequestContext& c) const {
    if (c.style != style) return false;
    if (category && c.category != *category) return false;
    return features.empty() || features.count(c.feature_id) > 0;
  }
};

struct MockDecisionOptions {
  double noise_rate = 0.0;  // probability that a decision is flipped
  std::uint64_t seed = 0;
  std::vector<StylePenalty> penalties;
};

inline std::string human_name(std::string_view feature_id) {
  std::string s(feature_id);
  for (auto& c : s)
    if (c == '_') c = ' ';
  return s;
}

namespace detail {

// Planted label, optionally flipped by a seeded coin keyed by
// (video, feature, segment), then overridden by style penalties.
inline bool mock_decision(bool planted, const RequestContext& c, const MockDecisionOptions& o) {
  bool yes = planted;
  if (o.noise_rate > 0) {
    const double u =
        KeyHash(o.seed).add(c.video_id).add(c.feature_id).add(std::int64_t{c.segment_index}).unit();
    if (u < o.noise_rate) yes = !yes;
  }
  for (const auto& p : o.penalties)
    if (p.applies(c)) yes = false;
  return yes;
}

}  // namespace detail

class MockVisionModel : public VisionLanguageModel {
 public:
  explicit MockVisionModel(MockDecisionOptions opts = {},
                           std::shared_ptr<SidecarCache> cache = std::make_shared<SidecarCache>())
      : opts_(std::move(opts)), cache_(std::move(cache)) {}

  std::string id() const override { return "mock:vlm"; }

  std::string infer(const VisionRequest& req) override {
    const auto& c = req.context;
    const auto labels = cache_->labels(c.media_path);
    const bool planted = labels->active_in(c.feature_id, c.start_s, c.end_s);
    const auto name = human_name(c.feature_id);
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1);
    if (detail::mock_decision(planted, c, opts_)) {
      ss << "Yes, the patient shows " << name << " between " << c.start_s << " and " << c.end_s
         << " seconds across " << req.frames.size() << " frames.";
    } else {
      ss << "No, the patient does not exhibit " << name << " in this segment.";
    }
    return ss.str();
  }

 private:
  MockDecisionOptions opts_;
  std::shared_ptr<SidecarCache> cache_;
};

class MockAudioModel : public AudioLanguageModel {
 public:
  explicit MockAudioModel(MockDecisionOptions opts = {},
                          std::shared_ptr<SidecarCache> cache = std::make_shared<SidecarCache>())
      : opts_(std::move(opts)), cache_(std::move(cache)) {}

  std::string id() const override { return "mock:alm"; }

  std::string infer(const AudioRequest& req) override {
    const auto& c = req.context;
    const auto labels = cache_->labels(c.media_path);
    const auto name = human_name(c.feature_id);
    if (detail::mock_decision(labels->present(c.feature_id), c, opts_))
      return "Yes, the recording contains " + name + " from the patient.";
    return "No, there is no " + name + " in the recording.";
  }

 private:
  MockDecisionOptions opts_;
  std::shared_ptr<SidecarCache> cache_;
};

class MockFaceDetector : public FaceDetector {
 public:
  explicit MockFaceDetector(std::shared_ptr<SidecarCache> cache = std::make_shared<SidecarCache>())
      : cache_(std::move(cache)) {}
  std::string id() const override { return "mock:face"; }

  std::optional<BoundingBox> detect(const Image& frame, const FrameContext& ctx) override {
    if (frame.uniform() || ctx.media_path.empty() || ctx.frame_index < 0) return std::nullopt;
    const auto track = cache_->faces(ctx.media_path);
    if (ctx.frame_index >= static_cast<std::int64_t>(track->size())) return std::nullopt;
    return (*track)[static_cast<std::size_t>(ctx.frame_index)];
  }

 private:
  std::shared_ptr<SidecarCache> cache_;
};

class MockPoseEstimator : public PoseEstimator {
 public:
  explicit MockPoseEstimator(std::shared_ptr<SidecarCache> cache = std::make_shared<SidecarCache>())
      : cache_(std::move(cache)) {}
  std::string id() const override { return "mock:pose"; }

  Skeleton estimate(const Image& frame, const FrameContext& ctx) override {
    if (frame.uniform() || ctx.media_path.empty() || ctx.frame_index < 0) return {};
    const auto track = cache_->skeletons(ctx.media_path);
    if (ctx.frame_index >= static_cast<std::int64_t>(track->size())) return {};
    Skeleton s = (*track)[static_cast<std::size_t>(ctx.frame_index)];
    for (auto& k : s.keypoints) k.confidence = 1.0;
    return s;
  }

 private:
  std::shared_ptr<SidecarCache> cache_;
};

class IdentityEnhancer : public SpeechEnhancer {
 public:
  std::string id() const override { return "mock:enhance"; }
  AudioClip enhance(const AudioClip& clip, const FrameContext&) override { return clip; }
};

class GainEnhancer : public SpeechEnhancer {
 public:
  explicit GainEnhancer(float gain) : gain_(gain) {}
  std::string id() const override { return "mock:enhance-gain:" + std::to_string(gain_); }
  AudioClip enhance(const AudioClip& clip, const FrameContext&) override {
    AudioClip out = clip;
    for (auto& s : out.samples) s *= gain_;
    return out;
  }

 private:
  float gain_;
};

class MockRecognizer : public SpeechRecognizer {
 public:
  explicit MockRecognizer(std::shared_ptr<SidecarCache> cache = std::make_shared<SidecarCache>())
      : cache_(std::move(cache)) {}
  std::string id() const override { return "mock:asr"; }
  std::string transcribe(const AudioClip&, const FrameContext& ctx) override {
    if (ctx.media_path.empty()) return {};
    return *cache_->utterance(ctx.media_path);
  }

 private:
  std::shared_ptr<SidecarCache> cache_;
};

// Every call fails transiently; stands in for an unreachable service.
class DownBackend : public VisionLanguageModel,
                    public AudioLanguageModel,
                    public FaceDetector,
                    public PoseEstimator,
                    public SpeechEnhancer,
                    public SpeechRecognizer {
 public:
  std::string id() const override { return "mock:down"; }
  std::string infer(const VisionRequest&) override { fail(); }
  std::string infer(const AudioRequest&) override { fail(); }
  std::optional<BoundingBox> detect(const Image&, const FrameContext&) override { fail(); }
  Skeleton estimate(const Image&, const FrameContext&) override { fail(); }
  AudioClip enhance(const AudioClip&, const FrameContext&) override { fail(); }
  std::string transcribe(const AudioClip&, const FrameContext&) override { fail(); }

 private:
  [[noreturn]] static void fail() { throw TransientError("connection refused (mock:down)"); }
};

// ---- HTTP -----------------------------------------------------------------

struct HttpEndpoint {
  std::string base_url;  // scheme://host:port
  std::string token;
  double timeout_s = 30.0;
};

inline json image_to_json(const Image& img) {
  return {{"width", img.width},
          {"height", img.height},
          {"format", "rgb24"},
          {"data", base64_encode(std::string_view(reinterpret_cast<const char*>(img.rgb.data()),
                                                  img.rgb.size()))}};
}

inline Image image_from_json(const json& j) {
  Image img;
  img.width = j.at("width").get<int>();
  img.height = j.at("height").get<int>();
  const auto raw = base64_decode(j.at("data").get<std::string>());
  if (img.width <= 0 || img.height <= 0 || raw.size() != std::size_t(img.width) * img.height * 3)
    throw ProtocolError("image payload size mismatch");
  img.rgb.assign(raw.begin(), raw.end());
  return img;
}

inline json audio_to_json(const AudioClip& clip) {
  std::string pcm;
  pcm.reserve(clip.samples.size() * 2);
  for (float s : clip.samples) {
    const auto v = static_cast<std::uint16_t>(to_pcm16(s));
    pcm += static_cast<char>(v & 0xff);
    pcm += static_cast<char>(v >> 8);
  }
  return {{"sample_rate", clip.sample_rate}, {"format", "pcm_s16le"}, {"data", base64_encode(pcm)}};
}

inline AudioClip audio_from_json(const json& j) {
  AudioClip clip;
  clip.sample_rate = j.at("sample_rate").get<int>();
  const auto raw = base64_decode(j.at("data").get<std::string>());
  if (raw.size() % 2) throw ProtocolError("odd PCM payload length");
  clip.samples.resize(raw.size() / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(raw[2 * i]) |
                                              (static_cast<unsigned char>(raw[2 * i + 1]) << 8));
    clip.samples[i] = static_cast<float>(static_cast<std::int16_t>(v)) / 32767.0f;
  }
  return clip;
}

// POSTs JSON bodies to `<base_url><path>`. Transport failures, 429 and 5xx
// are transient; other statuses, empty bodies and non-JSON replies are
// protocol errors.
class HttpTransport {
 public:
  explicit HttpTransport(HttpEndpoint ep) : ep_(std::move(ep)) {
    if (ep_.base_url.empty()) throw ConfigError("HTTP backend needs a base URL");
  }

  const HttpEndpoint& endpoint() const { return ep_; }

  json post(const std::string& path, const json& body) const {
    httplib::Client cli(ep_.base_url);
    const auto secs = static_cast<time_t>(ep_.timeout_s);
    const auto usecs = static_cast<time_t>((ep_.timeout_s - double(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!ep_.token.empty()) headers.emplace("Authorization", "Bearer " + ep_.token);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransientError("HTTP " + ep_.base_url + path + ": " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
      throw TransientError("HTTP " + std::to_string(res->status) + " from " + ep_.base_url + path);
    if (res->status != 200)
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + ep_.base_url + path);
    if (trim(res->body).empty()) throw ProtocolError("empty reply from " + ep_.base_url + path);
    try {
      return json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ProtocolError("malformed JSON reply from " + ep_.base_url + path);
    }
  }

 private:
  HttpEndpoint ep_;
};

namespace detail {
inline std::string reply_text(const json& j, const std::string& origin) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    throw ProtocolError("reply from " + origin + " lacks a 'text' string");
  return j["text"].get<std::string>();
}
}  // namespace detail

// Generic vision adapter. `max_frames` > 0 subsamples frames evenly before
// sending, for services with tight context limits.
class HttpVisionModel : public VisionLanguageModel {
 public:
  HttpVisionModel(std::string adapter, HttpEndpoint ep, int max_frames = 0)
      : adapter_(std::move(adapter)), http_(std::move(ep)), max_frames_(max_frames) {}

  std::string id() const override { return "http:" + adapter_; }

  std::string infer(const VisionRequest& req) override {
    std::vector<std::size_t> pick(req.frames.size());
    std::iota(pick.begin(), pick.end(), 0);
    if (max_frames_ > 0 && pick.size() > std::size_t(max_frames_)) {
      pick = even_subsample(req.frames.size(), std::size_t(max_frames_));
      std::clog << "[semio] " << id() << ": subsampled " << req.frames.size() << " -> "
                << pick.size() << " frames for " << req.context.video_id << "/"
                << req.context.feature_id << "#" << req.context.segment_index << "\n";
    }
    json frames = json::array();
    for (auto i : pick) frames.push_back(image_to_json(req.frames[i]));
    json body{{"role", "vlm"},
              {"adapter", adapter_},
              {"prompt", req.prompt},
              {"frames", frames},
              {"max_response_tokens", req.max_response_tokens},
              {"temperature", req.temperature},
              {"context", req.context.to_json()}};
    return detail::reply_text(http_.post("/v1/infer", body), id());
  }

  static std::vector<std::size_t> even_subsample(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(i * n / k);
    return out;
  }

 private:
  std::string adapter_;
  HttpTransport http_;
  int max_frames_;
};

class HttpAudioModel : public AudioLanguageModel {
 public:
  HttpAudioModel(std::string adapter, HttpEndpoint ep)
      : adapter_(std::move(adapter)), http_(std::move(ep)) {}
  std::string id() const override { return "http:" + adapter_; }
  std::string infer(const AudioRequest& req) override {
    json body{{"role", "alm"},
              {"adapter", adapter_},
              {"prompt", req.prompt},
              {"audio", audio_to_json(*req.clip)},
              {"transcript", req.transcript ? json(*req.transcript) : json(nullptr)},
              {"max_response_tokens", req.max_response_tokens},
              {"temperature", req.temperature},
              {"context", req.context.to_json()}};
    return detail::reply_text(http_.post("/v1/infer", body), id());
  }

 private:
  std::string adapter_;
  HttpTransport http_;
};

class HttpFaceDetector : public FaceDetector {
 public:
  HttpFaceDetector(std::string adapter, HttpEndpoint ep)
      : adapter_(std::move(adapter)), http_(std::move(ep)) {}
  std::string id() const override { return "http:" + adapter_; }
  std::optional<BoundingBox> detect(const Image& frame, const FrameContext&) override {
    const auto reply = http_.post("/v1/detect_faces", {{"frame", image_to_json(frame)}});
    if (!reply.contains("faces") || !reply["faces"].is_array())
      throw ProtocolError("detect_faces reply lacks 'faces'");
    std::optional<BoundingBox> best;
    double best_conf = -1;
    for (const auto& f : reply["faces"]) {
      const double conf = f.value("confidence", 1.0);
      if (conf > best_conf) {
        best_conf = conf;
        best = BoundingBox{f.at("x").get<double>(), f.at("y").get<double>(), f.at("w").get<double>(),
                           f.at("h").get<double>()};
      }
    }
    return best;
  }

 private:
  std::string adapter_;
  HttpTransport http_;
};

class HttpPoseEstimator : public PoseEstimator {
 public:
  HttpPoseEstimator(std::string adapter, HttpEndpoint ep)
      : adapter_(std::move(adapter)), http_(std::move(ep)) {}
  std::string id() const override { return "http:" + adapter_; }
  Skeleton estimate(const Image& frame, const FrameContext&) override {
    const auto reply = http_.post("/v1/estimate_pose", {{"frame", image_to_json(frame)}});
    if (!reply.contains("keypoints") || !reply["keypoints"].is_array())
      throw ProtocolError("estimate_pose reply lacks 'keypoints'");
    std::vector<Keypoint> kps;
    for (const auto& k : reply["keypoints"])
      kps.push_back({k.at("joint_id").get<int>(), k.at("x").get<double>(), k.at("y").get<double>(),
                     k.at("confidence").get<double>()});
    return Skeleton::with_default_edges(std::move(kps));
  }

 private:
  std::string adapter_;
  HttpTransport http_;
};

class HttpSpeechEnhancer : public SpeechEnhancer {
 public:
  HttpSpeechEnhancer(std::string adapter, HttpEndpoint ep)
      : adapter_(std::move(adapter)), http_(std::move(ep)) {}
  std::string id() const override { return "http:" + adapter_; }
  AudioClip enhance(const AudioClip& clip, const FrameContext&) override {
    const auto reply = http_.post("/v1/enhance_audio", {{"audio", audio_to_json(clip)}});
    if (!reply.contains("audio")) throw ProtocolError("enhance_audio reply lacks 'audio'");
    return audio_from_json(reply["audio"]);
  }

 private:
  std::string adapter_;
  HttpTransport http_;
};

class HttpRecognizer : public SpeechRecognizer {
 public:
  HttpRecognizer(std::string adapter, HttpEndpoint ep)
      : adapter_(std::move(adapter)), http_(std::move(ep)) {}
  std::string id() const override { return "http:" + adapter_; }
  std::string transcribe(const AudioClip& clip, const FrameContext&) override {
    const auto reply = http_.post("/v1/transcribe", {{"audio", audio_to_json(clip)}});
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string())
      throw ProtocolError("transcribe reply lacks 'text'");
    return reply["text"].get<std::string>();
  }

 private:
  std::string adapter_;
  HttpTransport http_;
};

// ---- configuration --------------------------------------------------------

struct BackendSpec {
  // "mock:<role>", "mock:down", "mock:enhance-gain:<factor>" or
  // "http:<adapter>".
  std::string id;
  HttpEndpoint endpoint;
  int max_frames = 0;
  std::optional<int> retries;
};

struct BackendConfig {
  std::map<BackendRole, BackendSpec> roles;
  int max_inflight = 4;
  RetryPolicy retry;
  MockDecisionOptions mock;

  static BackendConfig all_mocks() {
    BackendConfig c;
    for (auto r : kAllRoles) c.roles[r].id = "mock:" + std::string(to_string(r));
    return c;
  }

  // SEMIO_BACKEND_TOKEN and SEMIO_BASE_URL_<ROLE> fill in HTTP endpoints
  // where the config left them empty.
  void apply_environment() {
    const char* token = std::getenv("SEMIO_BACKEND_TOKEN");
    for (auto& [role, spec] : roles) {
      std::string var = "SEMIO_BASE_URL_" + to_upper(to_string(role));
      if (const char* url = std::getenv(var.c_str()); url && spec.endpoint.base_url.empty())
        spec.endpoint.base_url = url;
      if (token && spec.endpoint.token.empty()) spec.endpoint.token = token;
    }
  }

 private:
  static std::string to_upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }
};

struct BackendSet {
  VisionHandle vlm;
  AudioHandle alm;
  FaceHandle face;
  PoseHandle pose;
  EnhancerHandle enhancer;
  RecognizerHandle asr;
  std::shared_ptr<CallStats> stats = std::make_shared<CallStats>();
};

namespace detail {

inline void check_mock_role(const std::string& id, BackendRole role) {
  if (id != "mock:" + std::string(to_string(role)))
    throw ConfigError("backend '" + id + "' cannot serve role " + std::string(to_string(role)));
}

template <typename Handle>
void configure_handle(Handle& h, BackendRole role, const BackendConfig& cfg, const BackendSpec& spec,
                      const std::shared_ptr<CallStats>& stats) {
  h.role = role;
  h.retry = cfg.retry;
  if (spec.retries) h.retry.max_attempts = *spec.retries;
  h.limiter = std::make_shared<ConcurrencyLimiter>(cfg.max_inflight);
  h.stats = stats;
}

}  // namespace detail

inline BackendSet make_backends(const BackendConfig& cfg) {
  BackendSet set;
  auto cache = std::make_shared<SidecarCache>();
  auto down = std::make_shared<DownBackend>();
  auto spec_for = [&](BackendRole r) -> BackendSpec {
    auto it = cfg.roles.find(r);
    if (it == cfg.roles.end() || it->second.id.empty())
      return BackendSpec{"mock:" + std::string(to_string(r)), {}, 0, std::nullopt};
    return it->second;
  };
  auto adapter_of = [](const std::string& id) { return id.substr(5); };
  auto is_http = [](const std::string& id) { return id.rfind("http:", 0) == 0; };

  {
    const auto s = spec_for(BackendRole::vlm);
    if (s.id == "mock:down") set.vlm.impl = down;
    else if (is_http(s.id)) set.vlm.impl = std::make_shared<HttpVisionModel>(adapter_of(s.id), s.endpoint, s.max_frames);
    else { detail::check_mock_role(s.id, BackendRole::vlm); set.vlm.impl = std::make_shared<MockVisionModel>(cfg.mock, cache); }
    detail::configure_handle(set.vlm, BackendRole::vlm, cfg, s, set.stats);
  }
  {
    const auto s = spec_for(BackendRole::alm);
    if (s.id == "mock:down") set.alm.impl = down;
    else if (is_http(s.id)) set.alm.impl = std::make_shared<HttpAudioModel>(adapter_of(s.id), s.endpoint);
    else { detail::check_mock_role(s.id, BackendRole::alm); set.alm.impl = std::make_shared<MockAudioModel>(cfg.mock, cache); }
    detail::configure_handle(set.alm, BackendRole::alm, cfg, s, set.stats);
  }
  {
    const auto s = spec_for(BackendRole::face);
    if (s.id == "mock:down") set.face.impl = down;
    else if (is_http(s.id)) set.face.impl = std::make_shared<HttpFaceDetector>(adapter_of(s.id), s.endpoint);
    else { detail::check_mock_role(s.id, BackendRole::face); set.face.impl = std::make_shared<MockFaceDetector>(cache); }
    detail::configure_handle(set.face, BackendRole::face, cfg, s, set.stats);
  }
  {
    const auto s = spec_for(BackendRole::pose);
    if (s.id == "mock:down") set.pose.impl = down;
    else if (is_http(s.id)) set.pose.impl = std::make_shared<HttpPoseEstimator>(adapter_of(s.id), s.endpoint);
    else { detail::check_mock_role(s.id, BackendRole::pose); set.pose.impl = std::make_shared<MockPoseEstimator>(cache); }
    detail::configure_handle(set.pose, BackendRole::pose, cfg, s, set.stats);
  }
  {
    const auto s = spec_for(BackendRole::enhance);
    const std::string gain_prefix = "mock:enhance-gain:";
    if (s.id == "mock:down") set.enhancer.impl = down;
    else if (is_http(s.id)) set.enhancer.impl = std::make_shared<HttpSpeechEnhancer>(adapter_of(s.id), s.endpoint);
    else if (s.id.rfind(gain_prefix, 0) == 0) {
      try {
        set.enhancer.impl = std::make_shared<GainEnhancer>(std::stof(s.id.substr(gain_prefix.size())));
      } catch (const std::exception&) {
        throw ConfigError("bad gain in backend id '" + s.id + "'");
      }
    } else { detail::check_mock_role(s.id, BackendRole::enhance); set.enhancer.impl = std::make_shared<IdentityEnhancer>(); }
    detail::configure_handle(set.enhancer, BackendRole::enhance, cfg, s, set.stats);
  }
  {
    const auto s = spec_for(BackendRole::asr);
    if (s.id == "mock:down") set.asr.impl = down;
    else if (is_http(s.id)) set.asr.impl = std::make_shared<HttpRecognizer>(adapter_of(s.id), s.endpoint);
    else { detail::check_mock_role(s.id, BackendRole::asr); set.asr.impl = std::make_shared<MockRecognizer>(cache); }
    detail::configure_handle(set.asr, BackendRole::asr, cfg, s, set.stats);
  }
  return set;
}

}  // namespace semio
