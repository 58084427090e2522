// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Review-set selection, 1..5 faithfulness scores, score persistence and
// summaries, and the HTTP review service.

#include <sys/socket.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "semio/catalog.hpp"
#include "semio/detect.hpp"
#include "semio/ingest.hpp"
#include "semio/io.hpp"
#include "semio/rng.hpp"

namespace semio {

enum class Outcome { true_positive, true_negative };

inline std::string_view to_string(Outcome o) {
  return o == Outcome::true_positive ? "true_positive" : "true_negative";
}

inline Outcome parse_outcome(std::string_view s) {
  if (s == "true_positive") return Outcome::true_positive;
  if (s == "true_negative") return Outcome::true_negative;
  throw ValidationError("unknown outcome '" + std::string(s) + "'");
}

struct MediaRef {
  std::string video_id;
  std::string clip;                  // path of the source recording
  std::optional<int> segment_index;  // first supporting segment for positives

  friend bool operator==(const MediaRef&, const MediaRef&) = default;
};

struct ReviewSample {
  std::string sample_id;
  std::string video_id;
  std::string feature_id;
  Outcome outcome = Outcome::true_positive;
  std::string justification;
  MediaRef media_ref;

  friend bool operator==(const ReviewSample&, const ReviewSample&) = default;
};

inline std::string make_sample_id(std::string_view feature, std::string_view video) {
  return std::string(feature) + ":" + std::string(video);
}

struct FeatureSelection {
  std::size_t true_positives = 0;
  std::size_t true_negatives = 0;
  bool shortfall = false;  // fewer TNs available than TPs
  bool empty = false;      // no TPs at all
};

struct ReviewSet {
  std::uint64_t seed = 0;
  std::vector<ReviewSample> samples;  // sorted by sample_id
  std::map<std::string, FeatureSelection> features;

  const ReviewSample* find(std::string_view id) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), id,
                               [](const ReviewSample& s, std::string_view k) { return s.sample_id < k; });
    return it != samples.end() && it->sample_id == id ? &*it : nullptr;
  }
};

// All correctly detected positives plus as many correctly rejected negatives,
// drawn without replacement. Only complete verdicts are eligible.
inline ReviewSet select_review_set(const std::vector<VideoVerdict>& verdicts, const GroundTruth& truth,
                                   const std::vector<std::string>& features, std::uint64_t seed,
                                   const Manifest* manifest = nullptr) {
  ReviewSet set;
  set.seed = seed;
  for (const auto& feature : features) {
    std::vector<const VideoVerdict*> tps, tns;
    for (const auto& v : verdicts) {
      if (v.feature_id != feature || !v.complete) continue;
      auto tv = truth.find(v.video_id);
      if (tv == truth.end()) continue;
      auto label = tv->second.find(feature);
      if (label == tv->second.end()) continue;
      if (v.present && label->second) tps.push_back(&v);
      else if (!v.present && !label->second) tns.push_back(&v);
    }
    auto by_video = [](auto* a, auto* b) { return a->video_id < b->video_id; };
    std::sort(tps.begin(), tps.end(), by_video);
    std::sort(tns.begin(), tns.end(), by_video);
    Rng rng(KeyHash(seed).add("review").add(feature).value());
    rng.shuffle(tns);
    FeatureSelection sel;
    sel.true_positives = tps.size();
    sel.empty = tps.empty();
    sel.shortfall = !tps.empty() && tns.size() < tps.size();
    tns.resize(std::min(tns.size(), tps.size()));
    sel.true_negatives = tns.size();
    set.features[feature] = sel;
    auto add = [&](const VideoVerdict* v, Outcome o) {
      ReviewSample s;
      s.sample_id = make_sample_id(feature, v->video_id);
      s.video_id = v->video_id;
      s.feature_id = feature;
      s.outcome = o;
      s.justification = v->representative_justification;
      s.media_ref.video_id = v->video_id;
      if (manifest)
        if (const auto* m = manifest->find(v->video_id)) s.media_ref.clip = m->video_path.string();
      if (!v->supporting_segments.empty()) s.media_ref.segment_index = v->supporting_segments.front();
      set.samples.push_back(std::move(s));
    };
    for (auto* v : tps) add(v, Outcome::true_positive);
    for (auto* v : tns) add(v, Outcome::true_negative);
  }
  std::sort(set.samples.begin(), set.samples.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return set;
}

inline json media_ref_to_json(const MediaRef& m) {
  json j = {{"video_id", m.video_id}, {"clip", m.clip}};
  j["segment_index"] = m.segment_index ? json(*m.segment_index) : json(nullptr);
  return j;
}

inline json to_json(const ReviewSample& s) {
  return {{"sample_id", s.sample_id},     {"video_id", s.video_id},
          {"feature_id", s.feature_id},   {"outcome", to_string(s.outcome)},
          {"justification", s.justification}, {"media_ref", media_ref_to_json(s.media_ref)}};
}

inline ReviewSample review_sample_from_json(const json& j) {
  ReviewSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.video_id = j.at("video_id").get<std::string>();
  s.feature_id = j.at("feature_id").get<std::string>();
  s.outcome = parse_outcome(j.at("outcome").get<std::string>());
  s.justification = j.at("justification").get<std::string>();
  const auto& m = j.at("media_ref");
  s.media_ref.video_id = m.at("video_id").get<std::string>();
  s.media_ref.clip = m.at("clip").get<std::string>();
  if (!m.at("segment_index").is_null()) s.media_ref.segment_index = m.at("segment_index").get<int>();
  return s;
}

inline json review_set_to_json(const ReviewSet& set) {
  json feats = json::object();
  for (const auto& [f, s] : set.features)
    feats[f] = {{"true_positives", s.true_positives},
                {"true_negatives", s.true_negatives},
                {"shortfall", s.shortfall},
                {"empty", s.empty}};
  json samples = json::array();
  for (const auto& s : set.samples) samples.push_back(to_json(s));
  return {{"format", "semio-review-set/1"}, {"seed", set.seed}, {"features", feats}, {"samples", samples}};
}

inline ReviewSet review_set_from_json(const json& j) {
  if (j.value("format", "") != "semio-review-set/1") throw ValidationError("not a semio review set");
  ReviewSet set;
  set.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [f, s] : j.at("features").items())
    set.features[f] = {s.at("true_positives").get<std::size_t>(), s.at("true_negatives").get<std::size_t>(),
                       s.at("shortfall").get<bool>(), s.at("empty").get<bool>()};
  for (const auto& s : j.at("samples")) set.samples.push_back(review_sample_from_json(s));
  std::sort(set.samples.begin(), set.samples.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return set;
}

inline void save_review_set(const fs::path& path, const ReviewSet& set) {
  write_file(path, review_set_to_json(set).dump(2) + "\n");
}

inline ReviewSet load_review_set(const fs::path& path) {
  try {
    return review_set_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError("bad review set " + path.string() + ": " + e.what());
  }
}

// ---- scores -----------------------------------------------------------------

struct FaithfulnessRecord {
  std::string sample_id;
  std::string feature_id;
  std::string reviewer_id;
  int score = 0;
  std::string timestamp;  // UTC, ISO 8601
  bool overwrite = false;

  // Score s stands for s * 20% of the justification being correct.
  double correctness() const { return score * 0.2; }
};

inline bool valid_score(int s) { return s >= 1 && s <= 5; }

inline json to_json(const FaithfulnessRecord& r) {
  return {{"kind", "faithfulness_score"}, {"sample_id", r.sample_id}, {"feature_id", r.feature_id},
          {"reviewer_id", r.reviewer_id},  {"score", r.score},          {"timestamp", r.timestamp},
          {"overwrite", r.overwrite}};
}

inline FaithfulnessRecord record_from_json(const json& j) {
  FaithfulnessRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.feature_id = j.at("feature_id").get<std::string>();
  r.reviewer_id = j.at("reviewer_id").get<std::string>();
  r.score = j.at("score").get<int>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.overwrite = j.value("overwrite", false);
  if (!valid_score(r.score)) throw ValidationError("stored score out of range");
  return r;
}

struct ScoreSummary {
  std::array<std::int64_t, 5> histogram{};  // bins for scores 1..5
  std::int64_t n = 0;
  double median = 0;
  double proportion_at_least_3 = 0;
};

inline ScoreSummary summarize_values(const std::vector<int>& scores) {
  if (scores.empty()) throw SummaryError("no scores to summarize");
  ScoreSummary s;
  std::vector<int> sorted;
  for (int v : scores) {
    if (!valid_score(v)) throw SummaryError("score " + std::to_string(v) + " out of range");
    ++s.histogram[static_cast<std::size_t>(v - 1)];
    sorted.push_back(v);
  }
  std::sort(sorted.begin(), sorted.end());
  s.n = static_cast<std::int64_t>(sorted.size());
  const auto mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
  s.proportion_at_least_3 =
      static_cast<double>(s.histogram[2] + s.histogram[3] + s.histogram[4]) / static_cast<double>(s.n);
  return s;
}

// `feature` unset pools every feature.
inline ScoreSummary summarize_scores(const std::vector<FaithfulnessRecord>& records,
                                     const std::optional<std::string>& feature = std::nullopt) {
  std::vector<int> scores;
  for (const auto& r : records)
    if (!feature || r.feature_id == *feature) scores.push_back(r.score);
  if (scores.empty())
    throw SummaryError("no scores" + (feature ? " for feature '" + *feature + "'" : std::string()));
  return summarize_values(scores);
}

inline json summary_to_json(const std::optional<ScoreSummary>& s, const std::optional<std::string>& feature) {
  json hist = json::object();
  for (int b = 1; b <= 5; ++b)
    hist[std::to_string(b)] = s ? s->histogram[static_cast<std::size_t>(b - 1)] : 0;
  json j = {{"feature_id", feature ? json(*feature) : json(nullptr)}, {"n", s ? s->n : 0}, {"histogram", hist}};
  j["median"] = s ? json(s->median) : json(nullptr);
  j["proportion_at_least_3"] = s ? json(s->proportion_at_least_3) : json(nullptr);
  return j;
}

inline std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// Append-only log. The latest entry per (sample, reviewer) is the effective
// score; earlier ones stay as the audit trail.
class ScoreStore {
 public:
  ScoreStore() = default;
  explicit ScoreStore(fs::path path) : path_(std::move(path)) {
    if (fs::exists(path_))
      for (const auto& j : read_jsonl(path_)) apply(record_from_json(j));
    appender_ = std::make_unique<JsonlAppender>(path_);
  }

  // Returns true when an earlier score by the same reviewer was replaced.
  bool put(FaithfulnessRecord r) {
    std::lock_guard lock(mu_);
    r.overwrite = effective_.count({r.sample_id, r.reviewer_id}) > 0;
    if (appender_) appender_->append(to_json(r));
    apply(r);
    return r.overwrite;
  }

  std::vector<FaithfulnessRecord> effective() const {
    std::lock_guard lock(mu_);
    std::vector<FaithfulnessRecord> out;
    for (const auto& [_, r] : effective_) out.push_back(r);
    return out;
  }
  std::vector<FaithfulnessRecord> audit_trail() const {
    std::lock_guard lock(mu_);
    return log_;
  }
  bool scored(const std::string& sample, const std::string& reviewer) const {
    std::lock_guard lock(mu_);
    return effective_.count({sample, reviewer}) > 0;
  }
  const fs::path& path() const { return path_; }

 private:
  void apply(const FaithfulnessRecord& r) {
    log_.push_back(r);
    effective_[{r.sample_id, r.reviewer_id}] = r;
  }

  fs::path path_;
  std::unique_ptr<JsonlAppender> appender_;
  mutable std::mutex mu_;
  std::vector<FaithfulnessRecord> log_;
  std::map<std::pair<std::string, std::string>, FaithfulnessRecord> effective_;
};

// Offline recomputation of the effective scores straight from the log file.
inline std::vector<FaithfulnessRecord> effective_scores_from_file(const fs::path& path) {
  std::map<std::pair<std::string, std::string>, FaithfulnessRecord> latest;
  if (fs::exists(path))
    for (const auto& j : read_jsonl(path)) {
      auto r = record_from_json(j);
      latest[{r.sample_id, r.reviewer_id}] = r;
    }
  std::vector<FaithfulnessRecord> out;
  for (auto& [_, r] : latest) out.push_back(std::move(r));
  return out;
}

// ---- review service ---------------------------------------------------------

struct ApiResponse {
  int status = 200;
  json body;  // null for 204
};

// Transport-free request handling; ReviewServer maps it onto HTTP.
class ReviewService {
 public:
  using Clock = std::function<std::string()>;

  ReviewService(ReviewSet set, ScoreStore& store, const Catalog* catalog = nullptr,
                Clock clock = utc_now_iso)
      : set_(std::move(set)), store_(store), catalog_(catalog), clock_(std::move(clock)) {}

  // Blind payload: the model's decision and the ground truth are withheld.
  ApiResponse next(const std::string& reviewer) const {
    if (reviewer.empty()) return error(400, "reviewer is required");
    std::size_t scored = 0;
    const ReviewSample* pick = nullptr;
    for (const auto& s : set_.samples) {
      if (store_.scored(s.sample_id, reviewer)) ++scored;
      else if (!pick) pick = &s;
    }
    if (!pick) return {204, nullptr};
    std::string display = pick->feature_id;
    if (catalog_)
      if (const auto* f = catalog_->find(pick->feature_id)) display = f->display_name;
    return {200,
            {{"sample_id", pick->sample_id},
             {"feature_id", pick->feature_id},
             {"feature_name", display},
             {"justification", pick->justification},
             {"media_ref", media_ref_to_json(pick->media_ref)},
             {"progress", {{"scored", scored}, {"total", set_.samples.size()}}}}};
  }

  ApiResponse score(const json& body) {
    if (!body.is_object()) return error(400, "body must be a JSON object");
    if (!body.contains("sample_id") || !body["sample_id"].is_string())
      return error(400, "sample_id must be a string");
    if (!body.contains("reviewer_id") || !body["reviewer_id"].is_string() ||
        body["reviewer_id"].get<std::string>().empty())
      return error(400, "reviewer_id must be a non-empty string");
    if (!body.contains("score") || !body["score"].is_number_integer())
      return error(422, "score must be an integer between 1 and 5");
    const auto score = body["score"].get<std::int64_t>();
    if (score < 1 || score > 5) return error(422, "score must be an integer between 1 and 5");
    const auto* sample = set_.find(body["sample_id"].get<std::string>());
    if (!sample) return error(404, "unknown sample_id");
    FaithfulnessRecord r;
    r.sample_id = sample->sample_id;
    r.feature_id = sample->feature_id;
    r.reviewer_id = body["reviewer_id"].get<std::string>();
    r.score = static_cast<int>(score);
    r.timestamp = clock_();
    const bool overwrite = store_.put(r);
    return {200, {{"status", "ok"}, {"sample_id", r.sample_id}, {"overwrite", overwrite}}};
  }

  ApiResponse summary(const std::optional<std::string>& feature) const {
    std::optional<ScoreSummary> s;
    try {
      s = summarize_scores(store_.effective(), feature);
    } catch (const SummaryError&) {
    }
    return {200, summary_to_json(s, feature)};
  }

  const ReviewSet& review_set() const { return set_; }

 private:
  static ApiResponse error(int status, std::string msg) { return {status, {{"error", std::move(msg)}}}; }

  ReviewSet set_;
  ScoreStore& store_;
  const Catalog* catalog_;
  Clock clock_;
};

struct ReviewServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  std::optional<std::string> token;
  std::optional<fs::path> static_dir;
};

class ReviewServer {
 public:
  ReviewServer(ReviewService& service, ReviewServerOptions opts)
      : service_(service), opts_(std::move(opts)) {
    // The library default enables SO_REUSEPORT, which would let a second
    // server share an occupied port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    routes();
  }
  ~ReviewServer() { stop(); }

  // Binds and serves on a background thread; throws IoError when the port
  // cannot be bound.
  int start() {
    int port = opts_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(opts_.host);
      if (port < 0) throw IoError("cannot bind " + opts_.host);
    } else if (!server_.bind_to_port(opts_.host, port)) {
      throw IoError("cannot bind " + opts_.host + ":" + std::to_string(port) + " (port in use?)");
    }
    port_ = port;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }

 private:
  bool authorized(const httplib::Request& req) const {
    return !opts_.token || req.get_header_value("Authorization") == "Bearer " + *opts_.token;
  }

  static void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    if (r.status != 204) res.set_content(r.body.dump(), "application/json; charset=utf-8");
  }

  void routes() {
    server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (req.path.rfind("/api/", 0) == 0 && !authorized(req)) {
        send(res, {401, {{"error", "missing or wrong bearer token"}}});
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server_.Get("/api/review/next", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.next(req.get_param_value("reviewer")));
    });
    server_.Post("/api/review/score", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        send(res, {400, {{"error", "body is not valid JSON"}}});
        return;
      }
      send(res, service_.score(body));
    });
    server_.Get("/api/review/summary", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<std::string> feature;
      if (req.has_param("feature")) feature = req.get_param_value("feature");
      send(res, service_.summary(feature));
    });
    if (opts_.static_dir && fs::is_directory(*opts_.static_dir))
      server_.set_mount_point("/", opts_.static_dir->string());
  }

  ReviewService& service_;
  ReviewServerOptions opts_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace semio
