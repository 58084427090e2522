// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Stage commands shared by the CLI and the tests. Each stage reads and writes
// the frozen output layout, so stages compose through the filesystem.

#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "semio/backends.hpp"
#include "semio/catalog.hpp"
#include "semio/detection.hpp"
#include "semio/evaluate.hpp"
#include "semio/faithfulness.hpp"
#include "semio/ingest.hpp"
#include "semio/report.hpp"

namespace semio {

enum ExitCode : int { kExitOk = 0, kExitIncomplete = 1, kExitUsage = 2 };

struct Seeds {
  std::uint64_t folds = 1;
  std::uint64_t tn_sampling = 1;
  std::uint64_t mock_noise = 1;
};

struct RunConfig {
  fs::path manifest;
  std::optional<fs::path> catalog;  // unset: bundled catalog
  fs::path out = "results";
  BackendConfig backends = BackendConfig::all_mocks();
  SegmenterConfig segmenter;
  PromptStyle style = PromptStyle::expert;
  Variant variant = Variant::enhanced;
  bool compare_enhancement = false;
  int folds = kDefaultFolds;
  Seeds seeds;
  int max_inflight = 4;
  FaceCropOptions face;
  double pose_confidence = kDefaultPoseConfidence;
  bool denoise = true;
  std::optional<std::set<std::string>> transcript_features;
  bool reference_overlay = false;
  std::ostream* log = &std::clog;

  std::vector<Variant> variants() const {
    if (compare_enhancement) return {Variant::raw, Variant::enhanced};
    return {variant};
  }

  DetectionConfig detection(Variant v) const {
    DetectionConfig d;
    d.segmenter = segmenter;
    d.style = style;
    d.variant = v;
    d.face = face;
    d.pose_confidence = pose_confidence;
    d.denoise = denoise;
    d.transcript_features = transcript_features;
    d.workers = max_inflight;
    return d;
  }

  BackendConfig backend_config() const {
    BackendConfig b = backends;
    b.max_inflight = max_inflight;
    b.mock.seed = seeds.mock_noise;
    return b;
  }

  void validate() const {
    if (manifest.empty()) throw ConfigError("no manifest given");
    if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
    if (folds < 2) throw ConfigError("need at least 2 folds");
    if (!(segmenter.segment_len_s > 0) || !(segmenter.overlap_s >= 0) ||
        !(segmenter.overlap_s < segmenter.segment_len_s) || !(segmenter.target_fps > 0))
      throw ConfigError("invalid segmentation parameters");
  }
};

namespace config_detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace config_detail

// Relative paths in the file resolve against the file's directory.
inline RunConfig load_run_config(const fs::path& path, RunConfig cfg = {}) {
  using namespace config_detail;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("bad config " + path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  const auto base = fs::absolute(path).parent_path();
  try {
    if (j.contains("manifest")) cfg.manifest = resolve(base, j["manifest"].get<std::string>());
    if (j.contains("catalog")) cfg.catalog = resolve(base, j["catalog"].get<std::string>());
    if (j.contains("out")) cfg.out = resolve(base, j["out"].get<std::string>());
    if (j.contains("style")) cfg.style = parse_prompt_style(j["style"].get<std::string>());
    if (j.contains("variant")) cfg.variant = parse_variant(j["variant"].get<std::string>());
    take(j, "compare_enhancement", cfg.compare_enhancement);
    take(j, "segment_len_s", cfg.segmenter.segment_len_s);
    take(j, "overlap_s", cfg.segmenter.overlap_s);
    take(j, "target_fps", cfg.segmenter.target_fps);
    take(j, "folds", cfg.folds);
    take(j, "max_inflight", cfg.max_inflight);
    take(j, "reference_overlay", cfg.reference_overlay);
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      take(s, "folds", cfg.seeds.folds);
      take(s, "tn_sampling", cfg.seeds.tn_sampling);
      take(s, "mock_noise", cfg.seeds.mock_noise);
    }
    if (j.contains("enhance")) {
      const auto& e = j["enhance"];
      take(e, "alpha", cfg.face.alpha);
      take(e, "pad", cfg.face.pad);
      take(e, "pose_confidence", cfg.pose_confidence);
      take(e, "denoise", cfg.denoise);
      if (e.contains("transcript_features"))
        cfg.transcript_features = e["transcript_features"].get<std::set<std::string>>();
    }
    if (j.contains("retry")) {
      const auto& r = j["retry"];
      take(r, "max_attempts", cfg.backends.retry.max_attempts);
      take(r, "multiplier", cfg.backends.retry.multiplier);
      if (r.contains("initial_delay_ms"))
        cfg.backends.retry.initial_delay = std::chrono::milliseconds(r["initial_delay_ms"].get<std::int64_t>());
      if (r.contains("max_delay_ms"))
        cfg.backends.retry.max_delay = std::chrono::milliseconds(r["max_delay_ms"].get<std::int64_t>());
    }
    if (j.contains("mock")) {
      const auto& m = j["mock"];
      take(m, "noise_rate", cfg.backends.mock.noise_rate);
      if (m.contains("penalties"))
        for (const auto& p : m["penalties"]) {
          StylePenalty sp;
          sp.style = parse_prompt_style(p.at("style").get<std::string>());
          if (p.contains("category")) sp.category = parse_category(p["category"].get<std::string>());
          if (p.contains("features")) sp.features = p["features"].get<std::set<std::string>>();
          cfg.backends.mock.penalties.push_back(std::move(sp));
        }
    }
    if (j.contains("backends"))
      for (const auto& [role, b] : j["backends"].items()) {
        auto& spec = cfg.backends.roles[parse_role(role)];
        take(b, "id", spec.id);
        take(b, "base_url", spec.endpoint.base_url);
        take(b, "token", spec.endpoint.token);
        take(b, "timeout_s", spec.endpoint.timeout_s);
        take(b, "max_frames", spec.max_frames);
        if (b.contains("retries")) spec.retries = b["retries"].get<int>();
      }
  } catch (const json::exception& e) {
    throw ConfigError("bad config " + path.string() + ": " + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {  // unknown style, category, role
    throw ConfigError("bad config " + path.string() + ": " + e.what());
  }
  return cfg;
}

// ---- shared loading ---------------------------------------------------------

inline Catalog load_catalog_for(const RunConfig& cfg) {
  return cfg.catalog ? Catalog::load(*cfg.catalog) : Catalog::load_default();
}

inline Manifest load_manifest_for(const RunConfig& cfg, const Catalog& catalog) {
  ManifestOptions opts;
  opts.catalog = &catalog;
  opts.probe = true;
  return load_manifest(cfg.manifest, opts);
}

struct Session {
  RunConfig cfg;
  Catalog catalog;
  Manifest manifest;
  OutputLayout layout;
  BackendSet backends;

  explicit Session(RunConfig c)
      : cfg(std::move(c)),
        catalog(load_catalog_for(cfg)),
        manifest(load_manifest_for(cfg, catalog)),
        layout{cfg.out} {
    auto bc = cfg.backend_config();
    bc.apply_environment();
    backends = make_backends(bc);
  }

  std::ostream& log() const {
    static std::ostream null(nullptr);
    return cfg.log ? *cfg.log : null;
  }
};

// ---- stages -----------------------------------------------------------------

inline int stage_segment(Session& s) {
  const auto plans = plan_manifest(s.manifest, s.cfg.segmenter);
  write_segment_plans(s.layout.segment_plan(), s.manifest, plans);
  std::size_t n = 0;
  for (const auto& [_, v] : plans) n += v.size();
  s.log() << "[segment] " << s.manifest.items.size() << " videos, " << n << " segments\n";
  return kExitOk;
}

inline int stage_enhance(Session& s) {
  const auto failures = run_enhancement(s.manifest, s.catalog, s.cfg.detection(Variant::enhanced),
                                        s.backends, s.layout);
  for (const auto& f : failures)
    s.log() << "[enhance] " << f.video_id << " segment " << f.segment_index << ": " << f.message << "\n";
  s.log() << "[enhance] done, " << failures.size() << " failures\n";
  return failures.empty() ? kExitOk : kExitIncomplete;
}

inline int stage_detect(Session& s) {
  int code = kExitOk;
  for (auto v : s.cfg.variants()) {
    const auto before = s.backends.stats->total();
    auto r = run_detection(s.manifest, s.catalog, s.cfg.detection(v), s.backends, s.layout);
    s.log() << "[detect:" << to_string(v) << "] tasks " << r.stats.tasks << ", skipped "
            << r.stats.skipped << ", executed " << r.stats.executed << ", failed " << r.stats.failed
            << ", backend calls " << s.backends.stats->total() - before << "\n";
    for (const auto& f : r.failures)
      s.log() << "[detect:" << to_string(v) << "] " << f.video_id << "/" << f.feature_id << " segment "
              << f.segment_index << ": " << f.message << "\n";
    if (r.incomplete() > 0) {
      s.log() << "[detect:" << to_string(v) << "] " << r.incomplete()
              << " (video, feature) pairs incomplete\n";
      code = kExitIncomplete;
    }
  }
  return code;
}

inline std::string system_id(Variant v, PromptStyle style) {
  std::string id(to_string(v));
  if (style != PromptStyle::expert) id += ":" + std::string(to_string(style));
  return id;
}

inline std::string category_label(Category c) { return std::string(to_string(c)); }

inline json system_report_to_json(const SystemReport& r) {
  json j = json::object();
  for (const auto& [f, m] : r)
    j[f] = {{"tp", m.counts.tp},        {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn},
            {"accuracy", m.metrics.accuracy}, {"precision", m.metrics.precision},
            {"recall", m.metrics.recall}, {"f1", m.metrics.f1}};
  return j;
}

inline SystemReport system_report_from_json(const json& j) {
  SystemReport r;
  for (const auto& [f, m] : j.items()) {
    FeatureMetrics fm;
    fm.counts = {m.at("tp").get<std::int64_t>(), m.at("fp").get<std::int64_t>(),
                 m.at("tn").get<std::int64_t>(), m.at("fn").get<std::int64_t>()};
    fm.metrics = metrics(fm.counts);
    r[f] = fm;
  }
  return r;
}

struct Evaluation {
  std::map<std::string, SystemReport> systems;
  std::map<std::string, std::vector<std::string>> incomplete;  // system -> features
  std::map<Variant, std::map<PromptStyle, SystemReport>> by_style;
};

// Features with any incomplete verdict are left out of that system's report.
inline Evaluation evaluate_run(const Session& s) {
  Evaluation ev;
  for (auto v : s.cfg.variants()) {
    const auto path = s.layout.verdicts(v);
    if (!fs::exists(path)) continue;
    std::map<PromptStyle, std::vector<VideoVerdict>> by_style;
    for (auto& vd : read_verdicts(path)) by_style[vd.prompt_style].push_back(std::move(vd));
    for (const auto& [style, verdicts] : by_style) {
      std::set<std::string> broken;
      for (const auto& vd : verdicts)
        if (!vd.complete) broken.insert(vd.feature_id);
      std::vector<std::string> features;
      for (const auto& id : s.catalog.ids())
        if (!broken.count(id)) features.push_back(id);
      const auto id = system_id(v, style);
      if (!broken.empty()) ev.incomplete[id] = {broken.begin(), broken.end()};
      if (features.empty()) continue;
      auto rep = evaluate_verdicts(verdicts, s.manifest, features);
      ev.systems[id] = rep;
      ev.by_style[v][style] = std::move(rep);
    }
  }
  return ev;
}

inline int stage_evaluate(Session& s) {
  const auto ev = evaluate_run(s);
  const auto plan = make_folds(patients_of(s.manifest), s.cfg.folds, s.cfg.seeds.folds);
  for (const auto& split : splits_from_plan(plan, s.manifest.video_ids(), s.manifest))
    check_no_leakage(split, s.manifest);
  json systems = json::object();
  for (const auto& [id, r] : ev.systems) systems[id] = system_report_to_json(r);
  json incomplete = json::object();
  for (const auto& [id, fs_] : ev.incomplete) incomplete[id] = fs_;
  json out = {{"systems", systems}, {"incomplete", incomplete}, {"folds", plan.to_json()}};
  write_file(s.layout.reports() / "metrics.json", out.dump(2) + "\n");

  for (const auto& [v, styles] : ev.by_style)
    if (styles.size() >= 2 && styles.count(PromptStyle::expert)) {
      const auto cmp = compare_prompt_styles(styles);
      const auto stem = s.layout.reports() / ("prompt_styles." + std::string(to_string(v)));
      write_file(stem.string() + ".json", cmp.to_json().dump(2) + "\n");
      write_file(stem.string() + ".txt", render_style_comparison(cmp));
    }
  if (s.cfg.compare_enhancement) {
    const auto raw = system_id(Variant::raw, s.cfg.style), enh = system_id(Variant::enhanced, s.cfg.style);
    if (ev.systems.count(raw) && ev.systems.count(enh)) {
      const auto delta = delta_report(ev.systems.at(raw), ev.systems.at(enh), raw, enh);
      write_file(s.layout.reports() / "enhancement_delta.json", delta.dump(2) + "\n");
      write_file(s.layout.reports() / "enhancement_delta.txt", render_delta_text(delta));
    }
  }
  s.log() << "[evaluate] " << ev.systems.size() << " systems evaluated\n";
  return ev.incomplete.empty() ? kExitOk : kExitIncomplete;
}

inline std::map<std::string, SystemReport> read_metrics(const fs::path& results_dir) {
  const auto path = OutputLayout{results_dir}.reports() / "metrics.json";
  if (!fs::exists(path)) throw ReportError("no metrics under " + results_dir.string() + "; run evaluate first");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ReportError("bad metrics file: " + std::string(e.what()));
  }
  std::map<std::string, SystemReport> out;
  for (const auto& [id, r] : j.at("systems").items()) out[id] = system_report_from_json(r);
  if (out.empty()) throw ReportError("metrics under " + results_dir.string() + " are empty");
  return out;
}

struct ReportOutput {
  Report report;
  std::string text;
};

inline ReportOutput cmd_report(const fs::path& results_dir, const Catalog& catalog, bool reference) {
  const auto measured = read_metrics(results_dir);
  std::optional<ReferenceConstants> rc;
  if (reference) rc = ReferenceConstants::load();
  ReportOutput out;
  out.report = build_report(measured, catalog, rc ? &*rc : nullptr);
  out.text = render_text(out.report, catalog);
  const auto dir = OutputLayout{results_dir}.reports();
  write_file(dir / "tables.txt", out.text);
  write_file(dir / "tables.json", report_to_json(out.report).dump(2) + "\n");
  return out;
}

inline int stage_report(Session& s) {
  const auto out = cmd_report(s.cfg.out, s.catalog, s.cfg.reference_overlay);
  s.log() << "[report] " << out.report.tables.size() << " tables, " << out.report.feature_columns()
          << " feature columns\n";
  return kExitOk;
}

inline Variant review_variant(const RunConfig& cfg) {
  return cfg.compare_enhancement ? Variant::enhanced : cfg.variant;
}

inline int stage_select_review(Session& s) {
  const auto path = s.layout.verdicts(review_variant(s.cfg));
  if (!fs::exists(path)) throw NotFoundError("no verdicts at " + path.string());
  std::vector<VideoVerdict> verdicts;
  for (auto& v : read_verdicts(path))
    if (v.prompt_style == s.cfg.style) verdicts.push_back(std::move(v));
  const auto set = select_review_set(verdicts, s.manifest.truth, s.catalog.ids(), s.cfg.seeds.tn_sampling,
                                     &s.manifest);
  save_review_set(s.layout.review() / "review_set.json", set);
  std::size_t shortfalls = 0;
  for (const auto& [_, f] : set.features) shortfalls += f.shortfall;
  s.log() << "[review] " << set.samples.size() << " samples, " << shortfalls << " features short of negatives\n";
  return kExitOk;
}

// Full pipeline. Later stages still run after an incomplete detection so that
// the complete features get reported; the exit code stays nonzero.
// `backend_calls`, when given, receives the number of backend requests made.
inline int cmd_run(const RunConfig& cfg, std::int64_t* backend_calls = nullptr) {
  cfg.validate();
  Session s(cfg);
  int code = kExitOk;
  auto worst = [&](int c) { code = std::max(code, c); };
  worst(stage_segment(s));
  bool needs_enhanced = false;
  for (auto v : cfg.variants()) needs_enhanced = needs_enhanced || v == Variant::enhanced;
  if (needs_enhanced) stage_enhance(s);  // failures resurface as incomplete detections
  worst(stage_detect(s));
  worst(stage_evaluate(s));
  try {
    stage_report(s);
  } catch (const ReportError& e) {
    s.log() << "[report] skipped: " << e.what() << "\n";
    worst(kExitIncomplete);
  }
  worst(stage_select_review(s));
  if (backend_calls) *backend_calls = s.backends.stats->total();
  s.log() << "[run] " << s.backends.stats->total() << " backend calls\n";
  return code;
}

}  // namespace semio
