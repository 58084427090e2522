// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Prompt assembly, Yes/No response parsing and any-yes aggregation of
// segment-level decisions into per-video verdicts.

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semio/catalog.hpp"
#include "semio/error.hpp"
#include "semio/io.hpp"

namespace semio {

enum class Decision { yes, no, unparseable };

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::yes: return "yes";
    case Decision::no: return "no";
    case Decision::unparseable: return "unparseable";
  }
  return "?";
}

inline Decision parse_decision(std::string_view s) {
  if (s == "yes") return Decision::yes;
  if (s == "no") return Decision::no;
  if (s == "unparseable") return Decision::unparseable;
  throw ValidationError("unknown decision '" + std::string(s) + "'");
}

struct SegmentDetection {
  std::string video_id;
  std::string feature_id;
  int segment_index = 0;
  Decision decision = Decision::unparseable;
  std::string justification;  // empty when unparseable
  std::string raw_response;
  PromptStyle prompt_style = PromptStyle::expert;

  friend bool operator==(const SegmentDetection&, const SegmentDetection&) = default;
};

struct VideoVerdict {
  std::string video_id;
  std::string feature_id;
  PromptStyle prompt_style = PromptStyle::expert;
  bool present = false;
  std::vector<int> supporting_segments;
  std::string representative_justification;
  // False when at least one segment never produced a detection.
  bool complete = true;

  friend bool operator==(const VideoVerdict&, const VideoVerdict&) = default;
};

inline constexpr std::string_view kAnswerFormatClause =
    "Answer with \"Yes\" or \"No\" as the first word, then give one sentence describing the "
    "observable evidence for your answer.";

inline constexpr std::string_view kTranscriptHeader =
    "Secondary evidence (automatic transcript of this recording; the audio itself is the "
    "primary input):";

struct BuiltPrompt {
  std::string text;
  PromptStyle used = PromptStyle::expert;
  bool fallback = false;
};

inline BuiltPrompt build_prompt(const Catalog& catalog, std::string_view feature_id,
                                PromptStyle style,
                                const std::optional<std::string>& transcript = std::nullopt) {
  const auto lookup = catalog.get_prompt(feature_id, style);
  BuiltPrompt out;
  out.used = lookup.used;
  out.fallback = lookup.fallback;
  out.text = lookup.text;
  out.text += "\n\n";
  out.text += kAnswerFormatClause;
  if (transcript) {
    out.text += "\n\n";
    out.text += kTranscriptHeader;
    out.text += "\n\"\"\"\n";
    out.text += transcript->empty() ? std::string("(no speech recognized)") : *transcript;
    out.text += "\n\"\"\"";
  }
  return out;
}

struct ParsedResponse {
  Decision decision = Decision::unparseable;
  std::string justification;
};

namespace detail {

inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

inline std::string strip_leading_punct(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) ||
                          std::ispunct(static_cast<unsigned char>(s[i]))))
    ++i;
  return std::string(trim(s.substr(i)));
}

inline constexpr std::array<std::string_view, 12> kNegativeCues = {
    "does not exhibit", "doesn't exhibit", "does not show", "doesn't show",
    "does not display", "doesn't display", "no evidence of", "is not present",
    "not observed", "is absent", "there is no", "no sign of"};

inline constexpr std::array<std::string_view, 8> kPositiveCues = {
    "exhibits", "shows", "displays", "demonstrates", "is observed", "is present", "is visible",
    "there is"};

}  // namespace detail

// Decision from the first alphabetic token ("yes"/"no", any case); failing
// that, negation/affirmation cues in the first sentence; otherwise
// unparseable.
inline ParsedResponse parse_response(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !detail::is_alpha(text[i])) ++i;
  std::size_t j = i;
  while (j < text.size() && detail::is_alpha(text[j])) ++j;
  const std::string first = to_lower(text.substr(i, j - i));
  if (first == "yes" || first == "no")
    return {first == "yes" ? Decision::yes : Decision::no,
            detail::strip_leading_punct(text.substr(j))};

  const auto end = text.find_first_of(".!?\n");
  const std::string sentence = to_lower(text.substr(0, end));
  for (auto cue : detail::kNegativeCues)
    if (sentence.find(cue) != std::string::npos) return {Decision::no, std::string(trim(text))};
  for (auto cue : detail::kPositiveCues)
    if (sentence.find(cue) != std::string::npos) return {Decision::yes, std::string(trim(text))};
  return {Decision::unparseable, {}};
}

// OR over segment decisions; unparseable counts as no.
inline VideoVerdict aggregate_any_yes(std::span<const SegmentDetection> detections) {
  if (detections.empty()) throw AggregationError("no detections to aggregate");
  const auto& head = detections.front();
  std::vector<const SegmentDetection*> ordered;
  for (const auto& d : detections) {
    if (d.video_id != head.video_id || d.feature_id != head.feature_id)
      throw AggregationError("detections span more than one (video, feature)");
    ordered.push_back(&d);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto* a, auto* b) { return a->segment_index < b->segment_index; });
  VideoVerdict v;
  v.video_id = head.video_id;
  v.feature_id = head.feature_id;
  v.prompt_style = head.prompt_style;
  const SegmentDetection* first_no = nullptr;
  for (const auto* d : ordered) {
    if (d->decision == Decision::yes) {
      if (v.supporting_segments.empty()) v.representative_justification = d->justification;
      v.supporting_segments.push_back(d->segment_index);
    } else if (d->decision == Decision::no && !first_no) {
      first_no = d;
    }
  }
  v.present = !v.supporting_segments.empty();
  if (!v.present && first_no) v.representative_justification = first_no->justification;
  return v;
}

// ---- records ----------------------------------------------------------------

inline json to_json(const SegmentDetection& d) {
  return {{"kind", "segment_detection"},
          {"video_id", d.video_id},
          {"feature_id", d.feature_id},
          {"segment_index", d.segment_index},
          {"prompt_style", to_string(d.prompt_style)},
          {"decision", to_string(d.decision)},
          {"justification", d.justification},
          {"raw_response", d.raw_response}};
}

inline SegmentDetection detection_from_json(const json& j) {
  if (j.value("kind", "") != "segment_detection")
    throw ValidationError("record is not a segment_detection");
  SegmentDetection d;
  d.video_id = j.at("video_id").get<std::string>();
  d.feature_id = j.at("feature_id").get<std::string>();
  d.segment_index = j.at("segment_index").get<int>();
  d.prompt_style = parse_prompt_style(j.at("prompt_style").get<std::string>());
  d.decision = parse_decision(j.at("decision").get<std::string>());
  d.justification = j.at("justification").get<std::string>();
  d.raw_response = j.at("raw_response").get<std::string>();
  return d;
}

inline json to_json(const VideoVerdict& v) {
  return {{"kind", "video_verdict"},
          {"video_id", v.video_id},
          {"feature_id", v.feature_id},
          {"prompt_style", to_string(v.prompt_style)},
          {"present", v.present},
          {"supporting_segments", v.supporting_segments},
          {"representative_justification", v.representative_justification},
          {"complete", v.complete}};
}

inline VideoVerdict verdict_from_json(const json& j) {
  if (j.value("kind", "") != "video_verdict") throw ValidationError("record is not a video_verdict");
  VideoVerdict v;
  v.video_id = j.at("video_id").get<std::string>();
  v.feature_id = j.at("feature_id").get<std::string>();
  v.prompt_style = parse_prompt_style(j.at("prompt_style").get<std::string>());
  v.present = j.at("present").get<bool>();
  v.supporting_segments = j.at("supporting_segments").get<std::vector<int>>();
  v.representative_justification = j.at("representative_justification").get<std::string>();
  v.complete = j.at("complete").get<bool>();
  return v;
}

inline std::vector<VideoVerdict> read_verdicts(const fs::path& path) {
  std::vector<VideoVerdict> out;
  for (const auto& j : read_jsonl(path)) out.push_back(verdict_from_json(j));
  return out;
}

inline std::vector<SegmentDetection> read_detections(const fs::path& path) {
  std::vector<SegmentDetection> out;
  if (!fs::exists(path)) return out;
  for (const auto& j : read_jsonl(path)) out.push_back(detection_from_json(j));
  return out;
}

}  // namespace semio
