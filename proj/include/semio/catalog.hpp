// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Inventory of semiological features: category, enhancement routing and
// prompt text per prompt style. Immutable once loaded.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semio/error.hpp"
#include "semio/io.hpp"

namespace semio {

enum class Category { facial, limb_body, audio };
enum class Enhancement { face_crop, pose_overlay, audio_chain, none };
enum class PromptStyle { expert, simple, ilae_concise };

inline constexpr std::array kAllPromptStyles = {PromptStyle::expert, PromptStyle::simple,
                                                PromptStyle::ilae_concise};
inline constexpr std::array kAllCategories = {Category::facial, Category::limb_body,
                                              Category::audio};

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::facial: return "facial";
    case Category::limb_body: return "limb_body";
    case Category::audio: return "audio";
  }
  return "?";
}

inline std::string_view to_string(Enhancement e) {
  switch (e) {
    case Enhancement::face_crop: return "face_crop";
    case Enhancement::pose_overlay: return "pose_overlay";
    case Enhancement::audio_chain: return "audio_chain";
    case Enhancement::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(PromptStyle s) {
  switch (s) {
    case PromptStyle::expert: return "expert";
    case PromptStyle::simple: return "simple";
    case PromptStyle::ilae_concise: return "ilae_concise";
  }
  return "?";
}

inline Category parse_category(std::string_view s) {
  for (auto c : kAllCategories)
    if (to_string(c) == s) return c;
  throw CatalogError("unknown category '" + std::string(s) + "'");
}

inline Enhancement parse_enhancement(std::string_view s) {
  for (auto e : {Enhancement::face_crop, Enhancement::pose_overlay, Enhancement::audio_chain,
                 Enhancement::none})
    if (to_string(e) == s) return e;
  throw CatalogError("unknown enhancement '" + std::string(s) + "'");
}

inline std::optional<PromptStyle> try_parse_prompt_style(std::string_view s) {
  for (auto p : kAllPromptStyles)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

inline PromptStyle parse_prompt_style(std::string_view s) {
  if (auto p = try_parse_prompt_style(s)) return *p;
  throw CatalogError("unknown prompt style '" + std::string(s) + "'");
}

inline Enhancement default_enhancement(Category c) {
  switch (c) {
    case Category::facial: return Enhancement::face_crop;
    case Category::limb_body: return Enhancement::pose_overlay;
    case Category::audio: return Enhancement::audio_chain;
  }
  return Enhancement::none;
}

struct FeatureSpec {
  std::string feature_id;
  std::string display_name;
  Category category = Category::facial;
  Enhancement enhancement = Enhancement::face_crop;
  std::map<PromptStyle, std::string> prompts;
  // "published" for prompt wording taken verbatim from the clinical study,
  // "reconstructed" for wording written from the feature definition.
  std::string prompt_origin = "reconstructed";
};

struct PromptLookup {
  std::string text;
  PromptStyle requested = PromptStyle::expert;
  PromptStyle used = PromptStyle::expert;
  bool fallback = false;
};

struct CatalogOptions {
  // Require the canonical 20-feature inventory (7 facial, 11 limb/body,
  // 2 audio) with category-consistent enhancement routing.
  bool strict = true;
};

inline constexpr std::size_t kCanonicalFeatureCount = 20;
inline constexpr std::array<std::size_t, 3> kCanonicalCategoryCounts = {7, 11, 2};

class Catalog {
 public:
  Catalog() = default;

  static Catalog parse(std::string_view text, CatalogOptions options = {}) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CatalogError(std::string("catalog parse error: ") + e.what());
    }
    const json& list = doc.is_object() && doc.contains("features") ? doc["features"] : doc;
    if (!list.is_array()) throw CatalogError("catalog must be a list of features");

    Catalog cat;
    for (const auto& entry : list) cat.add(parse_entry(entry), options);
    cat.validate(options);
    return cat;
  }

  static Catalog load(const fs::path& path, CatalogOptions options = {}) {
    std::string text;
    try {
      text = read_file(path);
    } catch (const IoError& e) {
      throw CatalogError(e.what());
    }
    return parse(text, options);
  }

  static fs::path default_path() { return fs::path(SEMIO_RESOURCE_DIR) / "catalog.json"; }
  static Catalog load_default() { return load(default_path()); }

  const std::vector<FeatureSpec>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  auto begin() const { return features_.begin(); }
  auto end() const { return features_.end(); }

  const FeatureSpec* find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &features_[it->second];
  }

  const FeatureSpec& feature(std::string_view id) const {
    if (const auto* f = find(id)) return *f;
    throw NotFoundError("unknown feature '" + std::string(id) + "'");
  }

  std::size_t count(Category c) const {
    std::size_t n = 0;
    for (const auto& f : features_) n += f.category == c;
    return n;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& f : features_) out.push_back(f.feature_id);
    return out;
  }

  std::vector<std::string> ids(Category c) const {
    std::vector<std::string> out;
    for (const auto& f : features_)
      if (f.category == c) out.push_back(f.feature_id);
    return out;
  }

  PromptLookup get_prompt(std::string_view id, PromptStyle style) const {
    const auto& f = feature(id);
    PromptLookup out;
    out.requested = style;
    if (auto it = f.prompts.find(style); it != f.prompts.end()) {
      out.text = it->second;
      out.used = style;
      return out;
    }
    out.text = f.prompts.at(PromptStyle::expert);
    out.used = PromptStyle::expert;
    out.fallback = true;
    return out;
  }

  json to_json() const {
    json list = json::array();
    for (const auto& f : features_) {
      json prompts = json::object();
      for (const auto& [style, text] : f.prompts) prompts[std::string(to_string(style))] = text;
      list.push_back({{"feature_id", f.feature_id},
                      {"display_name", f.display_name},
                      {"category", to_string(f.category)},
                      {"enhancement", to_string(f.enhancement)},
                      {"prompt_origin", f.prompt_origin},
                      {"prompts", prompts}});
    }
    return json{{"features", list}};
  }

 private:
  static FeatureSpec parse_entry(const json& e) {
    if (!e.is_object()) throw CatalogError("catalog entry must be an object");
    auto str = [&](const char* key) -> std::string {
      if (!e.contains(key) || !e[key].is_string())
        throw CatalogError(std::string("catalog entry missing string field '") + key + "'");
      return e[key].get<std::string>();
    };
    FeatureSpec f;
    f.feature_id = str("feature_id");
    f.display_name = str("display_name");
    f.category = parse_category(str("category"));
    f.enhancement = e.contains("enhancement") ? parse_enhancement(str("enhancement"))
                                              : default_enhancement(f.category);
    if (e.contains("prompt_origin")) f.prompt_origin = str("prompt_origin");
    if (!e.contains("prompts") || !e["prompts"].is_object())
      throw CatalogError("feature '" + f.feature_id + "' has no prompts object");
    for (const auto& [name, text] : e["prompts"].items()) {
      if (!text.is_string())
        throw CatalogError("feature '" + f.feature_id + "': prompt '" + name + "' not a string");
      f.prompts[parse_prompt_style(name)] = text.get<std::string>();
    }
    return f;
  }

  void add(FeatureSpec f, const CatalogOptions&) {
    if (f.feature_id.empty()) throw CatalogError("empty feature_id");
    if (index_.count(f.feature_id))
      throw CatalogError("duplicate feature_id '" + f.feature_id + "'");
    auto expert = f.prompts.find(PromptStyle::expert);
    if (expert == f.prompts.end() || trim(expert->second).empty())
      throw CatalogError("feature '" + f.feature_id + "' lacks an expert prompt");
    index_.emplace(f.feature_id, features_.size());
    features_.push_back(std::move(f));
  }

  void validate(const CatalogOptions& options) const {
    for (const auto& f : features_) {
      const bool routed = f.enhancement == default_enhancement(f.category);
      if (!routed && (options.strict || f.enhancement != Enhancement::none))
        throw CatalogError("feature '" + f.feature_id + "': category " +
                           std::string(to_string(f.category)) + " cannot use enhancement " +
                           std::string(to_string(f.enhancement)));
    }
    if (!options.strict) return;
    if (features_.size() != kCanonicalFeatureCount)
      throw CatalogError("expected " + std::to_string(kCanonicalFeatureCount) +
                         " features, found " + std::to_string(features_.size()));
    for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
      if (count(kAllCategories[i]) != kCanonicalCategoryCounts[i])
        throw CatalogError("category " + std::string(to_string(kAllCategories[i])) +
                           " count mismatch");
    }
  }

  std::vector<FeatureSpec> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace semio
