// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-category metric tables (metric rows, feature x system columns) in plain
// text and JSON, with optional published reference values alongside.

#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semio/catalog.hpp"
#include "semio/evaluate.hpp"
#include "semio/io.hpp"

namespace semio {

inline constexpr std::array<std::string_view, 4> kMetricNames = {"accuracy", "precision", "recall",
                                                                 "f1"};

inline double metric_value(const Metrics& m, std::string_view name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  return m.f1;
}

struct ReferenceConstants {
  std::string note;
  // category -> systems, feature -> system -> metrics
  std::map<Category, std::vector<std::string>> systems;
  std::map<std::string, std::map<std::string, Metrics>> values;
  json raw;

  static fs::path default_path() { return fs::path(SEMIO_RESOURCE_DIR) / "reference_constants.json"; }

  static ReferenceConstants load(const fs::path& path = default_path()) {
    ReferenceConstants rc;
    try {
      rc.raw = json::parse(read_file(path));
      rc.note = rc.raw.at("note").get<std::string>();
      for (const auto& [cat, table] : rc.raw.at("tables").items()) {
        const auto c = parse_category(cat);
        rc.systems[c] = table.at("systems").get<std::vector<std::string>>();
        for (const auto& [feature, by_system] : table.at("features").items())
          for (const auto& [sys, m] : by_system.items())
            rc.values[feature][sys] = {m.at("accuracy").get<double>(), m.at("precision").get<double>(),
                                       m.at("recall").get<double>(), m.at("f1").get<double>()};
      }
    } catch (const json::exception& e) {
      throw ReportError("bad reference constants " + path.string() + ": " + e.what());
    }
    return rc;
  }

  std::optional<Metrics> find(const std::string& feature, const std::string& system) const {
    auto f = values.find(feature);
    if (f == values.end()) return std::nullopt;
    auto s = f->second.find(system);
    if (s == f->second.end()) return std::nullopt;
    return s->second;
  }
};

inline constexpr std::string_view kReferencePrefix = "published:";

struct ReportTable {
  Category category = Category::facial;
  std::vector<std::string> features;
  std::vector<std::string> systems;
  std::map<std::pair<std::string, std::string>, Metrics> cells;  // (feature, system)
};

struct Report {
  std::vector<ReportTable> tables;
  std::string reference_note;

  std::size_t feature_columns() const {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.features.size();
    return n;
  }
};

// `measured` maps a system id (e.g. "raw", "enhanced") to its per-feature
// metrics. Categories with no measured feature are omitted.
inline Report build_report(const std::map<std::string, SystemReport>& measured, const Catalog& catalog,
                           const ReferenceConstants* reference = nullptr) {
  if (measured.empty()) throw ReportError("no results to report");
  Report rep;
  for (auto cat : kAllCategories) {
    ReportTable t;
    t.category = cat;
    for (const auto& id : catalog.ids(cat)) {
      bool any = false;
      for (const auto& [sys, r] : measured)
        if (auto it = r.find(id); it != r.end()) {
          t.cells[{id, sys}] = it->second.metrics;
          any = true;
        }
      if (any) t.features.push_back(id);
    }
    if (t.features.empty()) continue;
    for (const auto& [sys, _] : measured) t.systems.push_back(sys);
    if (reference && reference->systems.count(cat)) {
      for (const auto& sys : reference->systems.at(cat)) {
        const std::string col = std::string(kReferencePrefix) + sys;
        t.systems.push_back(col);
        for (const auto& f : t.features)
          if (auto m = reference->find(f, sys)) t.cells[{f, col}] = *m;
      }
    }
    rep.tables.push_back(std::move(t));
  }
  if (rep.tables.empty()) throw ReportError("results cover no catalog feature");
  if (reference) rep.reference_note = reference->note;
  return rep;
}

inline std::string render_text(const Report& rep, const Catalog& catalog) {
  std::ostringstream out;
  for (const auto& t : rep.tables) {
    out << "== " << to_string(t.category) << " ==\n";
    for (const auto& f : t.features) {
      out << catalog.feature(f).display_name << " [" << f << "]\n";
      out << "  " << std::left << std::setw(10) << "metric";
      for (const auto& s : t.systems) out << std::right << std::setw(std::max<int>(10, int(s.size()) + 2)) << s;
      out << "\n";
      for (auto name : kMetricNames) {
        out << "  " << std::left << std::setw(10) << name;
        for (const auto& s : t.systems) {
          auto it = t.cells.find({f, s});
          const std::string v = it == t.cells.end() ? "-" : fixed3(metric_value(it->second, name));
          out << std::right << std::setw(std::max<int>(10, int(s.size()) + 2)) << v;
        }
        out << "\n";
      }
    }
    out << "\n";
  }
  if (!rep.reference_note.empty())
    out << "Columns prefixed '" << kReferencePrefix << "': " << rep.reference_note << "\n";
  return out.str();
}

inline json report_to_json(const Report& rep) {
  json tables = json::array();
  for (const auto& t : rep.tables) {
    json feats = json::object();
    for (const auto& f : t.features) {
      json by_sys = json::object();
      for (const auto& s : t.systems)
        if (auto it = t.cells.find({f, s}); it != t.cells.end())
          by_sys[s] = {{"accuracy", round_to(it->second.accuracy, 3)},
                       {"precision", round_to(it->second.precision, 3)},
                       {"recall", round_to(it->second.recall, 3)},
                       {"f1", round_to(it->second.f1, 3)}};
      feats[f] = by_sys;
    }
    tables.push_back({{"category", to_string(t.category)}, {"systems", t.systems}, {"features", feats}});
  }
  json j = {{"tables", tables}};
  if (!rep.reference_note.empty()) j["reference_note"] = rep.reference_note;
  return j;
}

// F1 of `other` minus F1 of `base`, per feature present in both.
inline json delta_report(const SystemReport& base, const SystemReport& other,
                         const std::string& base_id, const std::string& other_id) {
  json rows = json::array();
  for (const auto& [f, m] : base) {
    auto it = other.find(f);
    if (it == other.end()) continue;
    rows.push_back({{"feature_id", f},
                    {base_id + "_f1", round_to(m.metrics.f1, 3)},
                    {other_id + "_f1", round_to(it->second.metrics.f1, 3)},
                    {"delta_f1", round_to(it->second.metrics.f1 - m.metrics.f1, 3)}});
  }
  return {{"base", base_id}, {"other", other_id}, {"rows", rows}};
}

inline std::string render_delta_text(const json& delta) {
  std::ostringstream out;
  const auto base = delta.at("base").get<std::string>(), other = delta.at("other").get<std::string>();
  out << std::left << std::setw(28) << "feature" << std::right << std::setw(12) << base
      << std::setw(12) << other << std::setw(10) << "delta" << "\n";
  for (const auto& r : delta.at("rows")) {
    out << std::left << std::setw(28) << r.at("feature_id").get<std::string>() << std::right
        << std::setw(12) << fixed3(r.at(base + "_f1").get<double>()) << std::setw(12)
        << fixed3(r.at(other + "_f1").get<double>()) << std::setw(10)
        << fixed3(r.at("delta_f1").get<double>()) << "\n";
  }
  return out.str();
}

inline std::string render_style_comparison(const StyleComparison& cmp) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "feature";
  for (auto s : cmp.styles) out << std::right << std::setw(14) << to_string(s);
  for (auto s : cmp.styles)
    if (s != cmp.baseline) out << std::setw(16) << ("d(" + std::string(to_string(s)) + ")");
  out << "  zero-F1\n";
  for (const auto& r : cmp.rows) {
    out << std::left << std::setw(28) << r.feature_id;
    for (auto s : cmp.styles) out << std::right << std::setw(14) << fixed3(r.f1.at(s));
    for (auto s : cmp.styles)
      if (s != cmp.baseline) out << std::setw(16) << fixed3(r.delta.at(s));
    out << "  ";
    for (std::size_t i = 0; i < r.zero_f1.size(); ++i)
      out << (i ? "," : "") << to_string(r.zero_f1[i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace semio
