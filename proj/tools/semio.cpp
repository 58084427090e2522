// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "semio/fixtures.hpp"
#include "semio/pipeline.hpp"

namespace {

using namespace semio;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct CommonFlags {
  std::string config, manifest, catalog, out, style, variant;
  bool compare = false;
  bool quiet = false;
  std::uint64_t folds_seed = 0, tn_seed = 0, noise_seed = 0;
  int max_inflight = 0;
  double noise = -1;
  std::vector<std::string> backends;
  bool reference = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration; flags override it");
  cmd->add_option("--manifest", f.manifest, "Manifest (JSONL)");
  cmd->add_option("--catalog", f.catalog, "Feature catalog (JSON); bundled one by default");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--style", f.style, "Prompt style")->check(CLI::IsMember({"expert", "simple", "ilae_concise"}));
  cmd->add_option("--variant", f.variant, "Input variant")->check(CLI::IsMember({"raw", "enhanced"}));
  cmd->add_flag("--compare-enhancement", f.compare, "Run raw and enhanced variants and report the delta");
  cmd->add_option("--folds-seed", f.folds_seed, "Seed for patient fold assignment");
  cmd->add_option("--tn-seed", f.tn_seed, "Seed for true-negative review sampling");
  cmd->add_option("--noise-seed", f.noise_seed, "Seed for mock decision noise");
  cmd->add_option("--mock-noise", f.noise, "Probability that a mock decision is flipped")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--backend", f.backends, "role=id, e.g. vlm=http:qwen or face=mock:face");
  cmd->add_option("--max-inflight", f.max_inflight, "Concurrent requests per backend")->check(CLI::PositiveNumber);
  cmd->add_flag("--reference", f.reference, "Show published reference values alongside");
  cmd->add_flag("-q,--quiet", f.quiet, "No progress output");
}

RunConfig build_config(CLI::App* cmd, const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = load_run_config(f.config);
  if (cmd->count("--manifest")) cfg.manifest = f.manifest;
  if (cmd->count("--catalog")) cfg.catalog = fs::path(f.catalog);
  if (cmd->count("--out")) cfg.out = f.out;
  if (cmd->count("--style")) cfg.style = parse_prompt_style(f.style);
  if (cmd->count("--variant")) cfg.variant = parse_variant(f.variant);
  if (f.compare) cfg.compare_enhancement = true;
  if (cmd->count("--folds-seed")) cfg.seeds.folds = f.folds_seed;
  if (cmd->count("--tn-seed")) cfg.seeds.tn_sampling = f.tn_seed;
  if (cmd->count("--noise-seed")) cfg.seeds.mock_noise = f.noise_seed;
  if (cmd->count("--mock-noise")) cfg.backends.mock.noise_rate = f.noise;
  if (cmd->count("--max-inflight")) cfg.max_inflight = f.max_inflight;
  if (f.reference) cfg.reference_overlay = true;
  for (const auto& b : f.backends) {
    const auto eq = b.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == b.size())
      throw ConfigError("--backend expects role=id, got '" + b + "'");
    cfg.backends.roles[parse_role(b.substr(0, eq))].id = b.substr(eq + 1);
  }
  if (f.quiet) cfg.log = nullptr;
  cfg.validate();
  if (!fs::exists(cfg.manifest)) throw ConfigError("manifest not found: " + cfg.manifest.string());
  return cfg;
}

int serve(const fs::path& results, const std::string& review_set, const std::string& store_path,
          const std::string& catalog_path, const std::string& host, int port, const std::string& static_dir) {
  const fs::path set_path = review_set.empty() ? OutputLayout{results}.review() / "review_set.json" : fs::path(review_set);
  const fs::path scores = store_path.empty() ? OutputLayout{results}.review() / "scores.jsonl" : fs::path(store_path);
  if (!fs::exists(set_path)) throw ConfigError("review set not found: " + set_path.string() + "; run select-review");
  const auto catalog = catalog_path.empty() ? Catalog::load_default() : Catalog::load(catalog_path);
  ScoreStore store(scores);
  ReviewService service(load_review_set(set_path), store, &catalog);
  ReviewServerOptions opts;
  opts.host = host;
  opts.port = port;
  if (const char* t = std::getenv("SEMIO_REVIEW_TOKEN"); t && *t) opts.token = t;
  if (!static_dir.empty()) opts.static_dir = static_dir;
  ReviewServer server(service, opts);
  const int bound = server.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving review API on http://" << host << ":" << bound << " (Ctrl-C to stop)" << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::cout << "stopped; scores in " << scores.string() << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semio: seizure semiology detection with multimodal model backends"};
  app.require_subcommand(1);

  std::map<std::string, CommonFlags> flags;
  std::map<std::string, CLI::App*> stages;
  for (const char* name : {"run", "segment", "enhance", "detect", "evaluate", "select-review"}) {
    auto* cmd = app.add_subcommand(name, std::string("Pipeline stage: ") + name);
    add_common(cmd, flags[name]);
    stages[name] = cmd;
  }
  stages["run"]->description("Full pipeline: segment, enhance, detect, evaluate, report, select review samples");

  auto* gen = app.add_subcommand("generate-fixtures", "Write the synthetic fixture suite and its manifest");
  std::string gen_out = "fixtures";
  SuiteOptions suite;
  std::string gen_catalog;
  std::int64_t fps = 30;
  gen->add_option("--out", gen_out, "Destination directory");
  gen->add_option("--catalog", gen_catalog, "Feature catalog");
  gen->add_option("--seed", suite.seed, "Generation seed");
  gen->add_option("--patients", suite.patients)->check(CLI::PositiveNumber);
  gen->add_option("--clips-per-patient", suite.clips_per_patient)->check(CLI::PositiveNumber);
  gen->add_option("--fps", fps)->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Render metric tables from an evaluated results directory");
  std::string rep_out = "results", rep_catalog;
  bool rep_reference = false;
  rep->add_option("--out", rep_out, "Results directory");
  rep->add_option("--catalog", rep_catalog, "Feature catalog");
  rep->add_flag("--reference", rep_reference, "Show published reference values alongside");

  auto* srv = app.add_subcommand("serve-review", "Serve the faithfulness review API");
  std::string srv_out = "results", srv_set, srv_store, srv_catalog, srv_host = "127.0.0.1", srv_static;
  int srv_port = 8765;
  srv->add_option("--out", srv_out, "Results directory");
  srv->add_option("--review-set", srv_set, "Review set file (default <out>/review/review_set.json)");
  srv->add_option("--store", srv_store, "Score store (default <out>/review/scores.jsonl)");
  srv->add_option("--catalog", srv_catalog, "Feature catalog");
  srv->add_option("--host", srv_host);
  srv->add_option("--port", srv_port)->check(CLI::Range(0, 65535));
  srv->add_option("--static-dir", srv_static, "Built review UI assets to serve at /");

  auto* sum = app.add_subcommand("summarize-scores", "Summarize faithfulness scores from a score store");
  std::string sum_store, sum_feature;
  sum->add_option("--store", sum_store, "Score store (JSONL)")->required();
  sum->add_option("--feature", sum_feature, "Restrict to one feature");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      if (fps <= 0) throw ConfigError("fps must be positive");
      suite.fps = {fps, 1};
      const auto catalog = gen_catalog.empty() ? Catalog::load_default() : Catalog::load(gen_catalog);
      const auto result = generate_suite(gen_out, catalog, suite);
      std::cout << "wrote " << result.specs.size() << " clips; manifest " << result.manifest.string() << "\n";
      return kExitOk;
    }
    if (*rep) {
      const auto catalog = rep_catalog.empty() ? Catalog::load_default() : Catalog::load(rep_catalog);
      std::cout << cmd_report(rep_out, catalog, rep_reference).text;
      return kExitOk;
    }
    if (*srv) return serve(srv_out, srv_set, srv_store, srv_catalog, srv_host, srv_port, srv_static);
    if (*sum) {
      const auto records = effective_scores_from_file(sum_store);
      std::optional<std::string> feature;
      if (!sum_feature.empty()) feature = sum_feature;
      std::cout << summary_to_json(summarize_scores(records, feature), feature).dump(2) << "\n";
      return kExitOk;
    }
    for (auto& [name, cmd] : stages) {
      if (!*cmd) continue;
      RunConfig cfg;
      try {
        cfg = build_config(cmd, flags[name]);
      } catch (const ConfigError& e) {
        std::cerr << "semio " << name << ": " << e.what() << "\n";
        return kExitUsage;
      }
      if (name == "run") return cmd_run(cfg);
      Session s(cfg);
      if (name == "segment") return stage_segment(s);
      if (name == "enhance") return stage_enhance(s);
      if (name == "detect") return stage_detect(s);
      if (name == "evaluate") return stage_evaluate(s);
      if (name == "select-review") return stage_select_review(s);
    }
  } catch (const ConfigError& e) {
    std::cerr << "semio: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "semio: " << e.what() << "\n";
    return kExitIncomplete;
  }
  return kExitUsage;
}
