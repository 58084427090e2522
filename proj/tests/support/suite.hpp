// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The default fixture suite takes several seconds to render, and every test
// case runs in its own process under ctest. It is generated once into a cache
// directory keyed by the test binary's build time and reused read-only.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <string>

#include "semio/catalog.hpp"
#include "semio/fixtures.hpp"
#include "semio/ingest.hpp"

#ifndef SEMIO_TEST_CACHE_DIR
#define SEMIO_TEST_CACHE_DIR "/tmp/semio-test-cache"
#endif

namespace semio::testing {

inline std::string build_stamp() {
  std::error_code ec;
  const auto t = std::filesystem::last_write_time("/proc/self/exe", ec);
  if (ec) return "unknown";
  return std::to_string(t.time_since_epoch().count());
}

struct SuiteFixture {
  fs::path dir;
  fs::path manifest;
};

inline const SuiteFixture& default_suite() {
  static const SuiteFixture suite = [] {
    const fs::path root = SEMIO_TEST_CACHE_DIR;
    fs::create_directories(root);
    const fs::path dir = root / ("suite-" + build_stamp());
    const fs::path done = dir / ".complete";
    const int lock = ::open((root / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (lock >= 0) ::flock(lock, LOCK_EX);
    if (!fs::exists(done)) {
      for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) fs::remove_all(e.path());
      generate_suite(dir, Catalog::load_default());
      write_file(done, "ok\n");
    }
    if (lock >= 0) {
      ::flock(lock, LOCK_UN);
      ::close(lock);
    }
    return SuiteFixture{dir, dir / "manifest.jsonl"};
  }();
  return suite;
}

inline Manifest load_suite_manifest(const Catalog& catalog) {
  ManifestOptions opts;
  opts.catalog = &catalog;
  opts.probe = true;
  return load_manifest(default_suite().manifest, opts);
}

}  // namespace semio::testing
