// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <zlib.h>

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semio/error.hpp"

namespace semio {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = nl + 1;
  }
  return lines;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Newline-delimited JSON. Blank lines are skipped; parse errors carry the
// 1-based line number.
inline std::vector<json> parse_jsonl(std::string_view text,
                                     std::string_view what = "jsonl") {
  std::vector<json> out;
  int lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string(what) + ": line " + std::to_string(lineno) +
                            ": " + e.what());
    }
  }
  return out;
}

inline std::vector<json> read_jsonl(const fs::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

inline std::string to_jsonl_line(const json& j) { return j.dump() + "\n"; }

inline void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) out += to_jsonl_line(r);
  write_file(path, out);
}

// Append-only sink; each record is flushed as soon as it is written.
class JsonlAppender {
 public:
  explicit JsonlAppender(const fs::path& path) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot append to " + path.string());
  }
  void append(const json& record) {
    out_ << to_jsonl_line(record);
    out_.flush();
    if (!out_) throw IoError("write failed on " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

inline std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

inline std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// Sidecar format: a header line `#semio-sidecar kind=<kind> crc32=<hex>`
// followed by the body. The checksum covers the body bytes only.
inline std::string make_checksummed(std::string_view kind, std::string_view body) {
  return "#semio-sidecar kind=" + std::string(kind) + " crc32=" +
         hex32(crc32_of(body)) + "\n" + std::string(body);
}

inline std::string verify_checksummed(std::string_view content, std::string_view kind,
                                      std::string_view origin) {
  const auto nl = content.find('\n');
  if (nl == std::string_view::npos) throw FixtureError(std::string(origin) + ": missing header");
  std::string_view header = content.substr(0, nl);
  std::string_view body = content.substr(nl + 1);
  const std::string expect_prefix = "#semio-sidecar kind=" + std::string(kind) + " crc32=";
  if (header.substr(0, expect_prefix.size()) != expect_prefix)
    throw FixtureError(std::string(origin) + ": bad sidecar header");
  std::string_view crc = header.substr(expect_prefix.size());
  if (crc != hex32(crc32_of(body)))
    throw FixtureError(std::string(origin) + ": checksum mismatch");
  return std::string(body);
}

inline std::string base64_encode(std::string_view in) {
  static constexpr char kTable[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (std::uint8_t(in[i]) << 16) | (std::uint8_t(in[i + 1]) << 8) |
                            std::uint8_t(in[i + 2]);
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += kTable[(v >> 6) & 63];
    out += kTable[v & 63];
  }
  if (i + 1 == in.size()) {
    const std::uint32_t v = std::uint8_t(in[i]) << 16;
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    const std::uint32_t v = (std::uint8_t(in[i]) << 16) | (std::uint8_t(in[i + 1]) << 8);
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += kTable[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::string base64_decode(std::string_view in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    if (c == '\n' || c == '\r') continue;
    const int v = value(c);
    if (v < 0) throw ProtocolError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xff);
    }
  }
  return out;
}

// Fixed 3-decimal rendering used by every report.
inline std::string fixed3(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << v;
  return ss.str();
}

inline double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

}  // namespace semio
