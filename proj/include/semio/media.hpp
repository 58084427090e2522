// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// On-disk media: a compressed raw-RGB frame container (".svid") with
// per-frame random access, and 16-bit PCM WAV audio.

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "semio/error.hpp"
#include "semio/io.hpp"
#include "semio/types.hpp"

namespace semio {

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out += static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
}

template <typename T>
T get_le(const char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return static_cast<T>(v);
}

inline constexpr char kVideoMagic[8] = {'S', 'E', 'M', 'I', 'O', 'V', '1', '\0'};
inline constexpr std::size_t kVideoHeaderSize = 8 + 5 * 4;
inline constexpr std::size_t kVideoIndexEntry = 8 + 3 * 4;

}  // namespace detail

struct VideoInfo {
  int width = 0;
  int height = 0;
  Rational fps;
  std::int64_t frame_count = 0;

  double duration_s() const { return static_cast<double>(frame_count) / fps.value(); }
};

class VideoWriter {
 public:
  VideoWriter(int width, int height, Rational fps) : width_(width), height_(height), fps_(fps) {
    if (width <= 0 || height <= 0 || !fps.valid())
      throw ParameterError("invalid video parameters");
  }

  // Frames may differ in size from the nominal dimensions (cropped clips).
  void add(const Image& frame) {
    uLongf bound = compressBound(static_cast<uLong>(frame.rgb.size()));
    std::string blob(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(blob.data()), &bound,
                  reinterpret_cast<const Bytef*>(frame.rgb.data()),
                  static_cast<uLong>(frame.rgb.size()), 6) != Z_OK)
      throw IoError("frame compression failed");
    blob.resize(bound);
    frames_.push_back({std::move(blob), frame.width, frame.height});
  }

  std::size_t frame_count() const { return frames_.size(); }

  std::string bytes() const {
    std::string out(detail::kVideoMagic, sizeof detail::kVideoMagic);
    detail::put_le<std::uint32_t>(out, width_);
    detail::put_le<std::uint32_t>(out, height_);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fps_.num));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fps_.den));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frames_.size()));
    std::uint64_t offset = detail::kVideoHeaderSize + frames_.size() * detail::kVideoIndexEntry;
    for (const auto& f : frames_) {
      detail::put_le<std::uint64_t>(out, offset);
      detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.blob.size()));
      detail::put_le<std::uint32_t>(out, f.width);
      detail::put_le<std::uint32_t>(out, f.height);
      offset += f.blob.size();
    }
    for (const auto& f : frames_) out += f.blob;
    return out;
  }

  void save(const fs::path& path) const { write_file(path, bytes()); }

 private:
  struct Encoded {
    std::string blob;
    int width, height;
  };
  int width_, height_;
  Rational fps_;
  std::vector<Encoded> frames_;
};

class VideoReader {
 public:
  explicit VideoReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open video " + path.string());
    char header[detail::kVideoHeaderSize];
    if (!in_.read(header, sizeof header) ||
        std::memcmp(header, detail::kVideoMagic, sizeof detail::kVideoMagic) != 0)
      throw IoError("not a semio video container: " + path.string());
    info_.width = detail::get_le<std::uint32_t>(header + 8);
    info_.height = detail::get_le<std::uint32_t>(header + 12);
    info_.fps = {detail::get_le<std::uint32_t>(header + 16),
                 detail::get_le<std::uint32_t>(header + 20)};
    info_.frame_count = detail::get_le<std::uint32_t>(header + 24);
    if (info_.width <= 0 || info_.height <= 0 || !info_.fps.valid())
      throw IoError("corrupt video header: " + path.string());
    std::string index(static_cast<std::size_t>(info_.frame_count) * detail::kVideoIndexEntry, '\0');
    if (!in_.read(index.data(), static_cast<std::streamsize>(index.size())))
      throw IoError("truncated video index: " + path.string());
    entries_.resize(static_cast<std::size_t>(info_.frame_count));
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const char* p = index.data() + i * detail::kVideoIndexEntry;
      entries_[i] = {detail::get_le<std::uint64_t>(p), detail::get_le<std::uint32_t>(p + 8),
                     detail::get_le<std::uint32_t>(p + 12),
                     detail::get_le<std::uint32_t>(p + 16)};
    }
  }

  const VideoInfo& info() const { return info_; }

  Image frame(std::int64_t index) {
    if (index < 0 || index >= info_.frame_count)
      throw ParameterError("frame index " + std::to_string(index) + " out of range");
    const auto& e = entries_[static_cast<std::size_t>(index)];
    std::string blob(e.size, '\0');
    {
      std::lock_guard lock(mu_);
      in_.clear();
      in_.seekg(static_cast<std::streamoff>(e.offset));
      if (!in_.read(blob.data(), e.size)) throw IoError("truncated frame in " + path_.string());
    }
    Image img;
    img.width = static_cast<int>(e.width);
    img.height = static_cast<int>(e.height);
    img.rgb.resize(std::size_t(e.width) * e.height * 3);
    uLongf len = static_cast<uLongf>(img.rgb.size());
    if (uncompress(img.rgb.data(), &len, reinterpret_cast<const Bytef*>(blob.data()), e.size) !=
            Z_OK ||
        len != img.rgb.size())
      throw IoError("corrupt frame in " + path_.string());
    return img;
  }

  std::vector<Image> frames(const std::vector<std::int64_t>& indices) {
    std::vector<Image> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(frame(i));
    return out;
  }

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint32_t size, width, height;
  };
  fs::path path_;
  std::ifstream in_;
  std::mutex mu_;
  VideoInfo info_;
  std::vector<Entry> entries_;
};

inline VideoInfo probe_video(const fs::path& path) { return VideoReader(path).info(); }

inline void save_frames(const fs::path& path, const std::vector<Image>& frames, Rational fps) {
  if (frames.empty()) throw ParameterError("no frames to save");
  VideoWriter w(frames.front().width, frames.front().height, fps);
  for (const auto& f : frames) w.add(f);
  w.save(path);
}

inline std::vector<Image> load_all_frames(const fs::path& path) {
  VideoReader r(path);
  std::vector<Image> out;
  for (std::int64_t i = 0; i < r.info().frame_count; ++i) out.push_back(r.frame(i));
  return out;
}

// ---- WAV -----------------------------------------------------------------

inline std::int16_t to_pcm16(float v) {
  const float c = std::clamp(v, -1.0f, 1.0f);
  return static_cast<std::int16_t>(std::lround(c * 32767.0f));
}
inline float from_pcm16(std::int16_t s) { return static_cast<float>(s) / 32767.0f; }

inline std::string wav_bytes(const AudioClip& clip) {
  clip.validate();
  const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out = "RIFF";
  detail::put_le<std::uint32_t>(out, 36 + data_size);
  out += "WAVEfmt ";
  detail::put_le<std::uint32_t>(out, 16);
  detail::put_le<std::uint16_t>(out, 1);  // PCM
  detail::put_le<std::uint16_t>(out, 1);  // mono
  detail::put_le<std::uint32_t>(out, clip.sample_rate);
  detail::put_le<std::uint32_t>(out, clip.sample_rate * 2);
  detail::put_le<std::uint16_t>(out, 2);
  detail::put_le<std::uint16_t>(out, 16);
  out += "data";
  detail::put_le<std::uint32_t>(out, data_size);
  for (float s : clip.samples) detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(to_pcm16(s)));
  return out;
}

inline void write_wav(const fs::path& path, const AudioClip& clip) {
  write_file(path, wav_bytes(clip));
}

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits = 0;
  std::int64_t frames = 0;
  double duration_s() const { return sample_rate ? double(frames) / sample_rate : 0.0; }
};

namespace detail {

struct ParsedWav {
  WavInfo info;
  int format = 0;
  std::string_view data;
};

inline ParsedWav parse_wav(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE")
    throw IoError("not a WAV file: " + origin);
  ParsedWav out;
  bool have_fmt = false, have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.substr(pos, 4);
    const auto size = get_le<std::uint32_t>(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && id != "data") throw IoError("truncated WAV: " + origin);
    if (id == "fmt ") {
      out.format = get_le<std::uint16_t>(bytes.data() + body);
      out.info.channels = get_le<std::uint16_t>(bytes.data() + body + 2);
      out.info.sample_rate = static_cast<int>(get_le<std::uint32_t>(bytes.data() + body + 4));
      out.info.bits = get_le<std::uint16_t>(bytes.data() + body + 14);
      have_fmt = true;
    } else if (id == "data") {
      out.data = bytes.substr(body, std::min<std::size_t>(size, bytes.size() - body));
      have_data = true;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || !have_data) throw IoError("WAV missing fmt/data chunk: " + origin);
  if (out.info.channels <= 0 || out.info.sample_rate <= 0)
    throw IoError("invalid WAV format: " + origin);
  const bool pcm16 = out.format == 1 && out.info.bits == 16;
  const bool f32 = out.format == 3 && out.info.bits == 32;
  if (!pcm16 && !f32) throw IoError("unsupported WAV encoding: " + origin);
  out.info.frames =
      static_cast<std::int64_t>(out.data.size() / (out.info.bits / 8) / out.info.channels);
  return out;
}

}  // namespace detail

inline WavInfo probe_wav(const fs::path& path) {
  return detail::parse_wav(read_file(path), path.string()).info;
}

// Linear-interpolation resampler; adequate for bringing ingest audio to the
// canonical rate, not a quality resampler.
inline AudioClip resample_linear(const AudioClip& in, int rate) {
  if (in.sample_rate == rate || in.samples.empty()) return {in.samples, rate};
  const double ratio = double(in.sample_rate) / rate;
  const auto n = static_cast<std::size_t>(std::llround(in.samples.size() / ratio));
  AudioClip out{std::vector<float>(n), rate};
  for (std::size_t i = 0; i < n; ++i) {
    const double src = i * ratio;
    const auto i0 = static_cast<std::size_t>(src);
    const auto i1 = std::min(i0 + 1, in.samples.size() - 1);
    const double frac = src - double(i0);
    out.samples[i] = static_cast<float>(in.samples[std::min(i0, in.samples.size() - 1)] * (1 - frac) +
                                        in.samples[i1] * frac);
  }
  return out;
}

// Reads any supported WAV and returns canonical 44.1 kHz mono.
inline AudioClip read_wav(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto w = detail::parse_wav(bytes, path.string());
  AudioClip clip;
  clip.sample_rate = w.info.sample_rate;
  clip.samples.resize(static_cast<std::size_t>(w.info.frames));
  const int ch = w.info.channels;
  const int step = w.info.bits / 8;
  for (std::int64_t f = 0; f < w.info.frames; ++f) {
    double acc = 0;
    for (int c = 0; c < ch; ++c) {
      const char* p = w.data.data() + (f * ch + c) * step;
      if (w.format == 1) {
        acc += from_pcm16(static_cast<std::int16_t>(detail::get_le<std::uint16_t>(p)));
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += v;
      }
    }
    clip.samples[static_cast<std::size_t>(f)] = static_cast<float>(acc / ch);
  }
  return resample_linear(clip, kCanonicalSampleRate);
}

}  // namespace semio
