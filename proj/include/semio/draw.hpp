// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Integer rasterization primitives. All drawing clips silently at the frame
// border.

#include <cmath>
#include <cstdlib>

#include "semio/types.hpp"

namespace semio::draw {

inline int to_pixel(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Square stamp of side `thickness` centred on (x, y). Even thickness is
// biased toward the top-left.
inline void stamp(Image& img, int x, int y, int thickness, Rgb c) {
  const int lo = -(thickness - 1) / 2;
  const int hi = lo + thickness - 1;
  for (int dy = lo; dy <= hi; ++dy)
    for (int dx = lo; dx <= hi; ++dx) img.set(x + dx, y + dy, c);
}

// Bresenham line with a square brush.
inline void line(Image& img, int x0, int y0, int x1, int y1, Rgb c, int thickness = 1) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    stamp(img, x0, y0, thickness, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline void disk(Image& img, int cx, int cy, int radius, Rgb c) {
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) img.set(cx + dx, cy + dy, c);
}

inline void ring(Image& img, int cx, int cy, int radius, Rgb c, int thickness = 1) {
  const int r_in = radius - thickness;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const int d2 = dx * dx + dy * dy;
      if (d2 <= radius * radius && d2 > r_in * r_in) img.set(cx + dx, cy + dy, c);
    }
}

inline void rect(Image& img, int x, int y, int w, int h, Rgb c) {
  for (int yy = y; yy < y + h; ++yy)
    for (int xx = x; xx < x + w; ++xx) img.set(xx, yy, c);
}

}  // namespace semio::draw
