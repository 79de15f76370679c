#pragma once

// 2-D projection of a box set: each cell of a w x h grid over two normalized
// axes holds the normalized volume of the boxes' parts that project into it.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "illum/core.hpp"

namespace illum {

struct Projection {
  std::size_t width = 0, height = 0;
  std::vector<double> cells;  // row-major, row 0 = top (highest y)

  double at(std::size_t col, std::size_t row) const { return cells[row * width + col]; }
  double total() const {
    double s = 0.0;
    for (double c : cells) s += c;
    return s;
  }
};

inline double overlap_len(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

inline Projection project_boxes(const std::vector<Box>& boxes, const Box& bounding, VarIndex x, VarIndex y,
                                std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw Error("projection grid must be non-empty");
  Projection p{width, height, std::vector<double>(width * height, 0.0)};
  for (const auto& raw : boxes) {
    Box b = normalize_box(raw, bounding);
    const Interval* bx = b.find(x);
    const Interval* by = b.find(y);
    if (bx == nullptr || by == nullptr) throw Error("projection axis missing from a box");
    double rest = 1.0;
    for (std::size_t k = 0; k < b.dim(); ++k)
      if (b.var(k) != x && b.var(k) != y) rest *= b.axis(k).width();
    auto span = [](const Interval* iv, std::size_t n) {
      auto lo = static_cast<std::size_t>(std::clamp(std::floor(iv->lo * static_cast<double>(n)), 0.0, double(n - 1)));
      auto hi = static_cast<std::size_t>(std::clamp(std::ceil(iv->hi * static_cast<double>(n)), 1.0, double(n)));
      return std::pair{lo, hi};
    };
    auto [c0, c1] = span(bx, width);
    auto [r0, r1] = span(by, height);
    for (std::size_t c = c0; c < c1; ++c) {
      double fx = overlap_len(bx->lo, bx->hi, double(c) / double(width), double(c + 1) / double(width));
      if (fx <= 0.0) continue;
      for (std::size_t r = r0; r < r1; ++r) {
        double fy = overlap_len(by->lo, by->hi, double(r) / double(height), double(r + 1) / double(height));
        if (fy <= 0.0) continue;
        p.cells[(height - 1 - r) * width + c] += fx * fy * rest;
      }
    }
  }
  return p;
}

/// Plain PGM (P2); darker = more volume.
inline void write_pgm(std::ostream& os, const Projection& p) {
  double mx = 0.0;
  for (double c : p.cells) mx = std::max(mx, c);
  os << "P2\n" << p.width << ' ' << p.height << "\n255\n";
  for (std::size_t r = 0; r < p.height; ++r) {
    for (std::size_t c = 0; c < p.width; ++c) {
      int v = mx > 0.0 ? 255 - static_cast<int>(std::lround(255.0 * p.at(c, r) / mx)) : 255;
      os << v << (c + 1 < p.width ? ' ' : '\n');
    }
  }
}

inline void write_projection_csv(std::ostream& os, const Projection& p) {
  char buf[40];
  for (std::size_t r = 0; r < p.height; ++r)
    for (std::size_t c = 0; c < p.width; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p.at(c, r));
      os << buf << (c + 1 < p.width ? ',' : '\n');
    }
}

}  // namespace illum
