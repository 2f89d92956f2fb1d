#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hdm/errors.hpp"

namespace hdm {

/// A dense h x w grid of doubles, row-major. Holds trainable mask vectors,
/// stacked masks, saliency maps and binary foreground maps.
struct MaskGrid {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  MaskGrid() = default;
  MaskGrid(int h_, int w_, double fill = 0.0)
      : h(h_), w(w_), v(static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_), fill) {
    if (h_ <= 0 || w_ <= 0) throw InputError("MaskGrid: dimensions must be positive");
  }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * w + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * w + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const MaskGrid& o) const { return h == o.h && w == o.w; }
};

/// H x W x C image tensor, row-major with interleaved channels.
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<double> v;

  Image() = default;
  Image(int h_, int w_, int c_, double fill = 0.0)
      : h(h_),
        w(w_),
        c(c_),
        v(static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_) * static_cast<std::size_t>(c_), fill) {
    if (h_ <= 0 || w_ <= 0 || c_ <= 0) throw InputError("Image: dimensions must be positive");
  }

  double& at(int r, int col, int ch) {
    return v[(static_cast<std::size_t>(r) * w + col) * c + ch];
  }
  double at(int r, int col, int ch) const {
    return v[(static_cast<std::size_t>(r) * w + col) * c + ch];
  }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double min_value(const MaskGrid& m);
double max_value(const MaskGrid& m);

/// Elementwise product of two grids of identical shape.
MaskGrid hadamard(const MaskGrid& a, const MaskGrid& b);

/// (m * x): the mask multiplies every channel of the image.
Image mask_apply(const MaskGrid& m, const Image& x);

}  // namespace hdm
