#pragma once

#include "hdm/metrics.hpp"

namespace hdm {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Piecewise-linear JET colormap. Input is clamped to [0,1].
/// Anchors: 0 -> (0,0,0.5), 0.125 -> (0,0,1), 0.375 -> (0,1,1),
/// 0.625 -> (1,1,0), 0.875 -> (1,0,0), 1 -> (0.5,0,0).
Rgb jet_colormap(double v);

/// H x W x 3 JET rendering of a map.
Image heatmap_image(const MaskGrid& map);

/// clamp(alpha * jet(s) + (1 - alpha) * x, 0, 1). Grayscale images are
/// broadcast to three channels.
Image render_overlay(const RawImage& x, const SaliencyRecord& s, double alpha);

/// Mask image: s * x, channel count preserved.
Image render_mask_image(const RawImage& x, const SaliencyRecord& s);

}  // namespace hdm
