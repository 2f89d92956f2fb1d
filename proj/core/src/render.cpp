#include "hdm/render.hpp"

#include <algorithm>
#include <array>

namespace hdm {
namespace {

struct Anchor {
  double v;
  Rgb color;
};

constexpr std::array<Anchor, 6> kJetAnchors = {{
    {0.0, {0.0, 0.0, 0.5}},
    {0.125, {0.0, 0.0, 1.0}},
    {0.375, {0.0, 1.0, 1.0}},
    {0.625, {1.0, 1.0, 0.0}},
    {0.875, {1.0, 0.0, 0.0}},
    {1.0, {0.5, 0.0, 0.0}},
}};

}  // namespace

Rgb jet_colormap(double v) {
  v = std::clamp(v, 0.0, 1.0);
  for (std::size_t i = 1; i < kJetAnchors.size(); ++i) {
    if (v <= kJetAnchors[i].v) {
      const Anchor& lo = kJetAnchors[i - 1];
      const Anchor& hi = kJetAnchors[i];
      const double t = (v - lo.v) / (hi.v - lo.v);
      return Rgb{lo.color.r + t * (hi.color.r - lo.color.r),
                 lo.color.g + t * (hi.color.g - lo.color.g),
                 lo.color.b + t * (hi.color.b - lo.color.b)};
    }
  }
  return kJetAnchors.back().color;
}

Image heatmap_image(const MaskGrid& map) {
  Image out(map.h, map.w, 3);
  for (int r = 0; r < map.h; ++r)
    for (int c = 0; c < map.w; ++c) {
      const Rgb rgb = jet_colormap(map.at(r, c));
      out.at(r, c, 0) = rgb.r;
      out.at(r, c, 1) = rgb.g;
      out.at(r, c, 2) = rgb.b;
    }
  return out;
}

Image render_overlay(const RawImage& x, const SaliencyRecord& s, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("render_overlay: alpha outside [0,1]");
  const Image& px = x.pixels;
  if (s.map.h != px.h || s.map.w != px.w)
    throw InputError("render_overlay: saliency/image shape mismatch");
  Image out(px.h, px.w, 3);
  for (int r = 0; r < px.h; ++r)
    for (int c = 0; c < px.w; ++c) {
      const Rgb rgb = jet_colormap(s.map.at(r, c));
      const double heat[3] = {rgb.r, rgb.g, rgb.b};
      for (int ch = 0; ch < 3; ++ch) {
        const double base = px.c == 1 ? px.at(r, c, 0) : px.at(r, c, ch);
        out.at(r, c, ch) = std::clamp(alpha * heat[ch] + (1.0 - alpha) * base, 0.0, 1.0);
      }
    }
  return out;
}

Image render_mask_image(const RawImage& x, const SaliencyRecord& s) {
  const Image& px = x.pixels;
  if (s.map.h != px.h || s.map.w != px.w)
    throw InputError("render_mask_image: saliency/image shape mismatch");
  Image out(px.h, px.w, px.c);
  for (int r = 0; r < px.h; ++r)
    for (int c = 0; c < px.w; ++c)
      for (int ch = 0; ch < px.c; ++ch) out.at(r, c, ch) = s.map.at(r, c) * px.at(r, c, ch);
  return out;
}

}  // namespace hdm
