#include "hdm/grid.hpp"

#include <algorithm>

namespace hdm {

double min_value(const MaskGrid& m) {
  if (m.v.empty()) throw InputError("min_value: empty grid");
  return *std::min_element(m.v.begin(), m.v.end());
}

double max_value(const MaskGrid& m) {
  if (m.v.empty()) throw InputError("max_value: empty grid");
  return *std::max_element(m.v.begin(), m.v.end());
}

MaskGrid hadamard(const MaskGrid& a, const MaskGrid& b) {
  if (!a.same_shape(b)) throw InputError("hadamard: shape mismatch");
  MaskGrid out(a.h, a.w);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Image mask_apply(const MaskGrid& m, const Image& x) {
  if (m.h != x.h || m.w != x.w)
    throw InputError("mask_apply: mask shape does not match image shape");
  Image out(x.h, x.w, x.c);
  std::size_t i = 0;
  for (int r = 0; r < x.h; ++r)
    for (int col = 0; col < x.w; ++col) {
      const double mv = m.v[static_cast<std::size_t>(r) * m.w + col];
      for (int ch = 0; ch < x.c; ++ch, ++i) out.v[i] = mv * x.v[i];
    }
  return out;
}

}  // namespace hdm
