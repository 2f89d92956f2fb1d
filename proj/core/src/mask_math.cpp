#include "hdm/mask_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hdm {
namespace {

struct AxisTap {
  int i0 = 0;
  int i1 = 0;
  double w0 = 1.0;
  double w1 = 0.0;
};

// Half-pixel-center source coordinate, clamped to the valid range.
AxisTap axis_tap(int pos, int dst, int src) {
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  double s = (static_cast<double>(pos) + 0.5) * scale - 0.5;
  if (s < 0.0) s = 0.0;
  const double limit = static_cast<double>(src - 1);
  if (s > limit) s = limit;
  AxisTap t;
  t.i0 = static_cast<int>(s);
  if (t.i0 > src - 1) t.i0 = src - 1;
  const double frac = s - static_cast<double>(t.i0);
  t.i1 = (t.i0 + 1 < src) ? t.i0 + 1 : src - 1;
  t.w0 = 1.0 - frac;
  t.w1 = frac;
  return t;
}

std::vector<AxisTap> axis_taps(int dst, int src) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(dst));
  for (int p = 0; p < dst; ++p) taps[static_cast<std::size_t>(p)] = axis_tap(p, dst, src);
  return taps;
}

}  // namespace

MaskGrid upsample(const MaskGrid& m, int h, int w) {
  if (m.h <= 0 || m.w <= 0) throw InputError("upsample: empty source grid");
  if (h < m.h || w < m.w)
    throw InputError("upsample: target smaller than source (downsampling unsupported)");
  MaskGrid out(h, w);
  if (h == m.h && w == m.w) {
    out.v = m.v;
    return out;
  }
  const auto rows = axis_taps(h, m.h);
  const auto cols = axis_taps(w, m.w);
  for (int r = 0; r < h; ++r) {
    const AxisTap& ry = rows[static_cast<std::size_t>(r)];
    const double* top = &m.v[static_cast<std::size_t>(ry.i0) * m.w];
    const double* bot = &m.v[static_cast<std::size_t>(ry.i1) * m.w];
    double* dst = &out.v[static_cast<std::size_t>(r) * w];
    for (int c = 0; c < w; ++c) {
      const AxisTap& cx = cols[static_cast<std::size_t>(c)];
      dst[c] = ry.w0 * (cx.w0 * top[cx.i0] + cx.w1 * top[cx.i1]) +
               ry.w1 * (cx.w0 * bot[cx.i0] + cx.w1 * bot[cx.i1]);
    }
  }
  return out;
}

MaskGrid upsample_adjoint(const MaskGrid& grad_out, int src_h, int src_w) {
  if (src_h <= 0 || src_w <= 0) throw InputError("upsample_adjoint: bad source shape");
  if (grad_out.h < src_h || grad_out.w < src_w)
    throw InputError("upsample_adjoint: shapes inconsistent with a forward upsample");
  MaskGrid out(src_h, src_w);
  if (grad_out.h == src_h && grad_out.w == src_w) {
    out.v = grad_out.v;
    return out;
  }
  const auto rows = axis_taps(grad_out.h, src_h);
  const auto cols = axis_taps(grad_out.w, src_w);
  for (int r = 0; r < grad_out.h; ++r) {
    const AxisTap& ry = rows[static_cast<std::size_t>(r)];
    double* top = &out.v[static_cast<std::size_t>(ry.i0) * src_w];
    double* bot = &out.v[static_cast<std::size_t>(ry.i1) * src_w];
    const double* g = &grad_out.v[static_cast<std::size_t>(r) * grad_out.w];
    for (int c = 0; c < grad_out.w; ++c) {
      const AxisTap& cx = cols[static_cast<std::size_t>(c)];
      top[cx.i0] += ry.w0 * cx.w0 * g[c];
      top[cx.i1] += ry.w0 * cx.w1 * g[c];
      bot[cx.i0] += ry.w1 * cx.w0 * g[c];
      bot[cx.i1] += ry.w1 * cx.w1 * g[c];
    }
  }
  return out;
}

Image bilinear_resize(const Image& img, int h, int w) {
  if (img.h <= 0 || img.w <= 0 || img.c <= 0) throw InputError("bilinear_resize: empty image");
  if (h <= 0 || w <= 0) throw InputError("bilinear_resize: bad target size");
  Image out(h, w, img.c);
  if (h == img.h && w == img.w) {
    out.v = img.v;
    return out;
  }
  const auto rows = axis_taps(h, img.h);
  const auto cols = axis_taps(w, img.w);
  for (int r = 0; r < h; ++r) {
    const AxisTap& ry = rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < w; ++c) {
      const AxisTap& cx = cols[static_cast<std::size_t>(c)];
      for (int ch = 0; ch < img.c; ++ch) {
        out.at(r, c, ch) = ry.w0 * (cx.w0 * img.at(ry.i0, cx.i0, ch) +
                                    cx.w1 * img.at(ry.i0, cx.i1, ch)) +
                           ry.w1 * (cx.w0 * img.at(ry.i1, cx.i0, ch) +
                                    cx.w1 * img.at(ry.i1, cx.i1, ch));
      }
    }
  }
  return out;
}

MaskGrid normalize(const MaskGrid& m) {
  if (!all_finite(m.v)) throw InputError("normalize: non-finite values");
  const double lo = min_value(m);
  const double hi = max_value(m);
  MaskGrid out(m.h, m.w);
  if (hi == lo) return out;  // degenerate: all zeros
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < m.v.size(); ++i) out.v[i] = (m.v[i] - lo) * inv;
  return out;
}

double consistency_loss(const Classifier& model, const Image& x, const MaskGrid& m,
                        int target) {
  if (m.h != x.h || m.w != x.w) throw InputError("consistency_loss: mask/image shape mismatch");
  const double masked = model.scores(mask_apply(m, x)).at(static_cast<std::size_t>(target));
  const double ref = model.scores(x).at(static_cast<std::size_t>(target));
  const double d = masked - ref;
  return d * d;
}

double mask_regularizer(const MaskGrid& m) {
  double s = 0.0;
  for (double x : m.v) s += std::abs(x);
  return s / static_cast<double>(m.v.size());
}

namespace {

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// dJ/d(effective mask)[u,v] = 2 (f_p(m*x) - f_p(x)) * sum_c grad_f[u,v,c] * x[u,v,c]
MaskGrid consistency_cotangent(const Classifier& model, const Image& x, const MaskGrid& eff,
                               int target, double ref, double* j_out) {
  const Image masked = mask_apply(eff, x);
  auto [score, grad_f] = model.score_and_input_gradient(masked, target);
  const double diff = score - ref;
  *j_out = diff * diff;
  MaskGrid cot(eff.h, eff.w);
  std::size_t i = 0;
  for (int r = 0; r < x.h; ++r)
    for (int c = 0; c < x.w; ++c) {
      double acc = 0.0;
      for (int ch = 0; ch < x.c; ++ch, ++i) acc += grad_f.v[i] * x.v[i];
      cot.at(r, c) = 2.0 * diff * acc;
    }
  return cot;
}

}  // namespace

LossBreakdown loss_and_gradient(const Classifier& model, const Image& x,
                                const MaskGrid& trainable, const Chain& chain,
                                double factor, int target, MaskGrid& grad,
                                std::optional<double> ref_score) {
  if (target < 0 || target >= model.num_classes())
    throw InputError("loss_and_gradient: target class out of range");
  const double ref =
      ref_score ? *ref_score : model.scores(x).at(static_cast<std::size_t>(target));
  LossBreakdown lb;
  lb.factor = factor;

  if (std::holds_alternative<DirectChain>(chain)) {
    const MaskGrid eff = upsample(trainable, x.h, x.w);
    MaskGrid cot = consistency_cotangent(model, x, eff, target, ref, &lb.consistency);
    lb.regularizer = mask_regularizer(eff);
    const double inv_n = 1.0 / static_cast<double>(eff.v.size());
    for (std::size_t i = 0; i < cot.v.size(); ++i)
      cot.v[i] += factor * sign_of(eff.v[i]) * inv_n;
    grad = upsample_adjoint(cot, trainable.h, trainable.w);
  } else if (const auto* guided = std::get_if<GuidedChain>(&chain)) {
    const MaskGrid guide = upsample(guided->frozen, trainable.h, trainable.w);
    const MaskGrid inner = hadamard(trainable, guide);
    const MaskGrid eff = upsample(inner, x.h, x.w);
    const MaskGrid cot = consistency_cotangent(model, x, eff, target, ref, &lb.consistency);
    grad = hadamard(upsample_adjoint(cot, trainable.h, trainable.w), guide);
    // regularizer acts on the trainable grid upsampled to the image plane
    const MaskGrid eff_reg = upsample(trainable, x.h, x.w);
    lb.regularizer = mask_regularizer(eff_reg);
    MaskGrid reg_cot(eff_reg.h, eff_reg.w);
    const double inv_n = 1.0 / static_cast<double>(eff_reg.v.size());
    for (std::size_t i = 0; i < reg_cot.v.size(); ++i)
      reg_cot.v[i] = sign_of(eff_reg.v[i]) * inv_n;
    const MaskGrid reg_grad = upsample_adjoint(reg_cot, trainable.h, trainable.w);
    for (std::size_t i = 0; i < grad.v.size(); ++i) grad.v[i] += factor * reg_grad.v[i];
  } else if (const auto* mix = std::get_if<MixChain>(&chain)) {
    const int stages = static_cast<int>(mix->masks.size());
    if (stages == 0) throw ConfigError("loss_and_gradient: mix chain without masks");
    if (trainable.h != 1 || trainable.w != stages)
      throw ConfigError("loss_and_gradient: mix chain expects a 1 x S weight row");
    for (const MaskGrid& m : mix->masks)
      if (m.h != x.h || m.w != x.w)
        throw InputError("loss_and_gradient: mix mask shape mismatch");

    // w_j = sum_{k>=j} v_k^2
    std::vector<double> w(static_cast<std::size_t>(stages), 0.0);
    double tail = 0.0;
    for (int j = stages - 1; j >= 0; --j) {
      tail += trainable.v[static_cast<std::size_t>(j)] * trainable.v[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(j)] = tail;
    }
    double wsum = 0.0;
    for (double wj : w) wsum += wj;
    if (wsum <= 0.0) throw InputError("loss_and_gradient: degenerate mix weights (all v zero)");

    MaskGrid mixed(x.h, x.w);
    for (int j = 0; j < stages; ++j) {
      const double wj = w[static_cast<std::size_t>(j)];
      const MaskGrid& mj = mix->masks[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < mixed.v.size(); ++i) mixed.v[i] += wj * mj.v[i];
    }
    for (double& m : mixed.v) m /= wsum;

    MaskGrid cot = consistency_cotangent(model, x, mixed, target, ref, &lb.consistency);
    lb.regularizer = mask_regularizer(mixed);
    const double inv_n = 1.0 / static_cast<double>(mixed.v.size());
    for (std::size_t i = 0; i < cot.v.size(); ++i)
      cot.v[i] += factor * sign_of(mixed.v[i]) * inv_n;

    // dL/dw_j = <cot, (M_j - mixed)> / wsum; dL/dv_k = 2 v_k sum_{j<=k} dL/dw_j
    std::vector<double> dldw(static_cast<std::size_t>(stages), 0.0);
    for (int j = 0; j < stages; ++j) {
      const MaskGrid& mj = mix->masks[static_cast<std::size_t>(j)];
      double acc = 0.0;
      for (std::size_t i = 0; i < cot.v.size(); ++i) acc += cot.v[i] * (mj.v[i] - mixed.v[i]);
      dldw[static_cast<std::size_t>(j)] = acc / wsum;
    }
    grad = MaskGrid(1, stages);
    double prefix = 0.0;
    for (int k = 0; k < stages; ++k) {
      prefix += dldw[static_cast<std::size_t>(k)];
      grad.v[static_cast<std::size_t>(k)] = 2.0 * trainable.v[static_cast<std::size_t>(k)] * prefix;
    }
  } else {
    throw ConfigError("loss_and_gradient: unsupported chain");
  }

  lb.total = lb.consistency + lb.factor * lb.regularizer;
  return lb;
}

OptimizeResult optimize(MaskGrid init, const Objective& objective, const OptimizerConfig& cfg) {
  if (cfg.epochs <= 0) throw ConfigError("optimize: epochs must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("optimize: learning rate must be positive");

  OptimizeResult res;
  res.grid = std::move(init);
  res.trace.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  MaskGrid grad(res.grid.h, res.grid.w);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const LossBreakdown lb = objective(res.grid, grad);
    if (!std::isfinite(lb.total))
      throw NumericError("optimize: non-finite loss at epoch " + std::to_string(epoch));
    res.trace.push_back(lb.total);
    for (std::size_t i = 0; i < res.grid.v.size(); ++i) {
      double value = res.grid.v[i] - cfg.learning_rate * grad.v[i];
      if (cfg.clamp) value = std::clamp(value, 0.0, 1.0);
      res.grid.v[i] = value;
    }
  }
  const LossBreakdown lb = objective(res.grid, grad);
  if (!std::isfinite(lb.total))
    throw NumericError("optimize: non-finite loss at epoch " + std::to_string(cfg.epochs));
  res.trace.push_back(lb.total);
  return res;
}

double nearest_rank_threshold(const std::vector<double>& values, int keep) {
  const int n = static_cast<int>(values.size());
  if (n == 0) throw InputError("nearest_rank_threshold: empty input");
  if (keep < 1 || keep > n) throw InputError("nearest_rank_threshold: keep out of range");
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  return sorted[static_cast<std::size_t>(n - keep)];
}

double nearest_rank_threshold_exclusive(const std::vector<double>& values, int keep) {
  const int n = static_cast<int>(values.size());
  if (n == 0) throw InputError("nearest_rank_threshold_exclusive: empty input");
  if (keep < 1 || keep > n) throw InputError("nearest_rank_threshold_exclusive: keep out of range");
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  if (keep == n) return sorted.front();
  return sorted[static_cast<std::size_t>(n - keep - 1)];
}

}  // namespace hdm
