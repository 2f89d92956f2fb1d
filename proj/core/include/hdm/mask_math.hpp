#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/grid.hpp"

namespace hdm {

// Numerical core: the bilinear upsampling operator and its adjoint, mask
// normalization, the activation-consistency loss, the mean-|.| regularizer,
// and projected gradient descent over mask grids. One sampling convention
// (half-pixel centers, edges clamped) is shared by every resize in the
// toolkit so forward and adjoint passes agree exactly.

/// Upsample a grid to h x w. Downsampling is rejected.
MaskGrid upsample(const MaskGrid& m, int h, int w);

/// Transpose of the linear map `upsample`: scatters an h x w cotangent back
/// onto a src_h x src_w grid, so that <upsample(a), b> == <a, upsample_adjoint(b)>.
MaskGrid upsample_adjoint(const MaskGrid& grad_out, int src_h, int src_w);

/// Bilinear resize of an image plane-by-plane; either direction is allowed.
Image bilinear_resize(const Image& img, int h, int w);

/// (m - min) / (max - min); a constant grid maps to all zeros.
MaskGrid normalize(const MaskGrid& m);

/// J = (score(m * x) - score(x))^2 at the target class, the mask broadcast
/// over channels.
double consistency_loss(const Classifier& model, const Image& x, const MaskGrid& m,
                        int target);

/// L_R = mean |value| over all entries.
double mask_regularizer(const MaskGrid& m);

struct LossBreakdown {
  double consistency = 0.0;  // J
  double regularizer = 0.0;  // L_R
  double factor = 0.0;       // lambda or eta
  double total = 0.0;        // J + factor * L_R
};

// How the trainable grid reaches the image plane.

/// Effective mask = upsample(trainable, H, W); regularizer on the upsampled mask.
struct DirectChain {};

/// Effective mask = upsample(trainable * upsample(frozen, trainable shape), H, W).
/// The frozen predecessor guides but receives no gradient. Regularizer on
/// upsample(trainable, H, W).
struct GuidedChain {
  MaskGrid frozen;
};

/// Trainable is a 1 x S row of weight parameters v. Effective mask is the
/// normalized combination sum_j w_j M_j / sum_j w_j with w_j = sum_{k>=j} v_k^2.
/// Regularizer on the combined mask.
struct MixChain {
  std::vector<MaskGrid> masks;
};

using Chain = std::variant<DirectChain, GuidedChain, MixChain>;

/// Loss of the chained mask against image x at class `target`, plus the full
/// gradient with respect to `trainable`. `ref_score` short-circuits the
/// unmasked-score evaluation when the caller already knows it.
LossBreakdown loss_and_gradient(const Classifier& model, const Image& x,
                                const MaskGrid& trainable, const Chain& chain,
                                double factor, int target, MaskGrid& grad,
                                std::optional<double> ref_score = std::nullopt);

struct OptimizerConfig {
  int epochs = 0;
  double learning_rate = 0.0;
  bool clamp = true;  // project onto [0,1] after each step
};

struct OptimizeResult {
  MaskGrid grid;
  std::vector<double> trace;  // total loss before each step plus the final loss
};

using Objective = std::function<LossBreakdown(const MaskGrid&, MaskGrid&)>;

/// Plain gradient descent: value <- clamp(value - lr * grad, 0, 1).
OptimizeResult optimize(MaskGrid init, const Objective& objective,
                        const OptimizerConfig& cfg);

/// Nearest-rank threshold keeping the `keep` largest values under a `>=`
/// comparison: returns the keep-th largest value. keep in [1, n].
double nearest_rank_threshold(const std::vector<double>& values, int keep);

/// Exclusive variant: the largest value NOT in the top-`keep` set, so that the
/// top `keep` values carry positive mass after subtracting the threshold.
/// For keep == n this is the minimum.
double nearest_rank_threshold_exclusive(const std::vector<double>& values, int keep);

}  // namespace hdm
