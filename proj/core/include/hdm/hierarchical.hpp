#pragma once

#include <optional>
#include <vector>

#include "hdm/dynamic_mask.hpp"

namespace hdm {

// HDM: run S DM blocks in sequence, suppressing the cumulative salient region
// of the original image before each new block, then learn nonnegative,
// non-increasing combination weights for the final mixed mask.

struct HDMConfig {
  int stages = 3;  // S
  DMConfig dm;
  int mix_epochs = 400;
  double mix_learning_rate = 0.1;
  double lambda = 1e-4;  // mix regularization factor
  double v_init = 1.0;   // initial value of every weight parameter

  void validate() const;
};

struct StageOutputs {
  std::vector<MaskGrid> masks;    // M_1 .. M_S
  std::vector<Image> images;      // X_1 .. X_S (suppressed versions of X_0)
  std::vector<DMResult> details;  // full per-stage DM results
};

struct MixResult {
  std::vector<double> v;       // weight parameters
  std::vector<double> w;       // derived weights, non-increasing
  MaskGrid mixed;              // M_h
  std::vector<double> trace;   // mix loss trace
};

struct HDMResult {
  PreparedImage input;          // X_0
  StageOutputs stages;
  MixResult mix;
  int target = -1;
};

/// w_j = sum_{k>=j} v_k^2; non-increasing in j for every v.
std::vector<double> mix_weights(const std::vector<double>& v);

/// M_h = sum_j w_j M_j / sum_j w_j. All-zero v is rejected.
MaskGrid mix_mask(const std::vector<MaskGrid>& masks, const std::vector<double>& v);

/// Run S DM blocks: M_i explains X_{i-1}; X_i = (1 - normalize(sum_{j<=i} M_j)) * X_0.
StageOutputs iterate_stages(const Classifier& model, const Image& x0, const HDMConfig& cfg,
                            int target);

/// Gradient descent on the weight parameters v (unclamped; the squares keep
/// the weights nonnegative), minimizing the consistency loss of the mixed
/// mask against X_0 plus lambda times its regularizer.
MixResult optimize_mix(const Classifier& model, const Image& x0,
                       const std::vector<MaskGrid>& masks, const HDMConfig& cfg, int target);

/// Full pipeline: preprocess, pick the explained class, run the stages, learn
/// the mix. All intermediates are retained for rendering.
HDMResult explain(const Classifier& model, const RawImage& raw, const HDMConfig& cfg,
                  const std::vector<double>& mean, const std::vector<double>& stddev,
                  std::optional<int> target = std::nullopt);

}  // namespace hdm
