#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hdm/classifier.hpp"
#include "hdm/mask_math.hpp"

namespace hdm {

// One DM block: train small benchmark mask vectors against the activation
// consistency of the masked and original image, grow scale-guided auxiliary
// cascades on top of them, stack everything into M_c and threshold into the
// overlay mask M_b.

struct DMConfig {
  std::vector<std::pair<int, int>> benchmark_sizes;  // (a_i, b_i), all distinct
  std::vector<int> scale_factors;                    // t_j >= 2
  double tau = 0.5;                                  // init value of every trainable grid
  double eta = 100.0;                                // shared regularization factor
  int epochs = 800;
  double learning_rate = 1e-2;
  double gamma_percentile = 0.25;  // q: fraction of pixels kept by the overlay threshold
  bool clamp = true;               // project mask values onto [0,1]

  enum class StackMode { raw, chained };
  StackMode stack_mode = StackMode::raw;

  // Optional per-grid overrides of eta, keyed by 0-based indices.
  std::map<int, double> eta_benchmark_overrides;                // i -> eta_i
  std::map<std::array<int, 3>, double> eta_cascade_overrides;   // (i, j, k) -> eta

  void validate() const;
  double benchmark_eta(int i) const;
  double cascade_eta(int i, int j, int k) const;
};

/// One trained grid of the cascade: shape (t_j^k a_i, t_j^k b_i).
struct CascadeEntry {
  MaskGrid grid;
  int i = 0;  // benchmark index
  int j = 0;  // scale factor index
  int k = 0;  // cascade level; 0 is the benchmark itself
};

/// Shape-checked constructor for cascade entries.
CascadeEntry make_cascade_entry(MaskGrid grid, int i, int j, int k, const DMConfig& cfg,
                                int image_h, int image_w);

struct LossTrace {
  std::string label;
  std::vector<double> values;
};

struct DMResult {
  MaskGrid overlay;                    // M_b
  MaskGrid stacked;                    // M_c
  std::vector<CascadeEntry> cascade;   // every trained grid, (i, j, k) ascending
  std::vector<LossTrace> traces;       // one per trained grid
  int target = -1;                     // class the masks explain
};

/// Largest k with t^k * a <= H and t^k * b <= W (the floor-log depth formula,
/// evaluated in integer arithmetic).
int cascade_depth(int image_h, int image_w, int a, int b, int t);

/// Train the benchmark grid d_i of the given size under the direct chain.
MaskGrid train_benchmark(const Classifier& model, const Image& x,
                         std::pair<int, int> size, const DMConfig& cfg, int target,
                         std::vector<double>* trace = nullptr);

/// Grow the auxiliary cascade for one (benchmark, scale factor) pair. Level 0
/// is the benchmark itself; each later level is trained with its predecessor
/// frozen as guidance.
std::vector<CascadeEntry> train_cascade(const Classifier& model, const Image& x,
                                        const MaskGrid& benchmark, int bench_index,
                                        int scale_index, const DMConfig& cfg, int target,
                                        std::vector<LossTrace>* traces = nullptr);

/// M_c: upsample every entry to the image plane and sum. Chained mode first
/// folds each entry with its upsampled predecessors within one (i, j) group.
MaskGrid stack_masks(const std::vector<CascadeEntry>& entries, int image_h, int image_w,
                     DMConfig::StackMode mode = DMConfig::StackMode::raw);

/// M_b = normalize((M_c - gamma) * [M_c >= gamma]) where gamma is the
/// exclusive nearest-rank threshold for the top `q` fraction of pixels.
MaskGrid threshold_overlay(const MaskGrid& stacked, double gamma_percentile);

/// The full DM block. When no target class is given the model's prediction on
/// x is explained.
DMResult run_dm(const Classifier& model, const Image& x, const DMConfig& cfg,
                std::optional<int> target = std::nullopt);

}  // namespace hdm
