#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hdm/classifier.hpp"

namespace hdm {

/// A saliency map plus provenance. Map values live in [0,1] and are quantized
/// to 32-bit float precision so file round-trips are bit-exact.
struct SaliencyRecord {
  MaskGrid map;
  std::string method;
  std::string source;  // reference to the explained image
  int target_class = 0;
};

/// Validates range/finiteness and quantizes through float32.
SaliencyRecord make_saliency_record(MaskGrid map, std::string method, std::string source,
                                    int target_class);

struct CurvePoints {
  std::vector<double> fractions;      // 0.00 .. 1.00, step 0.01
  std::vector<double> probabilities;  // class probability at each fraction
};

enum class CurveMode { deletion, insertion };

/// Zeroes every pixel whose saliency falls below the nearest-rank threshold
/// that keeps the top `keep_fraction` of pixels (>= comparison).
PreparedImage mute_below_percentile(const PreparedImage& x, const SaliencyRecord& s,
                                    double keep_fraction);

/// Mean over pairs of max(0, Y - O) / Y, as a percentage. Requires Y > 0.
double average_drop(const std::vector<std::pair<double, double>>& pairs);

/// Fraction of pairs with Y < O (strict).
double average_increase(const std::vector<std::pair<double, double>>& pairs);

/// Deletion: remove 1% pixel batches from x in descending saliency order.
/// Insertion: restore them into an all-ones baseline. 101 curve points of
/// post-softmax probability for the record's class; AUC by trapezoid.
std::pair<CurvePoints, double> deletion_insertion(const Classifier& model,
                                                  const PreparedImage& x,
                                                  const SaliencyRecord& s, CurveMode mode);

/// Saliency mass inside the binary foreground over total mass; 0 when the map
/// carries no mass.
double energy_proportion(const SaliencyRecord& s, const MaskGrid& foreground);

}  // namespace hdm
