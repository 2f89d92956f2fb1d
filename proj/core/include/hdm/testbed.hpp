#pragma once

#include <cstdint>
#include <filesystem>

#include "hdm/classifier.hpp"

namespace hdm {

// Framework-free planted-patch dataset and a softmax-regression classifier
// with exact closed-form input gradients. Every mask, metric and pipeline
// test runs against these.

struct PatchSpec {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
  double intensity = 1.0;
};

enum class PatchMode { single, dual };

struct TestbedConfig {
  int image_size = 32;
  int num_classes = 4;
  int per_class = 24;
  int patch_size = 8;
  double noise_level = 0.08;
  double patch_intensity = 1.0;
  PatchMode mode = PatchMode::single;
};

struct PlantedDataset {
  int image_h = 0;
  int image_w = 0;
  std::vector<Image> images;  // H x W x 1
  std::vector<int> labels;
  std::vector<std::vector<PatchSpec>> class_patches;  // one or two rectangles per class
  double noise_level = 0.0;
};

/// Deterministic given the seed. Each class's discriminative evidence is its
/// patch rectangle; dual mode plants two disjoint rectangles per class.
PlantedDataset generate_dataset(std::uint64_t seed, const TestbedConfig& cfg = {});

/// Binary union of the patches of the class of image `index`.
MaskGrid foreground_mask(const PlantedDataset& data, int index);

/// f_k(x) = w_k . vec(x) + b_k. Input gradient of f_k is exactly the weight
/// row, so every gradient check against this model is closed-form.
class LinearClassifier : public Classifier {
 public:
  LinearClassifier(int classes, int h, int w, int c)
      : classes_(classes), h_(h), w_(w), c_(c),
        weights_(static_cast<std::size_t>(classes) * h * w * c, 0.0),
        bias_(static_cast<std::size_t>(classes), 0.0) {}

  int num_classes() const override { return classes_; }
  int input_height() const override { return h_; }
  int input_width() const override { return w_; }
  int input_channels() const override { return c_; }
  std::vector<double> scores(const Image& x) const override;
  std::pair<double, Image> score_and_input_gradient(const Image& x, int target) const override;
  bool thread_safe() const override { return true; }

  double& weight(int cls, std::size_t flat) {
    return weights_[static_cast<std::size_t>(cls) * feature_count() + flat];
  }
  double weight(int cls, std::size_t flat) const {
    return weights_[static_cast<std::size_t>(cls) * feature_count() + flat];
  }
  double& bias(int cls) { return bias_[static_cast<std::size_t>(cls)]; }
  double bias(int cls) const { return bias_[static_cast<std::size_t>(cls)]; }
  std::size_t feature_count() const {
    return static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_) *
           static_cast<std::size_t>(c_);
  }

  void save(const std::filesystem::path& path) const;
  static LinearClassifier load(const std::filesystem::path& path);

 private:
  int classes_, h_, w_, c_;
  std::vector<double> weights_;  // class-major
  std::vector<double> bias_;
};

struct FitConfig {
  int epochs = 400;
  double learning_rate = 0.5;
  double min_accuracy = 0.95;
};

/// Full-batch softmax regression from zero initialization; deterministic.
/// Throws NumericError when the planted data cannot be fit to min_accuracy,
/// which signals a testbed bug.
LinearClassifier fit_linear(const PlantedDataset& data, const FitConfig& cfg = {});

double training_accuracy(const LinearClassifier& model, const PlantedDataset& data);

/// Write images/, foreground/ PNGs and a manifest.txt consumable by the
/// evaluate pipeline. Pixel values are quantized to 8 bits exactly as the
/// PNGs will be re-read.
void export_dataset(const PlantedDataset& data, const std::filesystem::path& dir);

}  // namespace hdm
