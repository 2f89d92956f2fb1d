#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "hdm/grid.hpp"

namespace hdm {

/// Decoded 8-bit image mapped to [0,1]. One or three channels.
struct RawImage {
  Image pixels;
};

struct PrepMeta {
  int source_h = 0;
  int source_w = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Resized and channel-normalized image, the tensor classifiers consume.
struct PreparedImage {
  Image pixels;
  PrepMeta meta;
};

struct Prediction {
  std::vector<double> scores;
  int predicted_class = 0;
};

/// Uniform contract for a differentiable classifier. Implementations must be
/// deterministic: identical inputs give identical scores. A handle either
/// supports concurrent read-only evaluation (thread_safe() == true) or callers
/// wrap it in SerializedClassifier.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int num_classes() const = 0;
  virtual int input_height() const = 0;
  virtual int input_width() const = 0;
  virtual int input_channels() const = 0;

  /// Per-class scores for one input tensor.
  virtual std::vector<double> scores(const Image& x) const = 0;

  /// Score of class `target` plus its gradient with respect to every input
  /// value. Models without gradient support keep the default, which throws.
  virtual std::pair<double, Image> score_and_input_gradient(const Image& x, int target) const;

  virtual bool thread_safe() const { return false; }
};

/// Adapter over two plain callbacks working on row-major H x W x C tensors.
/// The gradient callback may be empty for score-only models.
class CallbackClassifier : public Classifier {
 public:
  using ScoreFn = std::function<std::vector<double>(const Image&)>;
  using GradientFn = std::function<std::pair<double, Image>(const Image&, int)>;

  CallbackClassifier(int classes, int h, int w, int c, ScoreFn score_fn,
                     GradientFn gradient_fn = nullptr)
      : classes_(classes), h_(h), w_(w), c_(c),
        score_fn_(std::move(score_fn)), gradient_fn_(std::move(gradient_fn)) {}

  int num_classes() const override { return classes_; }
  int input_height() const override { return h_; }
  int input_width() const override { return w_; }
  int input_channels() const override { return c_; }
  std::vector<double> scores(const Image& x) const override { return score_fn_(x); }
  std::pair<double, Image> score_and_input_gradient(const Image& x, int target) const override;

 private:
  int classes_, h_, w_, c_;
  ScoreFn score_fn_;
  GradientFn gradient_fn_;
};

/// Serializes every call to a non-thread-safe handle behind one mutex.
class SerializedClassifier : public Classifier {
 public:
  explicit SerializedClassifier(std::shared_ptr<const Classifier> inner)
      : inner_(std::move(inner)) {}

  int num_classes() const override { return inner_->num_classes(); }
  int input_height() const override { return inner_->input_height(); }
  int input_width() const override { return inner_->input_width(); }
  int input_channels() const override { return inner_->input_channels(); }
  std::vector<double> scores(const Image& x) const override;
  std::pair<double, Image> score_and_input_gradient(const Image& x, int target) const override;
  bool thread_safe() const override { return true; }

 private:
  std::shared_ptr<const Classifier> inner_;
  mutable std::mutex mu_;
};

/// View of a base model whose scores are the softmax of the base scores.
/// The gradient needs one base gradient call per class.
class SoftmaxScoreClassifier : public Classifier {
 public:
  explicit SoftmaxScoreClassifier(std::shared_ptr<const Classifier> base)
      : base_(std::move(base)) {}

  int num_classes() const override { return base_->num_classes(); }
  int input_height() const override { return base_->input_height(); }
  int input_width() const override { return base_->input_width(); }
  int input_channels() const override { return base_->input_channels(); }
  std::vector<double> scores(const Image& x) const override;
  std::pair<double, Image> score_and_input_gradient(const Image& x, int target) const override;
  bool thread_safe() const override { return base_->thread_safe(); }

 private:
  std::shared_ptr<const Classifier> base_;
};

/// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& scores);

/// Bilinear resize (half-pixel centers, edge clamped) followed by per-channel
/// normalization (value - mean[c]) / stddev[c].
PreparedImage preprocess(const RawImage& img, int target_h, int target_w,
                         const std::vector<double>& mean,
                         const std::vector<double>& stddev);

/// Scores plus argmax class; ties break toward the lowest index.
Prediction predict(const Classifier& model, const PreparedImage& x);

std::pair<double, Image> target_score_and_gradient(const Classifier& model,
                                                   const PreparedImage& x, int target);

}  // namespace hdm
