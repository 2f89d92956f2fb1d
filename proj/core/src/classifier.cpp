#include "hdm/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdm/mask_math.hpp"

namespace hdm {

std::pair<double, Image> Classifier::score_and_input_gradient(const Image&, int) const {
  throw CapabilityError("classifier does not provide input gradients");
}

std::pair<double, Image> CallbackClassifier::score_and_input_gradient(const Image& x,
                                                                      int target) const {
  if (!gradient_fn_) return Classifier::score_and_input_gradient(x, target);
  return gradient_fn_(x, target);
}

std::vector<double> SerializedClassifier::scores(const Image& x) const {
  std::lock_guard<std::mutex> lock(mu_);
  return inner_->scores(x);
}

std::pair<double, Image> SerializedClassifier::score_and_input_gradient(const Image& x,
                                                                        int target) const {
  std::lock_guard<std::mutex> lock(mu_);
  return inner_->score_and_input_gradient(x, target);
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) throw InputError("softmax: empty scores");
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    denom += out[i];
  }
  for (double& p : out) p /= denom;
  return out;
}

std::vector<double> SoftmaxScoreClassifier::scores(const Image& x) const {
  return softmax(base_->scores(x));
}

std::pair<double, Image> SoftmaxScoreClassifier::score_and_input_gradient(const Image& x,
                                                                          int target) const {
  const std::vector<double> probs = softmax(base_->scores(x));
  if (target < 0 || target >= static_cast<int>(probs.size()))
    throw InputError("SoftmaxScoreClassifier: target class out of range");
  // grad p_t = p_t (grad z_t - sum_k p_k grad z_k)
  Image acc(x.h, x.w, x.c);
  Image grad_t(x.h, x.w, x.c);
  for (int k = 0; k < static_cast<int>(probs.size()); ++k) {
    auto [score, g] = base_->score_and_input_gradient(x, k);
    (void)score;
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += probs[static_cast<std::size_t>(k)] * g.v[i];
    if (k == target) grad_t = std::move(g);
  }
  const double pt = probs[static_cast<std::size_t>(target)];
  Image out(x.h, x.w, x.c);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = pt * (grad_t.v[i] - acc.v[i]);
  return {pt, std::move(out)};
}

PreparedImage preprocess(const RawImage& img, int target_h, int target_w,
                         const std::vector<double>& mean,
                         const std::vector<double>& stddev) {
  const Image& px = img.pixels;
  if (px.h <= 0 || px.w <= 0) throw InputError("preprocess: empty image");
  if (target_h <= 0 || target_w <= 0) throw InputError("preprocess: bad target size");
  if (!all_finite(px.v)) throw InputError("preprocess: non-finite pixel values");
  if (static_cast<int>(mean.size()) != px.c || static_cast<int>(stddev.size()) != px.c)
    throw ConfigError("preprocess: mean/std size must equal channel count");
  for (double s : stddev)
    if (!(s > 0.0)) throw ConfigError("preprocess: std components must be positive");

  PreparedImage out;
  out.pixels = bilinear_resize(px, target_h, target_w);
  for (int r = 0; r < target_h; ++r)
    for (int c = 0; c < target_w; ++c)
      for (int ch = 0; ch < px.c; ++ch)
        out.pixels.at(r, c, ch) =
            (out.pixels.at(r, c, ch) - mean[static_cast<std::size_t>(ch)]) /
            stddev[static_cast<std::size_t>(ch)];
  out.meta = PrepMeta{px.h, px.w, mean, stddev};
  return out;
}

Prediction predict(const Classifier& model, const PreparedImage& x) {
  const Image& px = x.pixels;
  if (px.h != model.input_height() || px.w != model.input_width() ||
      px.c != model.input_channels())
    throw InputError("predict: input shape does not match the model");
  Prediction p;
  p.scores = model.scores(px);
  if (static_cast<int>(p.scores.size()) != model.num_classes())
    throw NumericError("predict: model returned wrong score count");
  p.predicted_class = 0;
  for (int k = 1; k < static_cast<int>(p.scores.size()); ++k)
    if (p.scores[static_cast<std::size_t>(k)] > p.scores[static_cast<std::size_t>(p.predicted_class)])
      p.predicted_class = k;
  return p;
}

std::pair<double, Image> target_score_and_gradient(const Classifier& model,
                                                   const PreparedImage& x, int target) {
  if (target < 0 || target >= model.num_classes())
    throw InputError("target_score_and_gradient: class index out of range");
  const Image& px = x.pixels;
  if (px.h != model.input_height() || px.w != model.input_width() ||
      px.c != model.input_channels())
    throw InputError("target_score_and_gradient: input shape does not match the model");
  return model.score_and_input_gradient(px, target);
}

}  // namespace hdm
