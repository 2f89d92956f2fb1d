#include "hdm/hierarchical.hpp"

namespace hdm {

void HDMConfig::validate() const {
  if (stages < 1) throw ConfigError("HDMConfig: stages must be >= 1");
  if (mix_epochs <= 0) throw ConfigError("HDMConfig: mix epochs must be positive");
  if (!(mix_learning_rate > 0.0))
    throw ConfigError("HDMConfig: mix learning rate must be positive");
  if (lambda < 0.0) throw ConfigError("HDMConfig: lambda must be nonnegative");
  if (v_init == 0.0) throw ConfigError("HDMConfig: v_init must be nonzero");
  dm.validate();
}

std::vector<double> mix_weights(const std::vector<double>& v) {
  std::vector<double> w(v.size(), 0.0);
  double tail = 0.0;
  for (int j = static_cast<int>(v.size()) - 1; j >= 0; --j) {
    tail += v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    w[static_cast<std::size_t>(j)] = tail;
  }
  return w;
}

MaskGrid mix_mask(const std::vector<MaskGrid>& masks, const std::vector<double>& v) {
  if (masks.empty()) throw InputError("mix_mask: no masks");
  if (masks.size() != v.size()) throw InputError("mix_mask: v size does not match mask count");
  for (const MaskGrid& m : masks)
    if (!m.same_shape(masks.front())) throw InputError("mix_mask: mask shape mismatch");
  const std::vector<double> w = mix_weights(v);
  double wsum = 0.0;
  for (double wj : w) wsum += wj;
  if (wsum <= 0.0) throw InputError("mix_mask: degenerate mix weights (all v zero)");
  MaskGrid out(masks.front().h, masks.front().w);
  for (std::size_t j = 0; j < masks.size(); ++j) {
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += w[j] * masks[j].v[i];
  }
  for (double& m : out.v) m /= wsum;
  return out;
}

StageOutputs iterate_stages(const Classifier& model, const Image& x0, const HDMConfig& cfg,
                            int target) {
  cfg.validate();
  StageOutputs out;
  MaskGrid cumulative(x0.h, x0.w);
  Image current = x0;
  for (int stage = 0; stage < cfg.stages; ++stage) {
    DMResult dm = run_dm(model, current, cfg.dm, target);
    for (std::size_t i = 0; i < cumulative.v.size(); ++i)
      cumulative.v[i] += dm.overlay.v[i];
    const MaskGrid suppression = normalize(cumulative);
    Image next(x0.h, x0.w, x0.c);
    std::size_t px = 0;
    for (int r = 0; r < x0.h; ++r)
      for (int c = 0; c < x0.w; ++c) {
        const double keep = 1.0 - suppression.at(r, c);
        for (int ch = 0; ch < x0.c; ++ch, ++px) next.v[px] = keep * x0.v[px];
      }
    out.masks.push_back(dm.overlay);
    out.details.push_back(std::move(dm));
    out.images.push_back(next);
    current = std::move(next);
  }
  return out;
}

MixResult optimize_mix(const Classifier& model, const Image& x0,
                       const std::vector<MaskGrid>& masks, const HDMConfig& cfg, int target) {
  if (masks.empty()) throw InputError("optimize_mix: no masks");
  const int stages = static_cast<int>(masks.size());
  const double ref = model.scores(x0).at(static_cast<std::size_t>(target));
  const Chain chain = MixChain{masks};
  auto objective = [&](const MaskGrid& v, MaskGrid& grad) {
    return loss_and_gradient(model, x0, v, chain, cfg.lambda, target, grad, ref);
  };
  OptimizeResult res =
      optimize(MaskGrid(1, stages, cfg.v_init), objective,
               OptimizerConfig{cfg.mix_epochs, cfg.mix_learning_rate, /*clamp=*/false});
  MixResult mix;
  mix.v = res.grid.v;
  mix.w = mix_weights(mix.v);
  mix.mixed = mix_mask(masks, mix.v);
  mix.trace = std::move(res.trace);
  return mix;
}

HDMResult explain(const Classifier& model, const RawImage& raw, const HDMConfig& cfg,
                  const std::vector<double>& mean, const std::vector<double>& stddev,
                  std::optional<int> target) {
  cfg.validate();
  HDMResult result;
  result.input = preprocess(raw, model.input_height(), model.input_width(), mean, stddev);
  if (target) {
    if (*target < 0 || *target >= model.num_classes())
      throw InputError("explain: target class out of range");
    result.target = *target;
  } else {
    result.target = predict(model, result.input).predicted_class;
  }
  result.stages = iterate_stages(model, result.input.pixels, cfg, result.target);
  result.mix = optimize_mix(model, result.input.pixels, result.stages.masks, cfg, result.target);
  return result;
}

}  // namespace hdm
