#include "hdm/dynamic_mask.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

namespace hdm {

void DMConfig::validate() const {
  if (benchmark_sizes.empty()) throw ConfigError("DMConfig: no benchmark sizes");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : benchmark_sizes) {
    if (a <= 0 || b <= 0) throw ConfigError("DMConfig: benchmark sizes must be positive");
    if (!seen.insert({a, b}).second)
      throw ConfigError("DMConfig: duplicate benchmark size " + std::to_string(a) + "x" +
                        std::to_string(b));
  }
  if (scale_factors.empty()) throw ConfigError("DMConfig: no scale factors");
  for (int t : scale_factors)
    if (t < 2) throw ConfigError("DMConfig: scale factors must be >= 2");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("DMConfig: tau must lie in [0,1]");
  if (eta < 0.0) throw ConfigError("DMConfig: eta must be nonnegative");
  if (epochs <= 0) throw ConfigError("DMConfig: epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("DMConfig: learning rate must be positive");
  if (!(gamma_percentile > 0.0 && gamma_percentile < 1.0))
    throw ConfigError("DMConfig: gamma percentile must lie in (0,1)");
  for (const auto& [i, value] : eta_benchmark_overrides) {
    if (i < 0 || i >= static_cast<int>(benchmark_sizes.size()))
      throw ConfigError("DMConfig: eta benchmark override index out of range");
    if (value < 0.0) throw ConfigError("DMConfig: eta override must be nonnegative");
  }
  for (const auto& [key, value] : eta_cascade_overrides) {
    if (key[0] < 0 || key[0] >= static_cast<int>(benchmark_sizes.size()) || key[1] < 0 ||
        key[1] >= static_cast<int>(scale_factors.size()) || key[2] < 1)
      throw ConfigError("DMConfig: eta cascade override indices out of range");
    if (value < 0.0) throw ConfigError("DMConfig: eta override must be nonnegative");
  }
}

double DMConfig::benchmark_eta(int i) const {
  auto it = eta_benchmark_overrides.find(i);
  return it == eta_benchmark_overrides.end() ? eta : it->second;
}

double DMConfig::cascade_eta(int i, int j, int k) const {
  auto it = eta_cascade_overrides.find({i, j, k});
  return it == eta_cascade_overrides.end() ? eta : it->second;
}

int cascade_depth(int image_h, int image_w, int a, int b, int t) {
  if (a > image_h || b > image_w)
    throw ConfigError("cascade_depth: benchmark size exceeds image size");
  if (t < 2) throw ConfigError("cascade_depth: scale factor must be >= 2");
  int k = 0;
  std::int64_t sa = a, sb = b;
  while (sa * t <= image_h && sb * t <= image_w) {
    sa *= t;
    sb *= t;
    ++k;
  }
  return k;
}

CascadeEntry make_cascade_entry(MaskGrid grid, int i, int j, int k, const DMConfig& cfg,
                                int image_h, int image_w) {
  const auto [a, b] = cfg.benchmark_sizes.at(static_cast<std::size_t>(i));
  const int t = cfg.scale_factors.at(static_cast<std::size_t>(j));
  if (k < 0 || k > cascade_depth(image_h, image_w, a, b, t))
    throw InputError("CascadeEntry: level exceeds cascade depth");
  std::int64_t eh = a, ew = b;
  for (int s = 0; s < k; ++s) {
    eh *= t;
    ew *= t;
  }
  if (grid.h != eh || grid.w != ew)
    throw InputError("CascadeEntry: grid shape does not match t^k * benchmark size");
  return CascadeEntry{std::move(grid), i, j, k};
}

MaskGrid train_benchmark(const Classifier& model, const Image& x, std::pair<int, int> size,
                         const DMConfig& cfg, int target, std::vector<double>* trace) {
  const auto [a, b] = size;
  if (a > x.h || b > x.w) throw ConfigError("train_benchmark: benchmark larger than image");
  int index = -1;
  for (std::size_t i = 0; i < cfg.benchmark_sizes.size(); ++i)
    if (cfg.benchmark_sizes[i] == size) index = static_cast<int>(i);
  const double eta = index >= 0 ? cfg.benchmark_eta(index) : cfg.eta;
  const double ref = model.scores(x).at(static_cast<std::size_t>(target));

  const Chain chain = DirectChain{};
  auto objective = [&](const MaskGrid& m, MaskGrid& grad) {
    return loss_and_gradient(model, x, m, chain, eta, target, grad, ref);
  };
  OptimizeResult res = optimize(MaskGrid(a, b, cfg.tau), objective,
                                OptimizerConfig{cfg.epochs, cfg.learning_rate, cfg.clamp});
  if (trace) *trace = std::move(res.trace);
  return std::move(res.grid);
}

std::vector<CascadeEntry> train_cascade(const Classifier& model, const Image& x,
                                        const MaskGrid& benchmark, int bench_index,
                                        int scale_index, const DMConfig& cfg, int target,
                                        std::vector<LossTrace>* traces) {
  const auto [a, b] = cfg.benchmark_sizes.at(static_cast<std::size_t>(bench_index));
  const int t = cfg.scale_factors.at(static_cast<std::size_t>(scale_index));
  if (benchmark.h != a || benchmark.w != b)
    throw InputError("train_cascade: benchmark grid shape mismatch");
  const int depth = cascade_depth(x.h, x.w, a, b, t);
  const double ref = model.scores(x).at(static_cast<std::size_t>(target));

  std::vector<CascadeEntry> entries;
  entries.push_back(make_cascade_entry(benchmark, bench_index, scale_index, 0, cfg, x.h, x.w));
  for (int k = 1; k <= depth; ++k) {
    const MaskGrid& prev = entries.back().grid;
    const int gh = prev.h * t;
    const int gw = prev.w * t;
    const double eta = cfg.cascade_eta(bench_index, scale_index, k);
    const Chain chain = GuidedChain{prev};
    auto objective = [&](const MaskGrid& m, MaskGrid& grad) {
      return loss_and_gradient(model, x, m, chain, eta, target, grad, ref);
    };
    OptimizeResult res = optimize(MaskGrid(gh, gw, cfg.tau), objective,
                                  OptimizerConfig{cfg.epochs, cfg.learning_rate, cfg.clamp});
    if (traces) {
      LossTrace lt;
      lt.label = "cascade_i" + std::to_string(bench_index) + "_j" + std::to_string(scale_index) +
                 "_k" + std::to_string(k);
      lt.values = std::move(res.trace);
      traces->push_back(std::move(lt));
    }
    entries.push_back(
        make_cascade_entry(std::move(res.grid), bench_index, scale_index, k, cfg, x.h, x.w));
  }
  return entries;
}

MaskGrid stack_masks(const std::vector<CascadeEntry>& entries, int image_h, int image_w,
                     DMConfig::StackMode mode) {
  if (entries.empty()) throw InputError("stack_masks: no entries");
  MaskGrid acc(image_h, image_w);
  if (mode == DMConfig::StackMode::raw) {
    for (const CascadeEntry& e : entries) {
      const MaskGrid up = upsample(e.grid, image_h, image_w);
      for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += up.v[i];
    }
    return acc;
  }
  // chained: within one (i, j) group fold each level with its upsampled
  // predecessors before stacking
  std::map<std::pair<int, int>, MaskGrid> running;
  for (const CascadeEntry& e : entries) {
    const auto key = std::make_pair(e.i, e.j);
    auto it = running.find(key);
    MaskGrid folded;
    if (it == running.end() || e.k == 0) {
      folded = e.grid;
    } else {
      folded = hadamard(e.grid, upsample(it->second, e.grid.h, e.grid.w));
    }
    const MaskGrid up = upsample(folded, image_h, image_w);
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += up.v[i];
    running.insert_or_assign(key, std::move(folded));
  }
  return acc;
}

MaskGrid threshold_overlay(const MaskGrid& stacked, double gamma_percentile) {
  if (!all_finite(stacked.v)) throw InputError("threshold_overlay: non-finite values");
  if (!(gamma_percentile > 0.0 && gamma_percentile < 1.0))
    throw InputError("threshold_overlay: percentile must lie in (0,1)");
  const int n = static_cast<int>(stacked.v.size());
  const int keep = std::clamp(
      static_cast<int>(std::ceil(gamma_percentile * static_cast<double>(n))), 1, n);
  const double gamma = nearest_rank_threshold_exclusive(stacked.v, keep);
  MaskGrid cut(stacked.h, stacked.w);
  for (std::size_t i = 0; i < cut.v.size(); ++i)
    cut.v[i] = stacked.v[i] >= gamma ? stacked.v[i] - gamma : 0.0;
  return normalize(cut);
}

DMResult run_dm(const Classifier& model, const Image& x, const DMConfig& cfg,
                std::optional<int> target) {
  cfg.validate();
  for (auto [a, b] : cfg.benchmark_sizes)
    if (a > x.h || b > x.w) throw ConfigError("run_dm: benchmark size exceeds image size");

  DMResult result;
  if (target) {
    if (*target < 0 || *target >= model.num_classes())
      throw InputError("run_dm: target class out of range");
    result.target = *target;
  } else {
    std::vector<double> s = model.scores(x);
    int best = 0;
    for (int k = 1; k < static_cast<int>(s.size()); ++k)
      if (s[static_cast<std::size_t>(k)] > s[static_cast<std::size_t>(best)]) best = k;
    result.target = best;
  }

  for (int i = 0; i < static_cast<int>(cfg.benchmark_sizes.size()); ++i) {
    std::vector<double> bench_trace;
    MaskGrid d = train_benchmark(model, x, cfg.benchmark_sizes[static_cast<std::size_t>(i)], cfg,
                                 result.target, &bench_trace);
    result.traces.push_back(LossTrace{"benchmark_i" + std::to_string(i), std::move(bench_trace)});
    for (int j = 0; j < static_cast<int>(cfg.scale_factors.size()); ++j) {
      std::vector<CascadeEntry> entries =
          train_cascade(model, x, d, i, j, cfg, result.target, &result.traces);
      for (CascadeEntry& e : entries) result.cascade.push_back(std::move(e));
    }
  }
  result.stacked = stack_masks(result.cascade, x.h, x.w, cfg.stack_mode);
  result.overlay = threshold_overlay(result.stacked, cfg.gamma_percentile);
  return result;
}

}  // namespace hdm
