#include "hdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdm/mask_math.hpp"

namespace hdm {

SaliencyRecord make_saliency_record(MaskGrid map, std::string method, std::string source,
                                    int target_class) {
  if (map.v.empty()) throw InputError("SaliencyRecord: empty map");
  for (double& x : map.v) {
    if (!std::isfinite(x)) throw InputError("SaliencyRecord: non-finite value");
    if (x < 0.0 || x > 1.0) throw InputError("SaliencyRecord: value outside [0,1]");
    x = static_cast<double>(static_cast<float>(x));
  }
  if (target_class < 0) throw InputError("SaliencyRecord: negative class index");
  return SaliencyRecord{std::move(map), std::move(method), std::move(source), target_class};
}

PreparedImage mute_below_percentile(const PreparedImage& x, const SaliencyRecord& s,
                                    double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction < 1.0))
    throw InputError("mute_below_percentile: keep fraction must lie in (0,1)");
  if (s.map.h != x.pixels.h || s.map.w != x.pixels.w)
    throw InputError("mute_below_percentile: saliency/image shape mismatch");
  const int n = static_cast<int>(s.map.v.size());
  const int keep = std::clamp(
      static_cast<int>(std::ceil(keep_fraction * static_cast<double>(n))), 1, n);
  const double threshold = nearest_rank_threshold(s.map.v, keep);
  PreparedImage out = x;
  for (int r = 0; r < x.pixels.h; ++r)
    for (int c = 0; c < x.pixels.w; ++c)
      if (s.map.at(r, c) < threshold)
        for (int ch = 0; ch < x.pixels.c; ++ch) out.pixels.at(r, c, ch) = 0.0;
  return out;
}

double average_drop(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw InputError("average_drop: empty input");
  double acc = 0.0;
  for (auto [y, o] : pairs) {
    if (!(y > 0.0)) throw InputError("average_drop: base score must be positive");
    acc += std::max(0.0, y - o) / y;
  }
  return acc / static_cast<double>(pairs.size()) * 100.0;
}

double average_increase(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw InputError("average_increase: empty input");
  double acc = 0.0;
  for (auto [y, o] : pairs)
    if (y < o) acc += 1.0;
  return acc / static_cast<double>(pairs.size());
}

std::pair<CurvePoints, double> deletion_insertion(const Classifier& model,
                                                  const PreparedImage& x,
                                                  const SaliencyRecord& s, CurveMode mode) {
  const Image& px = x.pixels;
  if (s.map.h != px.h || s.map.w != px.w)
    throw InputError("deletion_insertion: saliency/image shape mismatch");
  if (s.target_class >= model.num_classes())
    throw InputError("deletion_insertion: class index out of range");

  const int n = px.h * px.w;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // descending saliency; ties resolved by row-major position
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = s.map.v[static_cast<std::size_t>(a)];
    const double sb = s.map.v[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });

  Image work = (mode == CurveMode::deletion) ? px : Image(px.h, px.w, px.c, 1.0);
  auto probability = [&]() {
    return softmax(model.scores(work)).at(static_cast<std::size_t>(s.target_class));
  };

  CurvePoints curve;
  curve.fractions.reserve(101);
  curve.probabilities.reserve(101);
  curve.fractions.push_back(0.0);
  curve.probabilities.push_back(probability());

  int applied = 0;
  for (int step = 1; step <= 100; ++step) {
    const int upto = static_cast<int>(
        std::llround(static_cast<double>(step) * static_cast<double>(n) / 100.0));
    for (; applied < upto; ++applied) {
      const int pix = order[static_cast<std::size_t>(applied)];
      const int r = pix / px.w;
      const int c = pix % px.w;
      for (int ch = 0; ch < px.c; ++ch)
        work.at(r, c, ch) = (mode == CurveMode::deletion) ? 0.0 : px.at(r, c, ch);
    }
    curve.fractions.push_back(static_cast<double>(step) / 100.0);
    curve.probabilities.push_back(probability());
  }

  double auc = 0.0;
  for (std::size_t t = 1; t < curve.fractions.size(); ++t)
    auc += 0.5 * (curve.probabilities[t - 1] + curve.probabilities[t]) *
           (curve.fractions[t] - curve.fractions[t - 1]);
  return {std::move(curve), auc};
}

double energy_proportion(const SaliencyRecord& s, const MaskGrid& foreground) {
  if (!s.map.same_shape(foreground))
    throw InputError("energy_proportion: saliency/foreground shape mismatch");
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.map.v.size(); ++i) {
    const double value = s.map.v[i];
    if (value < 0.0) throw InputError("energy_proportion: negative saliency");
    total += value;
    if (foreground.v[i] > 0.5) inside += value;
  }
  if (total == 0.0) return 0.0;
  return inside / total;
}

}  // namespace hdm
