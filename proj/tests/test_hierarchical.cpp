#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hdm/hierarchical.hpp"
#include "hdm/metrics.hpp"
#include "oracles.hpp"
#include "test_models.hpp"

using namespace hdm;

namespace {

HDMConfig desk_hdm(int stages = 2) {
  HDMConfig cfg;
  cfg.stages = stages;
  cfg.dm.benchmark_sizes = {{4, 4}, {5, 5}, {6, 6}};
  cfg.dm.scale_factors = {2};
  cfg.dm.eta = 7.0;
  cfg.dm.epochs = 200;
  cfg.dm.learning_rate = 0.05;
  cfg.dm.gamma_percentile = 0.25;
  cfg.mix_epochs = 200;
  cfg.mix_learning_rate = 0.1;
  cfg.lambda = 1e-4;
  return cfg;
}

double support_iou(const MaskGrid& a, const MaskGrid& b) {
  double inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const bool sa = a.v[i] > 0.0, sb = b.v[i] > 0.0;
    inter += (sa && sb) ? 1.0 : 0.0;
    uni += (sa || sb) ? 1.0 : 0.0;
  }
  return uni == 0.0 ? 0.0 : inter / uni;
}

}  // namespace

TEST_CASE("mix weights are non-increasing for any v") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 5);
    for (double& x : v) x = dist(rng);
    const std::vector<double> w = mix_weights(v);
    for (std::size_t j = 0; j + 1 < w.size(); ++j) CHECK(w[j] >= w[j + 1]);
    for (double wj : w) CHECK(wj >= 0.0);
  }
}

TEST_CASE("mix mask evaluates the documented weight combinations") {
  MaskGrid m1(2, 2, 1.0), m2(2, 2, 0.5), m3(2, 2, 0.0);
  const std::vector<MaskGrid> masks = {m1, m2, m3};

  SUBCASE("v = (1,1,1) gives w = (3,2,1)") {
    MaskGrid mh = mix_mask(masks, {1.0, 1.0, 1.0});
    // (3*1 + 2*0.5 + 1*0) / 6 = 4/6
    for (double v : mh.v) CHECK(v == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("v = (0,0,1) gives the plain mean") {
    MaskGrid mh = mix_mask(masks, {0.0, 0.0, 1.0});
    for (double v : mh.v) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("v = (2,0,0) selects the first mask") {
    MaskGrid mh = mix_mask(masks, {2.0, 0.0, 0.0});
    for (double v : mh.v) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("an all-zero v is rejected") {
    CHECK_THROWS_AS(mix_mask(masks, {0.0, 0.0, 0.0}), InputError);
  }
}

TEST_CASE("the mixed mask is a convex combination of the stage masks") {
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::uniform_real_distribution<double> vdist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MaskGrid> masks;
    for (int s = 0; s < 3; ++s) {
      MaskGrid m(4, 4);
      for (double& v : m.v) v = dist(rng);
      masks.push_back(std::move(m));
    }
    std::vector<double> v = {vdist(rng), vdist(rng), vdist(rng)};
    if (v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0) v[0] = 1.0;
    MaskGrid mh = mix_mask(masks, v);
    for (std::size_t i = 0; i < mh.v.size(); ++i) {
      const double lo = std::min({masks[0].v[i], masks[1].v[i], masks[2].v[i]});
      const double hi = std::max({masks[0].v[i], masks[1].v[i], masks[2].v[i]});
      CHECK(mh.v[i] >= lo - 1e-12);
      CHECK(mh.v[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("suppression zeroes fully-masked pixels exactly") {
  const PlantedDataset& data = fixtures::single_patch_data();
  const LinearClassifier& model = fixtures::single_patch_model();
  HDMConfig cfg = desk_hdm(2);
  cfg.dm.epochs = 40;
  StageOutputs stages = iterate_stages(model, data.images[0], cfg, data.labels[0]);
  REQUIRE(stages.masks.size() == 2);
  REQUIRE(stages.images.size() == 2);

  // after stage 1 the suppression is normalize(M_1) = M_1 (overlay already spans [0,1])
  const MaskGrid& m1 = stages.masks[0];
  bool saw_full = false;
  for (int r = 0; r < m1.h; ++r)
    for (int c = 0; c < m1.w; ++c)
      if (m1.at(r, c) == 1.0) {
        saw_full = true;
        CHECK(stages.images[0].at(r, c, 0) == 0.0);
      }
  CHECK(saw_full);

  // cumulative masks never shrink
  for (std::size_t i = 0; i < m1.v.size(); ++i) CHECK(stages.masks[1].v[i] >= 0.0);
}

TEST_CASE("cumulative suppression masks never shrink") {
  const PlantedDataset& data = fixtures::single_patch_data();
  const LinearClassifier& model = fixtures::single_patch_model();
  HDMConfig cfg = desk_hdm(3);
  cfg.dm.epochs = 40;
  StageOutputs stages = iterate_stages(model, data.images[2], cfg, data.labels[2]);
  MaskGrid cum_prev(32, 32, 0.0);
  MaskGrid cum(32, 32, 0.0);
  for (const MaskGrid& m : stages.masks) {
    for (std::size_t i = 0; i < cum.v.size(); ++i) cum.v[i] += m.v[i];
    const MaskGrid sup_prev = normalize(cum_prev);
    const MaskGrid sup = normalize(cum);
    for (std::size_t i = 0; i < cum.v.size(); ++i) {
      CHECK(cum.v[i] >= cum_prev.v[i]);
      if (sup_prev.v[i] > 0.0) CHECK(sup.v[i] > 0.0);  // support never shrinks
    }
    cum_prev = cum;
  }
}

TEST_CASE("stage masks on the dual-patch testbed are nearly disjoint") {
  const PlantedDataset& data = fixtures::dual_patch_data();
  const LinearClassifier& model = fixtures::dual_patch_model();
  HDMConfig cfg = desk_hdm(2);
  StageOutputs stages = iterate_stages(model, data.images[0], cfg, data.labels[0]);
  CHECK(support_iou(stages.masks[0], stages.masks[1]) < 0.5);
}

TEST_CASE("optimize_mix leaves v untouched when it cannot matter") {
  const LinearClassifier& model = fixtures::single_patch_model();
  const Image& x = fixtures::single_patch_data().images[0];
  HDMConfig cfg = desk_hdm(1);
  cfg.mix_epochs = 50;

  SUBCASE("single stage") {
    std::mt19937 rng(15);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    MaskGrid m(32, 32);
    for (double& v : m.v) v = dist(rng);
    MixResult mix = optimize_mix(model, x, {m}, cfg, 0);
    REQUIRE(mix.v.size() == 1);
    CHECK(mix.v[0] == cfg.v_init);
    CHECK(mix.mixed.v == m.v);
  }
  SUBCASE("identical masks") {
    MaskGrid m(32, 32, 0.25);
    MixResult mix = optimize_mix(model, x, {m, m, m}, cfg, 0);
    for (double v : mix.v) CHECK(v == cfg.v_init);
    CHECK(mix.mixed.v == m.v);
  }
}

TEST_CASE("mix objective gradient matches finite differences at the optimizer's setup") {
  const PlantedDataset& data = fixtures::single_patch_data();
  const LinearClassifier& model = fixtures::single_patch_model();
  const Image& x = data.images[6];
  HDMConfig cfg = desk_hdm(3);
  cfg.dm.epochs = 30;
  StageOutputs stages = iterate_stages(model, x, cfg, data.labels[6]);

  const Chain chain = MixChain{stages.masks};
  MaskGrid v(1, 3);
  v.v = {1.0, 0.8, 0.6};
  MaskGrid grad(1, 3);
  loss_and_gradient(model, x, v, chain, cfg.lambda, data.labels[6], grad);
  auto loss_only = [&](const MaskGrid& m) {
    MaskGrid g(m.h, m.w);
    return loss_and_gradient(model, x, m, chain, cfg.lambda, data.labels[6], g).total;
  };
  MaskGrid fd = oracle::finite_difference(loss_only, v, 1e-6);
  CHECK(oracle::max_relative_error(grad, fd, 1e-6) < 1e-4);
}

TEST_CASE("explain is deterministic end to end") {
  const PlantedDataset& data = fixtures::single_patch_data();
  const LinearClassifier& model = fixtures::single_patch_model();
  HDMConfig cfg = desk_hdm(2);
  cfg.dm.epochs = 30;
  cfg.mix_epochs = 30;
  RawImage raw;
  raw.pixels = data.images[9];
  HDMResult a = explain(model, raw, cfg, {0.0}, {1.0});
  HDMResult b = explain(model, raw, cfg, {0.0}, {1.0});
  CHECK(a.target == b.target);
  CHECK(a.mix.mixed.v == b.mix.mixed.v);
  CHECK(a.mix.v == b.mix.v);
}

TEST_CASE("explain beats a uniform mask at patch localization") {
  const PlantedDataset& data = fixtures::single_patch_data();
  const LinearClassifier& model = fixtures::single_patch_model();
  const int idx = 12;
  RawImage raw;
  raw.pixels = data.images[static_cast<std::size_t>(idx)];
  HDMResult res = explain(model, raw, desk_hdm(2), {0.0}, {1.0});
  const MaskGrid fg = foreground_mask(data, idx);
  double area = 0.0;
  for (double v : fg.v) area += v;
  area /= static_cast<double>(fg.v.size());
  const SaliencyRecord rec = make_saliency_record(res.mix.mixed, "hdm", "testbed", res.target);
  // a uniform mask would score exactly the area fraction
  CHECK(energy_proportion(rec, fg) >= area);
}

TEST_CASE("explain with one stage reproduces the DM overlay exactly") {
  const PlantedDataset& data = fixtures::single_patch_data();
  const LinearClassifier& model = fixtures::single_patch_model();
  HDMConfig cfg = desk_hdm(1);
  cfg.dm.epochs = 30;
  cfg.mix_epochs = 20;
  RawImage raw;
  raw.pixels = data.images[15];
  HDMResult res = explain(model, raw, cfg, {0.0}, {1.0});
  DMResult dm = run_dm(model, data.images[15], cfg.dm, res.target);
  CHECK(res.mix.mixed.v == dm.overlay.v);
  CHECK(res.stages.masks[0].v == dm.overlay.v);
}

TEST_CASE("config validation") {
  HDMConfig cfg = desk_hdm(2);
  CHECK_NOTHROW(cfg.validate());
  cfg.stages = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = desk_hdm(2);
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = desk_hdm(2);
  cfg.v_init = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
