#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "hdm/config.hpp"

using namespace hdm;
namespace fs = std::filesystem;

TEST_CASE("the natural preset carries the published defaults") {
  ToolkitConfig cfg = preset("natural");
  CHECK(cfg.hdm.stages == 3);
  REQUIRE(cfg.hdm.dm.benchmark_sizes.size() == 6);
  CHECK(cfg.hdm.dm.benchmark_sizes.front() == std::pair<int, int>{6, 6});
  CHECK(cfg.hdm.dm.benchmark_sizes.back() == std::pair<int, int>{11, 11});
  CHECK(cfg.hdm.dm.scale_factors == std::vector<int>{2, 3, 5});
  CHECK(cfg.hdm.dm.eta == 100.0);
  CHECK(cfg.hdm.dm.epochs == 800);
  CHECK(cfg.hdm.dm.learning_rate == 1e-2);
  CHECK(cfg.hdm.dm.gamma_percentile == 0.25);
  CHECK(cfg.hdm.mix_epochs == 400);
  CHECK(cfg.hdm.mix_learning_rate == 0.1);
  CHECK(cfg.hdm.lambda == 1e-4);
  CHECK(cfg.mean == std::vector<double>{0.485, 0.456, 0.406});
  CHECK(cfg.stddev == std::vector<double>{0.229, 0.224, 0.225});
}

TEST_CASE("the medical preset narrows the sizes and keeps one stage") {
  ToolkitConfig cfg = preset("medical");
  CHECK(cfg.hdm.stages == 1);
  REQUIRE(cfg.hdm.dm.benchmark_sizes.size() == 4);
  CHECK(cfg.hdm.dm.benchmark_sizes.back() == std::pair<int, int>{9, 9});
  CHECK(cfg.hdm.dm.scale_factors == std::vector<int>{2, 3});
  CHECK(cfg.hdm.dm.gamma_percentile == 0.30);
}

TEST_CASE("the desk preset fits the 32x32 testbed") {
  ToolkitConfig cfg = preset("desk");
  CHECK(cfg.hdm.stages == 2);
  CHECK(cfg.hdm.dm.benchmark_sizes ==
        std::vector<std::pair<int, int>>{{4, 4}, {5, 5}, {6, 6}});
  CHECK(cfg.hdm.dm.scale_factors == std::vector<int>{2});
  CHECK(cfg.hdm.dm.epochs == 200);
  CHECK(cfg.mean == std::vector<double>{0.0});
  CHECK(cfg.stddev == std::vector<double>{1.0});

  CHECK_THROWS_AS(preset("imaginary"), ConfigError);
}

TEST_CASE("config files round-trip through format and parse") {
  ToolkitConfig cfg = preset("natural");
  cfg.hdm.dm.eta_benchmark_overrides[2] = 50.0;
  cfg.hdm.dm.eta_cascade_overrides[{0, 1, 2}] = 25.0;
  cfg.hdm.dm.stack_mode = DMConfig::StackMode::chained;
  cfg.training_score = ScoreKind::probability;

  ToolkitConfig back = parse_config(format_config(cfg));
  CHECK(back.hdm.dm.benchmark_sizes == cfg.hdm.dm.benchmark_sizes);
  CHECK(back.hdm.dm.scale_factors == cfg.hdm.dm.scale_factors);
  CHECK(back.hdm.dm.tau == cfg.hdm.dm.tau);
  CHECK(back.hdm.dm.eta == cfg.hdm.dm.eta);
  CHECK(back.hdm.dm.epochs == cfg.hdm.dm.epochs);
  CHECK(back.hdm.dm.learning_rate == cfg.hdm.dm.learning_rate);
  CHECK(back.hdm.dm.gamma_percentile == cfg.hdm.dm.gamma_percentile);
  CHECK(back.hdm.dm.stack_mode == DMConfig::StackMode::chained);
  CHECK(back.hdm.dm.eta_benchmark_overrides == cfg.hdm.dm.eta_benchmark_overrides);
  CHECK(back.hdm.dm.eta_cascade_overrides == cfg.hdm.dm.eta_cascade_overrides);
  CHECK(back.hdm.stages == cfg.hdm.stages);
  CHECK(back.hdm.mix_epochs == cfg.hdm.mix_epochs);
  CHECK(back.hdm.mix_learning_rate == cfg.hdm.mix_learning_rate);
  CHECK(back.hdm.lambda == cfg.hdm.lambda);
  CHECK(back.hdm.v_init == cfg.hdm.v_init);
  CHECK(back.mean == cfg.mean);
  CHECK(back.stddev == cfg.stddev);
  CHECK(back.training_score == cfg.training_score);
}

TEST_CASE("config parsing reports the offending line or key") {
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4x4\nscale_factors = 2\nnot a line\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4x4\nscale_factors = 2\nwhat = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4x4\nscale_factors = 2\nepochs = many\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4\nscale_factors = 2\n"), ConfigError);
  // invariants are enforced after parsing
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4x4,4x4\nscale_factors = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4x4\nscale_factors = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("benchmark_sizes = 4x4\nscale_factors = 2\ngamma_percentile = 0\n"),
                  ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  ToolkitConfig cfg = parse_config(
      "# a comment\n"
      "\n"
      "benchmark_sizes = 4x4, 5x5\n"
      "scale_factors = 2, 3\n"
      "  # indented comment\n"
      "stages = 2\n"
      "mean = 0\n"
      "std = 1\n");
  CHECK(cfg.hdm.dm.benchmark_sizes.size() == 2);
  CHECK(cfg.hdm.stages == 2);
}

TEST_CASE("config files persist to disk") {
  const fs::path dir = fs::temp_directory_path() / "hdm_config";
  fs::create_directories(dir);
  ToolkitConfig cfg = preset("desk");
  save_config_file(cfg, dir / "desk.cfg");
  ToolkitConfig back = load_config_file(dir / "desk.cfg");
  CHECK(back.hdm.dm.benchmark_sizes == cfg.hdm.dm.benchmark_sizes);
  CHECK(back.hdm.stages == cfg.hdm.stages);
  CHECK_THROWS_AS(load_config_file(dir / "missing.cfg"), InputError);
  fs::remove_all(dir);
}
