#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hdm/image_io.hpp"
#include "hdm/render.hpp"
#include "hdm/saliency_file.hpp"

using namespace hdm;
namespace fs = std::filesystem;

namespace {

SaliencyRecord random_record(int h, int w, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  MaskGrid m(h, w);
  for (double& v : m.v) v = dist(rng);
  return make_saliency_record(std::move(m), "unit-test", "some/image.png", 2);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace

TEST_CASE("jet anchors are exact and the midpoint interpolates") {
  auto check_rgb = [](Rgb got, double r, double g, double b) {
    CHECK(got.r == doctest::Approx(r).epsilon(1e-12));
    CHECK(got.g == doctest::Approx(g).epsilon(1e-12));
    CHECK(got.b == doctest::Approx(b).epsilon(1e-12));
  };
  check_rgb(jet_colormap(0.0), 0.0, 0.0, 0.5);
  check_rgb(jet_colormap(0.125), 0.0, 0.0, 1.0);
  check_rgb(jet_colormap(0.375), 0.0, 1.0, 1.0);
  check_rgb(jet_colormap(0.625), 1.0, 1.0, 0.0);
  check_rgb(jet_colormap(0.875), 1.0, 0.0, 0.0);
  check_rgb(jet_colormap(1.0), 0.5, 0.0, 0.0);
  // midpoint of the (0.375, 0.625) segment
  check_rgb(jet_colormap(0.5), 0.5, 1.0, 0.5);
  // out-of-range values clamp
  check_rgb(jet_colormap(-3.0), 0.0, 0.0, 0.5);
  check_rgb(jet_colormap(7.0), 0.5, 0.0, 0.0);
}

TEST_CASE("jet is continuous across anchor boundaries") {
  const double eps = 1e-9;
  for (double anchor : {0.125, 0.375, 0.625, 0.875}) {
    const Rgb lo = jet_colormap(anchor - eps);
    const Rgb hi = jet_colormap(anchor + eps);
    CHECK(std::abs(lo.r - hi.r) < 1e-6);
    CHECK(std::abs(lo.g - hi.g) < 1e-6);
    CHECK(std::abs(lo.b - hi.b) < 1e-6);
  }
}

TEST_CASE("overlay endpoints reproduce image and heatmap exactly") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  RawImage img;
  img.pixels = Image(6, 5, 3);
  for (double& v : img.pixels.v) v = dist(rng);
  SaliencyRecord s = random_record(6, 5, 24);

  Image plain = render_overlay(img, s, 0.0);
  for (std::size_t i = 0; i < plain.v.size(); ++i)
    CHECK(plain.v[i] == doctest::Approx(img.pixels.v[i]).epsilon(1e-12));

  Image heat = render_overlay(img, s, 1.0);
  Image pure = heatmap_image(s.map);
  for (std::size_t i = 0; i < heat.v.size(); ++i)
    CHECK(heat.v[i] == doctest::Approx(pure.v[i]).epsilon(1e-12));

  Image blend = render_overlay(img, s, 0.5);
  for (double v : blend.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(render_overlay(img, s, 1.5), InputError);
}

TEST_CASE("grayscale images broadcast into the overlay") {
  RawImage img;
  img.pixels = Image(3, 3, 1, 0.4);
  SaliencyRecord s = random_record(3, 3, 25);
  Image out = render_overlay(img, s, 0.0);
  REQUIRE(out.c == 3);
  for (double v : out.v) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("mask-image mode multiplies the saliency into the image") {
  RawImage img;
  img.pixels = Image(2, 2, 1);
  img.pixels.v = {0.2, 0.4, 0.6, 0.8};
  SaliencyRecord ones = make_saliency_record(MaskGrid(2, 2, 1.0), "m", "s", 0);
  Image out = render_mask_image(img, ones);
  CHECK(out.v == img.pixels.v);

  SaliencyRecord half = make_saliency_record(MaskGrid(2, 2, 0.5), "m", "s", 0);
  Image halved = render_mask_image(img, half);
  for (std::size_t i = 0; i < halved.v.size(); ++i)
    CHECK(halved.v[i] == doctest::Approx(img.pixels.v[i] * 0.5).epsilon(1e-12));

  RawImage wrong;
  wrong.pixels = Image(3, 2, 1, 0.1);
  CHECK_THROWS_AS(render_mask_image(wrong, ones), InputError);
}

TEST_CASE("saliency files round-trip bit-exactly") {
  const fs::path dir = fs::temp_directory_path() / "hdm_salfile";
  fs::create_directories(dir);
  for (unsigned seed : {1u, 2u, 3u}) {
    SaliencyRecord rec = random_record(7, 11, seed);
    const fs::path path = dir / ("roundtrip_" + std::to_string(seed) + ".sal");
    save_saliency(rec, path);
    SaliencyRecord back = load_saliency(path);
    CHECK(back.map.h == rec.map.h);
    CHECK(back.map.w == rec.map.w);
    CHECK(back.map.v == rec.map.v);  // bitwise
    CHECK(back.method == rec.method);
    CHECK(back.source == rec.source);
    CHECK(back.target_class == rec.target_class);

    // saving the loaded record reproduces the same bytes
    const fs::path again = dir / "again.sal";
    save_saliency(back, again);
    CHECK(slurp(path) == slurp(again));
  }
  fs::remove_all(dir);
}

TEST_CASE("malformed saliency files are rejected with format errors") {
  const fs::path dir = fs::temp_directory_path() / "hdm_salfile_bad";
  fs::create_directories(dir);
  SaliencyRecord rec = random_record(4, 4, 9);
  const fs::path good = dir / "good.sal";
  save_saliency(rec, good);
  const std::string bytes = slurp(good);

  SUBCASE("truncated payload names the missing byte count") {
    spit(dir / "short.sal", bytes.substr(0, bytes.size() - 13));
    try {
      load_saliency(dir / "short.sal");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
      CHECK(std::string(e.what()).find("expected") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    std::string corrupted = bytes;
    corrupted[0] = 'X';
    spit(dir / "magic.sal", corrupted);
    CHECK_THROWS_AS(load_saliency(dir / "magic.sal"), FormatError);
  }
  SUBCASE("unsupported version") {
    std::string corrupted = bytes;
    corrupted[6] = 2;  // version lives right after the 6-byte magic
    spit(dir / "version.sal", corrupted);
    try {
      load_saliency(dir / "version.sal");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }
  SUBCASE("trailing bytes") {
    spit(dir / "long.sal", bytes + "junk");
    CHECK_THROWS_AS(load_saliency(dir / "long.sal"), FormatError);
  }
  fs::remove_all(dir);
}

TEST_CASE("png round-trip through the image codec") {
  const fs::path dir = fs::temp_directory_path() / "hdm_pngio";
  fs::create_directories(dir);
  Image img(5, 4, 3);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (double& v : img.v) v = std::lround(dist(rng) * 255.0) / 255.0;  // 8-bit friendly
  write_png(dir / "c.png", img);
  RawImage back = load_image(dir / "c.png");
  REQUIRE(back.pixels.same_shape(img));
  for (std::size_t i = 0; i < img.v.size(); ++i)
    CHECK(back.pixels.v[i] == doctest::Approx(img.v[i]).epsilon(1e-12));

  CHECK_THROWS_AS(load_image(dir / "missing.png"), InputError);
  fs::remove_all(dir);
}
