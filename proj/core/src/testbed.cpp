#include "hdm/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "hdm/image_io.hpp"

namespace hdm {
namespace {

double quantize8(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

PlantedDataset generate_dataset(std::uint64_t seed, const TestbedConfig& cfg) {
  if (cfg.image_size <= 0 || cfg.num_classes < 2 || cfg.per_class <= 0)
    throw ConfigError("generate_dataset: bad geometry");
  if (cfg.patch_size <= 0 || cfg.patch_size > cfg.image_size)
    throw ConfigError("generate_dataset: patch exceeds image bounds");
  if (!(cfg.noise_level >= 0.0 && cfg.noise_level < 0.5))
    throw ConfigError("generate_dataset: noise level out of range");

  const int cells = cfg.image_size / cfg.patch_size;
  const int patches_per_class = cfg.mode == PatchMode::dual ? 2 : 1;
  if (cells * cells < cfg.num_classes * patches_per_class)
    throw ConfigError("generate_dataset: not enough room for disjoint class patches");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // anchors on a patch-aligned grid, shuffled, then dealt out per class
  std::vector<std::pair<int, int>> anchors;
  for (int r = 0; r < cells; ++r)
    for (int c = 0; c < cells; ++c) anchors.emplace_back(r * cfg.patch_size, c * cfg.patch_size);
  std::shuffle(anchors.begin(), anchors.end(), rng);

  PlantedDataset data;
  data.image_h = cfg.image_size;
  data.image_w = cfg.image_size;
  data.noise_level = cfg.noise_level;
  data.class_patches.resize(static_cast<std::size_t>(cfg.num_classes));
  int next = 0;
  for (int cls = 0; cls < cfg.num_classes; ++cls)
    for (int p = 0; p < patches_per_class; ++p) {
      const auto [r, c] = anchors[static_cast<std::size_t>(next++)];
      data.class_patches[static_cast<std::size_t>(cls)].push_back(
          PatchSpec{r, c, cfg.patch_size, cfg.patch_size, cfg.patch_intensity});
    }

  for (int cls = 0; cls < cfg.num_classes; ++cls) {
    for (int n = 0; n < cfg.per_class; ++n) {
      Image img(cfg.image_size, cfg.image_size, 1);
      for (double& v : img.v) v = quantize8(cfg.noise_level * unit(rng));
      for (const PatchSpec& patch : data.class_patches[static_cast<std::size_t>(cls)])
        for (int r = patch.row; r < patch.row + patch.height; ++r)
          for (int c = patch.col; c < patch.col + patch.width; ++c)
            img.at(r, c, 0) = quantize8(patch.intensity * (0.9 + 0.1 * unit(rng)));
      data.images.push_back(std::move(img));
      data.labels.push_back(cls);
    }
  }
  return data;
}

MaskGrid foreground_mask(const PlantedDataset& data, int index) {
  if (index < 0 || index >= static_cast<int>(data.images.size()))
    throw InputError("foreground_mask: index out of range");
  MaskGrid fg(data.image_h, data.image_w);
  const int cls = data.labels[static_cast<std::size_t>(index)];
  for (const PatchSpec& patch : data.class_patches[static_cast<std::size_t>(cls)])
    for (int r = patch.row; r < patch.row + patch.height; ++r)
      for (int c = patch.col; c < patch.col + patch.width; ++c) fg.at(r, c) = 1.0;
  return fg;
}

std::vector<double> LinearClassifier::scores(const Image& x) const {
  if (x.h != h_ || x.w != w_ || x.c != c_)
    throw InputError("LinearClassifier: input shape mismatch");
  std::vector<double> out(static_cast<std::size_t>(classes_));
  const std::size_t d = feature_count();
  for (int k = 0; k < classes_; ++k) {
    const double* wk = &weights_[static_cast<std::size_t>(k) * d];
    double acc = bias_[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < d; ++i) acc += wk[i] * x.v[i];
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

std::pair<double, Image> LinearClassifier::score_and_input_gradient(const Image& x,
                                                                    int target) const {
  if (target < 0 || target >= classes_)
    throw InputError("LinearClassifier: target class out of range");
  if (x.h != h_ || x.w != w_ || x.c != c_)
    throw InputError("LinearClassifier: input shape mismatch");
  const std::size_t d = feature_count();
  const double* wk = &weights_[static_cast<std::size_t>(target) * d];
  double acc = bias_[static_cast<std::size_t>(target)];
  Image grad(h_, w_, c_);
  for (std::size_t i = 0; i < d; ++i) {
    acc += wk[i] * x.v[i];
    grad.v[i] = wk[i];
  }
  return {acc, std::move(grad)};
}

double training_accuracy(const LinearClassifier& model, const PlantedDataset& data) {
  int hits = 0;
  for (std::size_t n = 0; n < data.images.size(); ++n) {
    const std::vector<double> s = model.scores(data.images[n]);
    int best = 0;
    for (int k = 1; k < static_cast<int>(s.size()); ++k)
      if (s[static_cast<std::size_t>(k)] > s[static_cast<std::size_t>(best)]) best = k;
    if (best == data.labels[n]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.images.size());
}

LinearClassifier fit_linear(const PlantedDataset& data, const FitConfig& cfg) {
  if (data.images.empty()) throw InputError("fit_linear: empty dataset");
  const int classes =
      1 + *std::max_element(data.labels.begin(), data.labels.end());
  if (classes < 2) throw InputError("fit_linear: need at least two classes");

  LinearClassifier model(classes, data.image_h, data.image_w, 1);
  const std::size_t d = model.feature_count();
  const std::size_t n = data.images.size();
  std::vector<double> grad_w(static_cast<std::size_t>(classes) * d);
  std::vector<double> grad_b(static_cast<std::size_t>(classes));
  std::vector<double> probs;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const Image& x = data.images[s];
      probs = softmax(model.scores(x));
      for (int k = 0; k < classes; ++k) {
        const double delta =
            probs[static_cast<std::size_t>(k)] - (k == data.labels[s] ? 1.0 : 0.0);
        grad_b[static_cast<std::size_t>(k)] += delta;
        double* gk = &grad_w[static_cast<std::size_t>(k) * d];
        for (std::size_t i = 0; i < d; ++i) gk[i] += delta * x.v[i];
      }
    }
    const double step = cfg.learning_rate / static_cast<double>(n);
    for (int k = 0; k < classes; ++k) {
      model.bias(k) -= step * grad_b[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < d; ++i)
        model.weight(k, i) -= step * grad_w[static_cast<std::size_t>(k) * d + i];
    }
  }

  const double accuracy = training_accuracy(model, data);
  if (accuracy < cfg.min_accuracy)
    throw NumericError("fit_linear: training accuracy " + std::to_string(accuracy) +
                       " below required " + std::to_string(cfg.min_accuracy));
  return model;
}

namespace {

constexpr char kModelMagic[6] = {'H', 'D', 'M', 'L', 'I', 'N'};

void put_u32(std::ofstream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint32_t get_u32(std::ifstream& in, const char* what) {
  char buf[4];
  if (!in.read(buf, 4)) throw FormatError(std::string("model file truncated reading ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[i])) << (8 * i);
  return v;
}

double get_f64(std::ifstream& in, const char* what) {
  char buf[8];
  if (!in.read(buf, 8)) throw FormatError(std::string("model file truncated reading ") + what);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[i])) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void LinearClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("LinearClassifier::save: cannot open " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(classes_));
  put_u32(out, static_cast<std::uint32_t>(h_));
  put_u32(out, static_cast<std::uint32_t>(w_));
  put_u32(out, static_cast<std::uint32_t>(c_));
  for (double v : weights_) put_f64(out, v);
  for (double v : bias_) put_f64(out, v);
  if (!out) throw InputError("LinearClassifier::save: write failed for " + path.string());
}

LinearClassifier LinearClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("LinearClassifier::load: cannot open " + path.string());
  char magic[sizeof kModelMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    throw FormatError("LinearClassifier::load: bad magic in " + path.string());
  const std::uint32_t version = get_u32(in, "version");
  if (version != 1)
    throw FormatError("LinearClassifier::load: unsupported version " + std::to_string(version));
  const int classes = static_cast<int>(get_u32(in, "classes"));
  const int h = static_cast<int>(get_u32(in, "height"));
  const int w = static_cast<int>(get_u32(in, "width"));
  const int c = static_cast<int>(get_u32(in, "channels"));
  if (classes <= 0 || h <= 0 || w <= 0 || c <= 0)
    throw FormatError("LinearClassifier::load: bad dimensions");
  LinearClassifier model(classes, h, w, c);
  for (std::size_t i = 0; i < model.weights_.size(); ++i)
    model.weights_[i] = get_f64(in, "weights");
  for (std::size_t i = 0; i < model.bias_.size(); ++i) model.bias_[i] = get_f64(in, "bias");
  char extra;
  if (in.read(&extra, 1)) throw FormatError("LinearClassifier::load: trailing data");
  return model;
}

void export_dataset(const PlantedDataset& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "foreground");
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw InputError("export_dataset: cannot write manifest");
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.png", i);
    char fg_name[32];
    std::snprintf(fg_name, sizeof fg_name, "fg_%04zu.png", i);
    write_png(dir / "images" / name, data.images[i]);
    write_png(dir / "foreground" / fg_name, foreground_mask(data, static_cast<int>(i)));
    manifest << "image=images/" << name << "\tlabel=" << data.labels[i]
             << "\tforeground=foreground/" << fg_name << "\n";
  }
}

}  // namespace hdm
