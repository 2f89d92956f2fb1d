// hdm: explain images with hierarchical dynamic masks, evaluate saliency
// maps, render heatmaps, and build the synthetic testbed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "hdm/config.hpp"
#include "hdm/hierarchical.hpp"
#include "hdm/image_io.hpp"
#include "hdm/metrics.hpp"
#include "hdm/render.hpp"
#include "hdm/saliency_file.hpp"
#include "hdm/testbed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnknown = 1;
constexpr int kExitInput = 2;    // bad inputs, config, file formats
constexpr int kExitNumeric = 3;  // non-finite losses and failed numerics

hdm::ToolkitConfig resolve_config(const std::string& config_path, const std::string& preset_name) {
  if (!config_path.empty()) return hdm::load_config_file(config_path);
  if (!preset_name.empty()) return hdm::preset(preset_name);
  return hdm::preset("desk");
}

std::string two_digits(int v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

// --- explain ---------------------------------------------------------------

struct ExplainArgs {
  std::string image, model, config, preset_name, out_dir;
  int stages = 0;       // 0: keep the config value
  int target = -1;      // -1: explain the predicted class
  double alpha = 0.5;
};

void write_run_log(const fs::path& path, const hdm::ToolkitConfig& cfg,
                   const hdm::HDMResult& result, const std::string& image_path) {
  json log;
  log["image"] = image_path;
  log["target_class"] = result.target;
  log["config"] = hdm::format_config(cfg);
  log["mix"] = {{"v", result.mix.v}, {"w", result.mix.w}, {"trace", result.mix.trace}};
  json stages = json::array();
  for (std::size_t s = 0; s < result.stages.details.size(); ++s) {
    json stage;
    stage["stage"] = s + 1;
    json traces = json::array();
    for (const hdm::LossTrace& t : result.stages.details[s].traces) {
      traces.push_back({{"label", t.label},
                        {"initial", t.values.front()},
                        {"final", t.values.back()},
                        {"values", t.values}});
    }
    stage["traces"] = std::move(traces);
    stages.push_back(std::move(stage));
  }
  log["stages"] = std::move(stages);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw hdm::InputError("cannot write " + path.string());
  out << log.dump(2) << "\n";
}

int cmd_explain(const ExplainArgs& args) {
  hdm::ToolkitConfig cfg = resolve_config(args.config, args.preset_name);
  if (args.stages > 0) cfg.hdm.stages = args.stages;
  cfg.validate();

  auto base = std::make_shared<hdm::LinearClassifier>(hdm::LinearClassifier::load(args.model));
  std::shared_ptr<const hdm::Classifier> model = base;
  if (cfg.training_score == hdm::ScoreKind::probability)
    model = std::make_shared<hdm::SoftmaxScoreClassifier>(base);

  const hdm::RawImage raw = hdm::load_image(args.image);
  std::optional<int> target;
  if (args.target >= 0) target = args.target;
  const hdm::HDMResult result =
      hdm::explain(*model, raw, cfg.hdm, cfg.mean, cfg.stddev, target);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  // image resized to the model plane, used as the rendering background
  hdm::RawImage canvas;
  canvas.pixels =
      hdm::bilinear_resize(raw.pixels, model->input_height(), model->input_width());

  const int stage_count = static_cast<int>(result.stages.masks.size());
  for (int s = 0; s < stage_count; ++s) {
    const std::string tag = "stage_" + two_digits(s + 1);
    const hdm::SaliencyRecord rec = hdm::make_saliency_record(
        result.stages.masks[static_cast<std::size_t>(s)], "dm-" + tag, args.image,
        result.target);
    hdm::save_saliency(rec, out / (tag + ".sal"));
    hdm::write_png(out / (tag + "_heatmap.png"), hdm::heatmap_image(rec.map));
    hdm::write_png(out / (tag + "_overlay.png"), hdm::render_overlay(canvas, rec, args.alpha));
  }
  const hdm::SaliencyRecord mixed =
      hdm::make_saliency_record(result.mix.mixed, "hdm-mixed", args.image, result.target);
  hdm::save_saliency(mixed, out / "mixed.sal");
  hdm::write_png(out / "mixed_heatmap.png", hdm::heatmap_image(mixed.map));
  hdm::write_png(out / "mixed_overlay.png", hdm::render_overlay(canvas, mixed, args.alpha));
  hdm::write_png(out / "mixed_mask_image.png", hdm::render_mask_image(canvas, mixed));
  write_run_log(out / "run_log.json", cfg, result, args.image);

  std::cout << "explained class " << result.target << " over " << stage_count
            << " stage(s); outputs in " << args.out_dir << "\n";
  return kExitOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string manifest, model, saliency_dir, config, preset_name, out_path;
  std::string metrics = "all";
  std::string score_kind = "probability";
};

struct ManifestEntry {
  fs::path image;
  fs::path saliency;    // may be empty until resolved
  fs::path foreground;  // optional
  std::optional<int> label;
};

std::vector<ManifestEntry> parse_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw hdm::InputError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    ManifestEntry entry;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, '\t')) {
      if (field.empty()) continue;
      const auto eq = field.find('=');
      if (eq == std::string::npos)
        throw hdm::FormatError("manifest line " + std::to_string(line_no) +
                               ": field without '=': " + field);
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "image") {
        entry.image = base / value;
      } else if (key == "saliency") {
        entry.saliency = base / value;
      } else if (key == "foreground") {
        entry.foreground = base / value;
      } else if (key == "label") {
        entry.label = std::stoi(value);
      } else {
        throw hdm::FormatError("manifest line " + std::to_string(line_no) + ": unknown key " +
                               key);
      }
    }
    if (entry.image.empty())
      throw hdm::FormatError("manifest line " + std::to_string(line_no) + ": missing image=");
    entries.push_back(std::move(entry));
  }
  return entries;
}

struct MetricSelection {
  bool drop = false, increase = false, deletion = false, insertion = false, proportion = false;
  bool needs_model() const { return drop || increase || deletion || insertion; }
};

MetricSelection parse_metrics(const std::string& text) {
  MetricSelection sel;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "all") {
      sel.drop = sel.increase = sel.deletion = sel.insertion = sel.proportion = true;
    } else if (item == "drop") {
      sel.drop = true;
    } else if (item == "increase") {
      sel.increase = true;
    } else if (item == "deletion") {
      sel.deletion = true;
    } else if (item == "insertion") {
      sel.insertion = true;
    } else if (item == "proportion") {
      sel.proportion = true;
    } else {
      throw hdm::ConfigError("unknown metric '" + item + "'");
    }
  }
  if (!sel.drop && !sel.increase && !sel.deletion && !sel.insertion && !sel.proportion)
    throw hdm::ConfigError("empty metric selection");
  return sel;
}

hdm::MaskGrid load_foreground(const fs::path& path, int h, int w) {
  const hdm::RawImage img = hdm::load_image(path);
  hdm::MaskGrid grid(img.pixels.h, img.pixels.w);
  for (int r = 0; r < img.pixels.h; ++r)
    for (int c = 0; c < img.pixels.w; ++c) grid.at(r, c) = img.pixels.at(r, c, 0);
  if (grid.h != h || grid.w != w) {
    hdm::Image plane(grid.h, grid.w, 1);
    plane.v = grid.v;
    const hdm::Image resized = hdm::bilinear_resize(plane, h, w);
    grid = hdm::MaskGrid(h, w);
    grid.v = resized.v;
  }
  for (double& v : grid.v) v = v > 0.5 ? 1.0 : 0.0;
  return grid;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const MetricSelection sel = parse_metrics(args.metrics);
  hdm::ToolkitConfig cfg = resolve_config(args.config, args.preset_name);
  const bool score_probability = args.score_kind == "probability";
  if (!score_probability && args.score_kind != "logit")
    throw hdm::ConfigError("--score must be probability or logit");

  std::vector<ManifestEntry> entries = parse_manifest(args.manifest);
  if (entries.empty()) throw hdm::InputError("manifest lists no images");

  // resolve saliency paths up front and fail with the full offender list
  std::vector<std::string> missing;
  for (ManifestEntry& e : entries) {
    if (e.saliency.empty() && !args.saliency_dir.empty())
      e.saliency = fs::path(args.saliency_dir) / (e.image.stem().string() + ".sal");
    if (e.saliency.empty() || !fs::exists(e.saliency))
      missing.push_back(e.image.string());
  }
  if (!missing.empty()) {
    std::string msg = "missing saliency files for " + std::to_string(missing.size()) +
                      " image(s):";
    for (const std::string& m : missing) msg += "\n  " + m;
    throw hdm::InputError(msg);
  }

  std::unique_ptr<hdm::LinearClassifier> model;
  if (sel.needs_model()) {
    if (args.model.empty())
      throw hdm::ConfigError("--model is required for the selected metrics");
    model = std::make_unique<hdm::LinearClassifier>(hdm::LinearClassifier::load(args.model));
  }

  std::ofstream report(args.out_path, std::ios::trunc);
  if (!report) throw hdm::InputError("cannot write report " + args.out_path);
  report.precision(10);

  const double keeps[2] = {0.30, 0.20};  // 70% and 80% of pixels muted
  std::vector<std::pair<double, double>> pairs70, pairs80;
  std::vector<double> del_aucs, ins_aucs, proportions;

  for (const ManifestEntry& entry : entries) {
    const hdm::SaliencyRecord rec = hdm::load_saliency(entry.saliency);
    report << "record\timage=" << entry.image.string();

    std::optional<hdm::PreparedImage> x;
    if (model) {
      const hdm::RawImage raw = hdm::load_image(entry.image);
      x = hdm::preprocess(raw, model->input_height(), model->input_width(), cfg.mean,
                          cfg.stddev);
      if (rec.map.h != x->pixels.h || rec.map.w != x->pixels.w)
        throw hdm::InputError("saliency shape mismatch for " + entry.image.string());
      if (rec.target_class >= model->num_classes())
        throw hdm::InputError("saliency class out of range for " + entry.image.string());
    }

    auto class_score = [&](const hdm::Image& img) {
      const std::vector<double> s = model->scores(img);
      if (score_probability)
        return hdm::softmax(s)[static_cast<std::size_t>(rec.target_class)];
      return s[static_cast<std::size_t>(rec.target_class)];
    };

    if (sel.drop || sel.increase) {
      const double y = class_score(x->pixels);
      for (int setting = 0; setting < 2; ++setting) {
        const hdm::PreparedImage muted =
            hdm::mute_below_percentile(*x, rec, keeps[setting]);
        const double o = class_score(muted.pixels);
        auto& pairs = setting == 0 ? pairs70 : pairs80;
        pairs.emplace_back(y, o);
        const std::string suffix = setting == 0 ? "p70" : "p80";
        if (sel.drop)
          report << "\tdrop_" << suffix << "=" << hdm::average_drop({{y, o}});
        if (sel.increase)
          report << "\tincrease_" << suffix << "=" << hdm::average_increase({{y, o}});
      }
    }
    if (sel.deletion) {
      const auto [curve, auc] =
          hdm::deletion_insertion(*model, *x, rec, hdm::CurveMode::deletion);
      del_aucs.push_back(auc);
      report << "\tdeletion_auc=" << auc;
    }
    if (sel.insertion) {
      const auto [curve, auc] =
          hdm::deletion_insertion(*model, *x, rec, hdm::CurveMode::insertion);
      ins_aucs.push_back(auc);
      report << "\tinsertion_auc=" << auc;
    }
    if (sel.proportion && !entry.foreground.empty()) {
      const hdm::MaskGrid fg = load_foreground(entry.foreground, rec.map.h, rec.map.w);
      const double prop = hdm::energy_proportion(rec, fg);
      proportions.push_back(prop);
      report << "\tproportion=" << prop;
    }
    report << "\n";
  }

  auto mean_of = [](const std::vector<double>& values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
  };

  report << "aggregate\tn=" << entries.size();
  if (sel.drop) {
    report << "\tdrop_p70=" << hdm::average_drop(pairs70)
           << "\tdrop_p80=" << hdm::average_drop(pairs80);
  }
  if (sel.increase) {
    report << "\tincrease_p70=" << hdm::average_increase(pairs70)
           << "\tincrease_p80=" << hdm::average_increase(pairs80);
  }
  if (sel.deletion && !del_aucs.empty()) report << "\tdeletion_auc=" << mean_of(del_aucs);
  if (sel.insertion && !ins_aucs.empty()) report << "\tinsertion_auc=" << mean_of(ins_aucs);
  if (sel.proportion && !proportions.empty())
    report << "\tproportion=" << mean_of(proportions) << "\tproportion_n=" << proportions.size();
  report << "\n";

  std::cout << "evaluated " << entries.size() << " image(s); report at " << args.out_path
            << "\n";
  return kExitOk;
}

// --- render ----------------------------------------------------------------

struct RenderArgs {
  std::string saliency, image, mode = "heatmap", out_path;
  double alpha = 0.5;
};

int cmd_render(const RenderArgs& args) {
  const hdm::SaliencyRecord rec = hdm::load_saliency(args.saliency);
  if (args.mode == "heatmap") {
    hdm::write_png(args.out_path, hdm::heatmap_image(rec.map));
  } else if (args.mode == "overlay") {
    const hdm::RawImage img = hdm::load_image(args.image);
    hdm::write_png(args.out_path, hdm::render_overlay(img, rec, args.alpha));
  } else if (args.mode == "mask") {
    const hdm::RawImage img = hdm::load_image(args.image);
    hdm::write_png(args.out_path, hdm::render_mask_image(img, rec));
  } else {
    throw hdm::ConfigError("--mode must be heatmap, overlay or mask");
  }
  std::cout << "wrote " << args.out_path << "\n";
  return kExitOk;
}

// --- make-testbed ----------------------------------------------------------

struct TestbedArgs {
  std::string out_dir;
  std::uint64_t seed = 7;
  int classes = 4;
  int per_class = 24;
  int image_size = 32;
  int patch_size = 8;
  double noise = 0.08;
  std::string mode = "single";
};

int cmd_make_testbed(const TestbedArgs& args) {
  hdm::TestbedConfig cfg;
  cfg.num_classes = args.classes;
  cfg.per_class = args.per_class;
  cfg.image_size = args.image_size;
  cfg.patch_size = args.patch_size;
  cfg.noise_level = args.noise;
  if (args.mode == "single") {
    cfg.mode = hdm::PatchMode::single;
  } else if (args.mode == "dual") {
    cfg.mode = hdm::PatchMode::dual;
  } else {
    throw hdm::ConfigError("--mode must be single or dual");
  }

  const hdm::PlantedDataset data = hdm::generate_dataset(args.seed, cfg);
  fs::create_directories(args.out_dir);
  hdm::export_dataset(data, args.out_dir);
  const hdm::LinearClassifier model = hdm::fit_linear(data);
  model.save(fs::path(args.out_dir) / "model.bin");

  std::cout << "wrote " << data.images.size() << " images, foreground masks, manifest.txt and "
            << "model.bin (training accuracy "
            << hdm::training_accuracy(model, data) * 100.0 << "%) to " << args.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical dynamic mask explanations and saliency evaluation"};
  app.require_subcommand(1);

  ExplainArgs explain_args;
  CLI::App* explain = app.add_subcommand("explain", "run the mask pipeline on one image");
  explain->add_option("--image", explain_args.image, "input image (png/jpeg/bmp)")->required();
  explain->add_option("--model", explain_args.model, "classifier file")->required();
  explain->add_option("--config", explain_args.config, "config file")->envname("HDM_CONFIG");
  explain->add_option("--preset", explain_args.preset_name, "natural, medical or desk");
  explain->add_option("--out", explain_args.out_dir, "output directory")->required();
  explain->add_option("--stages", explain_args.stages, "override the stage count");
  explain->add_option("--target", explain_args.target, "class to explain (default: predicted)");
  explain->add_option("--alpha", explain_args.alpha, "overlay blend factor");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score saliency maps against a manifest");
  evaluate->add_option("--manifest", eval_args.manifest, "manifest file")->required();
  evaluate->add_option("--model", eval_args.model, "classifier file");
  evaluate->add_option("--saliency-dir", eval_args.saliency_dir,
                       "directory of <image-stem>.sal files");
  evaluate->add_option("--config", eval_args.config, "config file")->envname("HDM_CONFIG");
  evaluate->add_option("--preset", eval_args.preset_name, "natural, medical or desk");
  evaluate->add_option("--metrics", eval_args.metrics,
                       "comma list of drop,increase,deletion,insertion,proportion or all");
  evaluate->add_option("--score", eval_args.score_kind,
                       "probability (default) or logit for drop/increase scores");
  evaluate->add_option("--out", eval_args.out_path, "report file")->required();

  RenderArgs render_args;
  CLI::App* render = app.add_subcommand("render", "render a saliency file as a png");
  render->add_option("--saliency", render_args.saliency, "saliency file")->required();
  render->add_option("--image", render_args.image, "background image for overlay/mask modes");
  render->add_option("--mode", render_args.mode, "heatmap, overlay or mask");
  render->add_option("--alpha", render_args.alpha, "overlay blend factor");
  render->add_option("--out", render_args.out_path, "output png")->required();

  TestbedArgs testbed_args;
  CLI::App* testbed = app.add_subcommand("make-testbed", "generate the planted dataset + model");
  testbed->add_option("--out", testbed_args.out_dir, "output directory")->required();
  testbed->add_option("--seed", testbed_args.seed, "dataset seed");
  testbed->add_option("--classes", testbed_args.classes, "number of classes");
  testbed->add_option("--per-class", testbed_args.per_class, "images per class");
  testbed->add_option("--image-size", testbed_args.image_size, "square image size");
  testbed->add_option("--patch-size", testbed_args.patch_size, "square patch size");
  testbed->add_option("--noise", testbed_args.noise, "background noise level");
  testbed->add_option("--mode", testbed_args.mode, "single or dual patches per class");

  CLI11_PARSE(app, argc, argv);

  try {
    if (explain->parsed()) return cmd_explain(explain_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (render->parsed()) return cmd_render(render_args);
    if (testbed->parsed()) return cmd_make_testbed(testbed_args);
  } catch (const hdm::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const hdm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitUnknown;
  }
  return kExitUnknown;
}
