#pragma once

#include <filesystem>
#include <string>

#include "hdm/hierarchical.hpp"

namespace hdm {

enum class ScoreKind { logit, probability };

/// Everything a pipeline run needs: the HDM/DM hyperparameters, the image
/// preprocessing constants, and which kind of score the mask losses see.
struct ToolkitConfig {
  HDMConfig hdm;
  std::vector<double> mean{0.485, 0.456, 0.406};
  std::vector<double> stddev{0.229, 0.224, 0.225};
  ScoreKind training_score = ScoreKind::logit;

  void validate() const;
};

/// Named presets: "natural" (224x224, six benchmark sizes, scale factors
/// 2/3/5, three stages), "medical" (four benchmark sizes, scale factors 2/3,
/// one stage, 30% overlay threshold), "desk" (32x32 grayscale testbed scale).
ToolkitConfig preset(const std::string& name);

/// Plain-text `key = value` config file, one key per line, `#` comments.
ToolkitConfig load_config_file(const std::filesystem::path& path);
void save_config_file(const ToolkitConfig& cfg, const std::filesystem::path& path);

/// Parse from file contents (exposed for tests).
ToolkitConfig parse_config(const std::string& text);
std::string format_config(const ToolkitConfig& cfg);

}  // namespace hdm
