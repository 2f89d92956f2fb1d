#include "hdm/config.hpp"

#include <fstream>
#include <sstream>

namespace hdm {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, sep)) parts.push_back(trim(item));
  return parts;
}

int parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + s + "'");
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const std::string& item : split(s, ','))
    if (!item.empty()) out.push_back(parse_double(item, key));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

}  // namespace

void ToolkitConfig::validate() const {
  hdm.validate();
  if (mean.empty() || mean.size() != stddev.size())
    throw ConfigError("ToolkitConfig: mean/std must be non-empty and equal-sized");
  for (double s : stddev)
    if (!(s > 0.0)) throw ConfigError("ToolkitConfig: std components must be positive");
}

ToolkitConfig preset(const std::string& name) {
  ToolkitConfig cfg;
  if (name == "natural") {
    cfg.hdm.stages = 3;
    cfg.hdm.dm.benchmark_sizes = {{6, 6}, {7, 7}, {8, 8}, {9, 9}, {10, 10}, {11, 11}};
    cfg.hdm.dm.scale_factors = {2, 3, 5};
    cfg.hdm.dm.gamma_percentile = 0.25;
    cfg.hdm.dm.eta = 100.0;
    cfg.hdm.dm.epochs = 800;
    cfg.hdm.dm.learning_rate = 1e-2;
    cfg.hdm.mix_epochs = 400;
    cfg.hdm.mix_learning_rate = 0.1;
    cfg.hdm.lambda = 1e-4;
  } else if (name == "medical") {
    cfg.hdm.stages = 1;
    cfg.hdm.dm.benchmark_sizes = {{6, 6}, {7, 7}, {8, 8}, {9, 9}};
    cfg.hdm.dm.scale_factors = {2, 3};
    cfg.hdm.dm.gamma_percentile = 0.30;
    cfg.hdm.dm.eta = 100.0;
    cfg.hdm.dm.epochs = 800;
    cfg.hdm.dm.learning_rate = 1e-2;
    cfg.hdm.mix_epochs = 400;
    cfg.hdm.mix_learning_rate = 0.1;
    cfg.hdm.lambda = 1e-4;
  } else if (name == "desk") {
    cfg.hdm.stages = 2;
    cfg.hdm.dm.benchmark_sizes = {{4, 4}, {5, 5}, {6, 6}};
    cfg.hdm.dm.scale_factors = {2};
    cfg.hdm.dm.gamma_percentile = 0.25;
    cfg.hdm.dm.eta = 7.0;
    cfg.hdm.dm.epochs = 200;
    cfg.hdm.dm.learning_rate = 0.05;
    cfg.hdm.mix_epochs = 200;
    cfg.hdm.mix_learning_rate = 0.1;
    cfg.hdm.lambda = 1e-4;
    cfg.mean = {0.0};
    cfg.stddev = {1.0};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected natural, medical or desk)");
  }
  return cfg;
}

ToolkitConfig parse_config(const std::string& text) {
  ToolkitConfig cfg;
  cfg.hdm.dm.benchmark_sizes.clear();
  cfg.hdm.dm.scale_factors.clear();

  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: line " + std::to_string(line_no) + " has empty key or value");

    if (key == "benchmark_sizes") {
      for (const std::string& item : split(value, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos)
          throw ConfigError("config: benchmark size '" + item + "' is not AxB");
        cfg.hdm.dm.benchmark_sizes.emplace_back(parse_int(trim(item.substr(0, x)), key),
                                                parse_int(trim(item.substr(x + 1)), key));
      }
    } else if (key == "scale_factors") {
      for (const std::string& item : split(value, ','))
        cfg.hdm.dm.scale_factors.push_back(parse_int(item, key));
    } else if (key == "tau") {
      cfg.hdm.dm.tau = parse_double(value, key);
    } else if (key == "eta") {
      cfg.hdm.dm.eta = parse_double(value, key);
    } else if (key == "epochs") {
      cfg.hdm.dm.epochs = parse_int(value, key);
    } else if (key == "learning_rate") {
      cfg.hdm.dm.learning_rate = parse_double(value, key);
    } else if (key == "gamma_percentile") {
      cfg.hdm.dm.gamma_percentile = parse_double(value, key);
    } else if (key == "clamp") {
      cfg.hdm.dm.clamp = parse_bool(value, key);
    } else if (key == "stack_mode") {
      if (value == "raw")
        cfg.hdm.dm.stack_mode = DMConfig::StackMode::raw;
      else if (value == "chained")
        cfg.hdm.dm.stack_mode = DMConfig::StackMode::chained;
      else
        throw ConfigError("config: stack_mode must be raw or chained");
    } else if (key == "eta_benchmark_override") {
      const auto parts = split(value, ':');
      if (parts.size() != 2) throw ConfigError("config: eta_benchmark_override wants i:value");
      cfg.hdm.dm.eta_benchmark_overrides[parse_int(parts[0], key)] =
          parse_double(parts[1], key);
    } else if (key == "eta_cascade_override") {
      const auto parts = split(value, ':');
      if (parts.size() != 4) throw ConfigError("config: eta_cascade_override wants i:j:k:value");
      cfg.hdm.dm.eta_cascade_overrides[{parse_int(parts[0], key), parse_int(parts[1], key),
                                        parse_int(parts[2], key)}] =
          parse_double(parts[3], key);
    } else if (key == "stages") {
      cfg.hdm.stages = parse_int(value, key);
    } else if (key == "mix_epochs") {
      cfg.hdm.mix_epochs = parse_int(value, key);
    } else if (key == "mix_learning_rate") {
      cfg.hdm.mix_learning_rate = parse_double(value, key);
    } else if (key == "lambda") {
      cfg.hdm.lambda = parse_double(value, key);
    } else if (key == "v_init") {
      cfg.hdm.v_init = parse_double(value, key);
    } else if (key == "mean") {
      cfg.mean = parse_double_list(value, key);
    } else if (key == "std") {
      cfg.stddev = parse_double_list(value, key);
    } else if (key == "score") {
      if (value == "logit")
        cfg.training_score = ScoreKind::logit;
      else if (value == "probability")
        cfg.training_score = ScoreKind::probability;
      else
        throw ConfigError("config: score must be logit or probability");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string format_config(const ToolkitConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "# dynamic mask\n";
  out << "benchmark_sizes = ";
  for (std::size_t i = 0; i < cfg.hdm.dm.benchmark_sizes.size(); ++i) {
    if (i) out << ",";
    out << cfg.hdm.dm.benchmark_sizes[i].first << "x" << cfg.hdm.dm.benchmark_sizes[i].second;
  }
  out << "\n";
  out << "scale_factors = ";
  for (std::size_t i = 0; i < cfg.hdm.dm.scale_factors.size(); ++i) {
    if (i) out << ",";
    out << cfg.hdm.dm.scale_factors[i];
  }
  out << "\n";
  out << "tau = " << cfg.hdm.dm.tau << "\n";
  out << "eta = " << cfg.hdm.dm.eta << "\n";
  out << "epochs = " << cfg.hdm.dm.epochs << "\n";
  out << "learning_rate = " << cfg.hdm.dm.learning_rate << "\n";
  out << "gamma_percentile = " << cfg.hdm.dm.gamma_percentile << "\n";
  out << "clamp = " << (cfg.hdm.dm.clamp ? "true" : "false") << "\n";
  out << "stack_mode = "
      << (cfg.hdm.dm.stack_mode == DMConfig::StackMode::raw ? "raw" : "chained") << "\n";
  for (const auto& [i, value] : cfg.hdm.dm.eta_benchmark_overrides)
    out << "eta_benchmark_override = " << i << ":" << value << "\n";
  for (const auto& [key, value] : cfg.hdm.dm.eta_cascade_overrides)
    out << "eta_cascade_override = " << key[0] << ":" << key[1] << ":" << key[2] << ":" << value
        << "\n";
  out << "# hierarchy\n";
  out << "stages = " << cfg.hdm.stages << "\n";
  out << "mix_epochs = " << cfg.hdm.mix_epochs << "\n";
  out << "mix_learning_rate = " << cfg.hdm.mix_learning_rate << "\n";
  out << "lambda = " << cfg.hdm.lambda << "\n";
  out << "v_init = " << cfg.hdm.v_init << "\n";
  out << "# preprocessing and scores\n";
  out << "mean = ";
  for (std::size_t i = 0; i < cfg.mean.size(); ++i) {
    if (i) out << ",";
    out << cfg.mean[i];
  }
  out << "\n";
  out << "std = ";
  for (std::size_t i = 0; i < cfg.stddev.size(); ++i) {
    if (i) out << ",";
    out << cfg.stddev[i];
  }
  out << "\n";
  out << "score = " << (cfg.training_score == ScoreKind::logit ? "logit" : "probability")
      << "\n";
  return out.str();
}

ToolkitConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

void save_config_file(const ToolkitConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("config: cannot write " + path.string());
  out << format_config(cfg);
  if (!out) throw InputError("config: write failed for " + path.string());
}

}  // namespace hdm
