// Experiment configuration: one JSON file drives corpus generation,
// training, and evaluation. Every seed is explicit; referenced paths are
// checked when the relevant command loads them.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylox/arranger.hpp"
#include "stylox/corpus.hpp"
#include "stylox/model.hpp"
#include "stylox/train.hpp"

namespace stylox {

struct CorpusConfig {
  std::string charts_dir;
  std::vector<std::string> style_names;  // empty -> all built-in styles
  std::string styles_dir;                // optional directory of StyleSpec JSON files
  CorpusOptions options;
  std::string out_dir = "corpus";
};

struct TrainConfig {
  TrainParams params;
  std::string corpus_dir;  // defaults to corpus.out_dir
  std::string checkpoint_path = "model.ckpt";
  std::string curve_path;  // optional CSV
  std::string pair;        // "SRC:DST" restricted single-pair mode
};

struct EvalConfig {
  bool baselines = true;
  uint64_t seed = 1;
  std::string report_path = "report.csv";
};

struct ExperimentConfig {
  CorpusConfig corpus;
  ModelConfig model;
  std::string track_pair = "all->bass";
  TrainConfig train;
  EvalConfig eval;
};

namespace config_detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace config_detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  using config_detail::get_or;
  ExperimentConfig cfg;
  try {
    if (j.contains("corpus")) {
      const auto& c = j.at("corpus");
      cfg.corpus.charts_dir = get_or<std::string>(c, "charts_dir", "");
      cfg.corpus.style_names = get_or<std::vector<std::string>>(c, "styles", {});
      cfg.corpus.styles_dir = get_or<std::string>(c, "styles_dir", "");
      cfg.corpus.options.k_styles_per_song = get_or<int>(c, "k_styles_per_song", 3);
      cfg.corpus.options.renders_per_style = get_or<int>(c, "renders_per_style", 1);
      cfg.corpus.options.seed = get_or<uint64_t>(c, "seed", 1);
      if (c.contains("split")) {
        const auto& s = c.at("split");
        cfg.corpus.options.split.train = get_or<int>(s, "train", 0);
        cfg.corpus.options.split.validation = get_or<int>(s, "validation", 0);
        cfg.corpus.options.split.test = get_or<int>(s, "test", 0);
      }
      cfg.corpus.out_dir = get_or<std::string>(c, "out_dir", "corpus");
    }
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    cfg.track_pair = get_or<std::string>(j, "track_pair", "all->bass");
    track_pair_from_name(cfg.track_pair);  // validate
    if (j.contains("train")) {
      const auto& t = j.at("train");
      cfg.train.params.batch_size = get_or<int>(t, "batch_size", 16);
      cfg.train.params.lr = get_or<float>(t, "lr", 1e-3f);
      cfg.train.params.lr_decay = get_or<float>(t, "lr_decay", 0.5f);
      cfg.train.params.lr_patience = get_or<int>(t, "lr_patience", 2);
      cfg.train.params.stop_patience = get_or<int>(t, "stop_patience", 5);
      cfg.train.params.eval_interval = get_or<int>(t, "eval_interval", 100);
      cfg.train.params.max_steps = get_or<int64_t>(t, "max_steps", 200000);
      cfg.train.params.grad_clip = get_or<float>(t, "grad_clip", 5.0f);
      cfg.train.params.seed = get_or<uint64_t>(t, "seed", 1);
      cfg.train.params.stop_at_accuracy = get_or<double>(t, "stop_at_accuracy", 0.0);
      cfg.train.corpus_dir = get_or<std::string>(t, "corpus_dir", "");
      cfg.train.checkpoint_path = get_or<std::string>(t, "checkpoint", "model.ckpt");
      cfg.train.curve_path = get_or<std::string>(t, "curve", "");
      cfg.train.pair = get_or<std::string>(t, "pair", "");
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      cfg.eval.baselines = get_or<bool>(e, "baselines", true);
      cfg.eval.seed = get_or<uint64_t>(e, "seed", 1);
      cfg.eval.report_path = get_or<std::string>(e, "report", "report.csv");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  if (cfg.train.corpus_dir.empty()) cfg.train.corpus_dir = cfg.corpus.out_dir;
  if (cfg.train.params.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.train.params.lr <= 0) throw ConfigError("lr must be > 0");
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_experiment_config(j);
}

/// Resolve the style set for corpus generation: named built-ins, a styles
/// directory of JSON specs, or (by default) every built-in style.
inline std::vector<StyleSpec> resolve_styles(const CorpusConfig& cfg) {
  std::vector<StyleSpec> out;
  if (!cfg.styles_dir.empty()) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(cfg.styles_dir))
      throw ConfigError("styles_dir does not exist: " + cfg.styles_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cfg.styles_dir))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      std::ifstream f(path);
      out.push_back(style_from_json(nlohmann::json::parse(f)));
    }
    if (out.empty()) throw ConfigError("styles_dir has no .json style specs: " + cfg.styles_dir);
    return out;
  }
  if (cfg.style_names.empty()) return builtin_styles();
  for (const std::string& name : cfg.style_names)
    out.push_back(find_style(builtin_styles(), name));
  return out;
}

/// Load and parse every .chart file in a directory (sorted by filename).
/// Parse failures are collected per file; valid charts still load.
inline std::vector<std::pair<std::string, ChordChart>> load_charts_dir(
    const std::string& dir, std::vector<std::string>* failures = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("charts_dir does not exist: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".chart") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .chart files in " + dir);

  std::vector<std::pair<std::string, ChordChart>> charts;
  for (const auto& path : files) {
    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
      charts.push_back({path.stem().string(), parse_chart(text)});
    } catch (const ParseError& e) {
      if (failures)
        failures->push_back(path.filename().string() + ": " + e.what());
      else
        throw;
    }
  }
  return charts;
}

}  // namespace stylox
