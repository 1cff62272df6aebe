#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "marecon/aggregation/loss.hpp"
#include "marecon/errors.hpp"

namespace marecon::harness {

enum class Task { CompressiveSensing, Holography };

inline std::string_view task_name(Task t) { return t == Task::CompressiveSensing ? "cs" : "holography"; }

inline Task parse_task(std::string_view text) {
  if (text == "cs") return Task::CompressiveSensing;
  if (text == "holography" || text == "holo") return Task::Holography;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected cs or holography)");
}

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t candidates = 2;
  std::uint64_t generator = 3;

  bool operator==(const Seeds&) const = default;
};

/**
 * One experiment: data source, forward model, candidate set, strategies and
 * optimizer budget. Keys mirror the JSON config file.
 *
 * dataset is "mnist" (an IDX file, `idx_path`), "image" (`image_path`) or
 * "phantom" (`phantom` kind, seeded by seeds.data).
 */
struct ExperimentConfig {
  Task task = Task::CompressiveSensing;
  std::string dataset = "mnist";
  std::string idx_path;
  std::string image_path;
  std::string phantom = "text-like";
  std::size_t sample = 0;

  std::size_t m = 200;
  std::size_t n_candidates = 10;
  std::vector<std::string> strategies{"ma", "uniform", "alternating", "oracle", "random"};
  long iterations = 2000;
  double lr = 1e-3;
  Seeds seeds;
  std::string out = "runs/exp";

  // Holography optics, micrometers.
  double wavelength = 0.520;
  double distance = 5000.0;
  double pixel_pitch = 2.0;
  double distance_spread = 500.0;
  std::size_t grid = 64;

  std::size_t base_channels = 16;
  /// MA temperature; unset means "number of measurements".
  std::optional<double> temperature;

  bool operator==(const ExperimentConfig&) const = default;

  /// Defaults that differ between the two tasks.
  static ExperimentConfig for_task(Task task) {
    ExperimentConfig c;
    c.task = task;
    if (task == Task::Holography) {
      c.dataset = "phantom";
      c.iterations = 5000;
      c.strategies = {"ma", "uniform", "alternating", "oracle"};
    }
    return c;
  }

  void validate() const {
    if (n_candidates == 0) throw ConfigError("n_candidates must be at least 1");
    if (iterations <= 0) throw ConfigError("iterations must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (base_channels == 0) throw ConfigError("base_channels must be positive");
    if (temperature && !(*temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (strategies.empty()) throw ConfigError("strategy list is empty");
    for (const auto& s : strategies) aggregation::parse_strategy_kind(s);
    if (dataset != "mnist" && dataset != "image" && dataset != "phantom") {
      throw ConfigError("unknown dataset '" + dataset + "' (expected mnist, image or phantom)");
    }
    if (dataset == "image" && image_path.empty()) throw ConfigError("dataset 'image' needs image_path");
    if (task == Task::CompressiveSensing && m == 0) throw ConfigError("m must be at least 1");
    if (task == Task::Holography && !(distance_spread >= 0.0)) throw ConfigError("distance_spread must be >= 0");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["task"] = task_name(c.task);
  j["dataset"] = c.dataset;
  j["idx_path"] = c.idx_path;
  j["image_path"] = c.image_path;
  j["phantom"] = c.phantom;
  j["sample"] = c.sample;
  j["m"] = c.m;
  j["n_candidates"] = c.n_candidates;
  j["strategies"] = c.strategies;
  j["iterations"] = c.iterations;
  j["lr"] = c.lr;
  j["seeds"] = {{"data", c.seeds.data}, {"candidates", c.seeds.candidates}, {"generator", c.seeds.generator}};
  j["out"] = c.out;
  j["wavelength"] = c.wavelength;
  j["distance"] = c.distance;
  j["pixel_pitch"] = c.pixel_pitch;
  j["distance_spread"] = c.distance_spread;
  j["grid"] = c.grid;
  j["base_channels"] = c.base_channels;
  j["temperature"] = c.temperature ? nlohmann::json(*c.temperature) : nlohmann::json(nullptr);
  return j;
}

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

/**
 * Overlay the keys present in `input` onto `c`; unknown keys are rejected.
 * A summary.json is accepted as well (its "config" member is used).
 */
inline void apply_json(const nlohmann::json& input, ExperimentConfig& c) {
  const nlohmann::json& j = input.contains("config") && input.at("config").is_object() ? input.at("config") : input;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{
      "task", "dataset", "idx_path", "image_path", "phantom", "sample", "m", "n_candidates", "strategies",
      "iterations", "lr", "seeds", "out", "wavelength", "distance", "pixel_pitch", "distance_spread", "grid",
      "base_channels", "temperature"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }
  if (j.contains("task")) {
    std::string task;
    detail::read_key(j, "task", task);
    c.task = parse_task(task);
  }
  detail::read_key(j, "dataset", c.dataset);
  detail::read_key(j, "idx_path", c.idx_path);
  detail::read_key(j, "image_path", c.image_path);
  detail::read_key(j, "phantom", c.phantom);
  detail::read_key(j, "sample", c.sample);
  detail::read_key(j, "m", c.m);
  detail::read_key(j, "n_candidates", c.n_candidates);
  detail::read_key(j, "strategies", c.strategies);
  detail::read_key(j, "iterations", c.iterations);
  detail::read_key(j, "lr", c.lr);
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_object()) throw ConfigError("config key 'seeds' must be an object");
    detail::read_key(s, "data", c.seeds.data);
    detail::read_key(s, "candidates", c.seeds.candidates);
    detail::read_key(s, "generator", c.seeds.generator);
  }
  detail::read_key(j, "out", c.out);
  detail::read_key(j, "wavelength", c.wavelength);
  detail::read_key(j, "distance", c.distance);
  detail::read_key(j, "pixel_pitch", c.pixel_pitch);
  detail::read_key(j, "distance_spread", c.distance_spread);
  detail::read_key(j, "grid", c.grid);
  detail::read_key(j, "base_channels", c.base_channels);
  if (j.contains("temperature")) {
    if (j.at("temperature").is_null()) {
      c.temperature.reset();
    } else {
      double t = 0.0;
      detail::read_key(j, "temperature", t);
      c.temperature = t;
    }
  }
}

/// Config from JSON on top of the defaults of the task it names.
inline ExperimentConfig config_from_json(const nlohmann::json& input) {
  const nlohmann::json& j = input.contains("config") && input.at("config").is_object() ? input.at("config") : input;
  std::string task = "cs";
  if (j.is_object()) detail::read_key(j, "task", task);
  ExperimentConfig c = ExperimentConfig::for_task(parse_task(task));
  apply_json(j, c);
  c.validate();
  return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

}  // namespace marecon::harness
