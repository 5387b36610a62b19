#pragma once

// JSON experiment configuration for the wng command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wng/es.hpp"
#include "wng/gaussian_lab.hpp"
#include "wng/pg.hpp"
#include "wng/point_world.hpp"

namespace wng::cli {

enum class Kind { Toy, Es, Pg };

const char* to_string(Kind k);

struct ExperimentConfig {
  Kind kind = Kind::Toy;
  std::string method;  // preset name; empty selects the default for `kind`
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::filesystem::path> output_dir;
  ToyRunConfig toy;
  EsConfig es;
  PgConfig pg;
  PointWorld world;

  /// Throws ConfigError on empty seeds or an invalid sub-config.
  void validate() const;
};

/// Method defaults for `kind`: the toy defaults, es_preset or pg_preset.
ExperimentConfig preset(Kind kind, const std::string& method);

/// Applies every key of `doc` on top of `config`. Unknown keys, wrong types
/// and unknown enum names throw ConfigError naming the key path.
void apply_json(ExperimentConfig& config, const nlohmann::json& doc);

/// Reads `path`, selects the preset named by its "method" key (or
/// `method_override` when non-empty), then applies the remaining keys.
ExperimentConfig load_config(Kind kind, const std::optional<std::filesystem::path>& path,
                             const std::string& method_override);

ToyMethod parse_toy_method(const std::string& name);
CovarianceParam parse_param(const std::string& name);

}  // namespace wng::cli
