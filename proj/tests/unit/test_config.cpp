#include <string>

#include <doctest.h>

#include "tools/config.hpp"
#include "wng/errors.hpp"

using namespace wng;
using namespace wng::cli;
using nlohmann::json;

namespace {

std::string error_of(Kind kind, const json& doc) {
  ExperimentConfig c = preset(kind, "");
  try {
    apply_json(c, doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("unknown keys name the key") {
  CHECK(error_of(Kind::Toy, json{{"stepsize", 0.9}}).find("'stepsize'") != std::string::npos);
  CHECK(error_of(Kind::Pg, json{{"pg", {{"stepsize", 0.1}}}}).find("'pg.stepsize'") != std::string::npos);
  CHECK(error_of(Kind::Es, json{{"es", {{"wng", {{"eps", 1}}}}}}).find("'es.wng.eps'") != std::string::npos);
}

TEST_CASE("type and enum errors") {
  CHECK(error_of(Kind::Toy, json{{"toy", {{"iterations", 1.5}}}}).find("toy.iterations") != std::string::npos);
  CHECK(error_of(Kind::Toy, json{{"toy", {{"param", "full"}}}}).find("toy.param") != std::string::npos);
  CHECK(error_of(Kind::Toy, json{{"es", json::object()}}).find("'es'") != std::string::npos);
  CHECK(error_of(Kind::Toy, json{{"seeds", {1, -2}}}).find("seeds") != std::string::npos);
  CHECK(error_of(Kind::Es, json{{"kind", "pg"}}).find("does not match") != std::string::npos);
}

TEST_CASE("values are applied over the preset") {
  ExperimentConfig c = preset(Kind::Es, "wnes");
  CHECK(c.es.delta == 1.0);
  apply_json(c, json{{"seeds", {3, 4}},
                     {"world", {{"wall", false}}},
                     {"es", {{"eta", 0.05}, {"clip_norm", 2.0}, {"wng", {{"bandwidth", 2.5}}}}}});
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK_FALSE(c.world.wall_enabled);
  CHECK(c.es.eta == 0.05);
  CHECK(*c.es.clip_norm == 2.0);
  CHECK(c.es.wng->kernel.mode == BandwidthMode::Fixed);
  CHECK(c.es.wng->kernel.bandwidth == 2.5);
  apply_json(c, json{{"es", {{"wng", nullptr}, {"delta", 0.0}}}});
  CHECK_FALSE(c.es.wng);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("presets and validation") {
  CHECK(preset(Kind::Pg, "wnpg").pg.wng.has_value());
  CHECK_THROWS_AS(preset(Kind::Toy, "adam"), ConfigError);
  ExperimentConfig c = preset(Kind::Toy, "fng");
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
