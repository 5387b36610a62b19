#include "tools/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "wng/errors.hpp"

namespace wng::cli {
namespace {

using nlohmann::json;

/// Strict view of one JSON object: every key must be listed in `allowed`.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<std::string_view> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    for (const auto& item : j_.items()) {
      bool known = false;
      for (std::string_view a : allowed) known = known || item.key() == a;
      if (!known) throw ConfigError("unknown config key '" + key_path(item.key()) + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string key_path(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  void read(const char* key, int& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) bad(key, "an integer");
      out = v->get<int>();
    }
  }
  void read(const char* key, std::uint64_t& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) bad(key, "a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, double& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number()) bad(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) const {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) bad(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) const {
    if (const json* v = find(key)) {
      if (!v->is_string()) bad(key, "a string");
      out = v->get<std::string>();
    }
  }

  /// Reads a string key and maps it through `parse`, naming the key on failure.
  template <class T, class Parse>
  void read_enum(const char* key, T& out, Parse parse) const {
    std::string name;
    if (!has(key)) return;
    read(key, name);
    try {
      out = parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(key_path(key) + ": " + e.what());
    }
  }

  [[noreturn]] void bad(const char* key, const char* what) const {
    throw ConfigError("config key '" + key_path(key) + "' must be " + what);
  }

 private:
  const json* find(const char* key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "config" : "config key '" + path_ + "'"; }

  const json& j_;
  std::string path_;
};

FitnessShaping parse_shaping(const std::string& name) {
  if (name == "none") return FitnessShaping::None;
  if (name == "standardize") return FitnessShaping::Standardize;
  if (name == "centered-rank") return FitnessShaping::CenteredRank;
  throw ConfigError("unknown fitness shaping '" + name + "'");
}

SurrogateKind parse_surrogate(const std::string& name) {
  if (name == "on-policy") return SurrogateKind::OnPolicy;
  if (name == "ratio") return SurrogateKind::Ratio;
  throw ConfigError("unknown surrogate '" + name + "'");
}

TrustRegion parse_trust(const std::string& name) {
  if (name == "none") return TrustRegion::None;
  if (name == "kl-penalty") return TrustRegion::KlPenalty;
  if (name == "clip") return TrustRegion::Clip;
  if (name == "w2-penalty") return TrustRegion::W2Penalty;
  throw ConfigError("unknown trust region '" + name + "'");
}

ToyGradient parse_gradient(const std::string& name) {
  if (name == "mc") return ToyGradient::MonteCarlo;
  if (name == "quadrature") return ToyGradient::Quadrature;
  throw ConfigError("unknown gradient estimator '" + name + "'");
}

void apply_sinkhorn(SinkhornOptions& s, const json& j, const std::string& path) {
  const Section sec(j, path, {"reg", "reg_scale", "max_iters", "tolerance"});
  sec.read("reg", s.reg);
  sec.read("reg_scale", s.reg_scale);
  sec.read("max_iters", s.max_iters);
  sec.read("tolerance", s.tolerance);
}

/// null disables the estimator; an object edits the current (or default) one.
void apply_wng(std::optional<WngConfig>& out, const json& j, const std::string& path) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  const Section sec(j, path, {"num_basis", "epsilon_init", "epsilon_min", "epsilon_max", "reduction_low",
                              "reduction_high", "bandwidth", "seed"});
  WngConfig w = out.value_or(WngConfig{});
  sec.read("num_basis", w.num_basis);
  sec.read("epsilon_init", w.epsilon_init);
  sec.read("epsilon_min", w.epsilon_min);
  sec.read("epsilon_max", w.epsilon_max);
  sec.read("reduction_low", w.reduction_low);
  sec.read("reduction_high", w.reduction_high);
  sec.read("seed", w.seed);
  if (sec.has("bandwidth")) {
    const json& b = sec.at("bandwidth");
    if (b.is_string() && b.get<std::string>() == "median") {
      w.kernel.mode = BandwidthMode::MedianHeuristic;
    } else if (b.is_number() && b.get<double>() > 0.0) {
      w.kernel.mode = BandwidthMode::Fixed;
      w.kernel.bandwidth = b.get<double>();
    } else {
      sec.bad("bandwidth", "\"median\" or a positive number");
    }
  }
  out = w;
}

void apply_world(PointWorld& w, const json& j) {
  const Section sec(j, "world", {"horizon", "max_step", "reward_scale", "margin", "wall"});
  sec.read("horizon", w.horizon);
  sec.read("max_step", w.max_step);
  sec.read("reward_scale", w.reward_scale);
  sec.read("margin", w.margin);
  sec.read("wall", w.wall_enabled);
}

void apply_toy(ToyRunConfig& c, const json& j) {
  const Section sec(j, "toy", {"param", "step_size", "beta", "iterations", "mc_samples", "dim", "penalty_inner_steps",
                               "log_every", "spectrum_k", "gradient"});
  sec.read_enum("param", c.param, parse_param);
  sec.read("step_size", c.step_size);
  sec.read("beta", c.beta);
  sec.read("iterations", c.iterations);
  sec.read("mc_samples", c.mc_samples);
  sec.read("dim", c.dim);
  sec.read("penalty_inner_steps", c.penalty_inner_steps);
  sec.read("log_every", c.log_every);
  sec.read("spectrum_k", c.spectrum_k);
  sec.read_enum("gradient", c.gradient, parse_gradient);
}

void apply_es(EsConfig& c, const json& j) {
  const Section sec(j, "es", {"population", "sigma", "eta", "delta", "antithetic", "shaping", "clip_norm", "penalty",
                              "wng", "embedding", "iterations"});
  sec.read("population", c.population);
  sec.read("sigma", c.sigma);
  sec.read("eta", c.eta);
  sec.read("delta", c.delta);
  sec.read("antithetic", c.antithetic);
  sec.read_enum("shaping", c.shaping, parse_shaping);
  if (sec.has("clip_norm")) {
    if (sec.at("clip_norm").is_null()) {
      c.clip_norm.reset();
    } else {
      double v = 0.0;
      sec.read("clip_norm", v);
      c.clip_norm = v;
    }
  }
  if (sec.has("penalty")) {
    const json& p = sec.at("penalty");
    if (p.is_null()) {
      c.penalty.reset();
    } else {
      const Section ps(p, "es.penalty", {"beta", "history", "sinkhorn"});
      EsPenalty pen = c.penalty.value_or(EsPenalty{});
      ps.read("beta", pen.beta);
      ps.read("history", pen.history);
      if (ps.has("sinkhorn")) apply_sinkhorn(pen.sinkhorn, ps.at("sinkhorn"), "es.penalty.sinkhorn");
      c.penalty = pen;
    }
  }
  if (sec.has("wng")) apply_wng(c.wng, sec.at("wng"), "es.wng");
  sec.read_enum("embedding", c.embedding, [](const std::string& s) { return parse_embedding(s); });
  sec.read("iterations", c.iterations);
}

void apply_pg(PgConfig& c, const json& j) {
  const Section sec(j, "pg", {"trajectories", "gamma", "epochs", "step_size", "surrogate", "trust", "beta",
                              "clip_epsilon", "normalize_advantages", "fit_baseline", "wng", "embedding", "history",
                              "sinkhorn", "iterations", "initial_log_std"});
  sec.read("trajectories", c.trajectories);
  sec.read("gamma", c.gamma);
  sec.read("epochs", c.epochs);
  sec.read("step_size", c.step_size);
  sec.read_enum("surrogate", c.surrogate, parse_surrogate);
  sec.read_enum("trust", c.trust, parse_trust);
  sec.read("beta", c.beta);
  sec.read("clip_epsilon", c.clip_epsilon);
  sec.read("normalize_advantages", c.normalize_advantages);
  sec.read("fit_baseline", c.fit_baseline);
  if (sec.has("wng")) apply_wng(c.wng, sec.at("wng"), "pg.wng");
  sec.read_enum("embedding", c.embedding, [](const std::string& s) { return parse_embedding(s); });
  sec.read("history", c.history);
  if (sec.has("sinkhorn")) apply_sinkhorn(c.sinkhorn, sec.at("sinkhorn"), "pg.sinkhorn");
  sec.read("iterations", c.iterations);
  sec.read("initial_log_std", c.initial_log_std);
}

std::string default_method(Kind k) {
  switch (k) {
    case Kind::Toy: return "wng";
    case Kind::Es: return "es";
    case Kind::Pg: return "vanilla";
  }
  return "";
}

}  // namespace

const char* to_string(Kind k) {
  switch (k) {
    case Kind::Toy: return "toy";
    case Kind::Es: return "es";
    case Kind::Pg: return "pg";
  }
  return "?";
}

ToyMethod parse_toy_method(const std::string& name) {
  for (ToyMethod m : {ToyMethod::GradientDescent, ToyMethod::Wng, ToyMethod::Fng, ToyMethod::W2Penalty,
                      ToyMethod::KlPenalty}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown toy method '" + name + "'");
}

CovarianceParam parse_param(const std::string& name) {
  if (name == "diag") return CovarianceParam::Diagonal;
  if (name == "log-diag") return CovarianceParam::LogDiagonal;
  throw ConfigError("unknown covariance parameterization '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  switch (kind) {
    case Kind::Toy: toy.validate(); break;
    case Kind::Es:
      es.validate();
      world.validate();
      break;
    case Kind::Pg:
      pg.validate();
      world.validate();
      break;
  }
}

ExperimentConfig preset(Kind kind, const std::string& method) {
  ExperimentConfig c;
  c.kind = kind;
  c.method = method.empty() ? default_method(kind) : method;
  switch (kind) {
    case Kind::Toy: c.toy.method = parse_toy_method(c.method); break;
    case Kind::Es: c.es = es_preset(parse_es_method(c.method)); break;
    case Kind::Pg: c.pg = pg_preset(parse_pg_method(c.method)); break;
  }
  return c;
}

void apply_json(ExperimentConfig& config, const json& doc) {
  const Section top(doc, "", {"kind", "method", "seeds", "output_dir", "world", "toy", "es", "pg"});
  std::string kind;
  top.read("kind", kind);
  if (!kind.empty() && kind != to_string(config.kind)) {
    throw ConfigError("config kind '" + kind + "' does not match the '" + to_string(config.kind) + "' command");
  }
  if (top.has("seeds")) {
    const json& s = top.at("seeds");
    if (!s.is_array()) top.bad("seeds", "an array of nonnegative integers");
    config.seeds.clear();
    for (const json& v : s) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) top.bad("seeds", "an array of nonnegative integers");
      config.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (top.has("output_dir")) {
    std::string dir;
    top.read("output_dir", dir);
    config.output_dir = dir;
  }
  for (Kind k : {Kind::Toy, Kind::Es, Kind::Pg}) {
    if (k != config.kind && top.has(to_string(k))) {
      throw ConfigError(std::string("config key '") + to_string(k) + "' does not apply to " + to_string(config.kind) +
                        " runs");
    }
  }
  if (top.has("world")) {
    if (config.kind == Kind::Toy) throw ConfigError("config key 'world' does not apply to toy runs");
    apply_world(config.world, top.at("world"));
  }
  switch (config.kind) {
    case Kind::Toy:
      if (top.has("toy")) apply_toy(config.toy, top.at("toy"));
      break;
    case Kind::Es:
      if (top.has("es")) apply_es(config.es, top.at("es"));
      break;
    case Kind::Pg:
      if (top.has("pg")) apply_pg(config.pg, top.at("pg"));
      break;
  }
}

ExperimentConfig load_config(Kind kind, const std::optional<std::filesystem::path>& path,
                             const std::string& method_override) {
  json doc = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + path->string());
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(path->string() + ": " + e.what());
    }
  }
  std::string method = method_override;
  if (method.empty() && doc.is_object() && doc.contains("method")) {
    if (!doc["method"].is_string()) throw ConfigError("config key 'method' must be a string");
    method = doc["method"].get<std::string>();
  }
  ExperimentConfig c = preset(kind, method);
  apply_json(c, doc);
  c.method = method.empty() ? c.method : method;
  return c;
}

}  // namespace wng::cli
