// wng: command-line front end for the toy, ES and PG experiments and the
// property-check suite.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad arguments or config.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tools/config.hpp"
#include "verify/property_suite.hpp"
#include "wng/errors.hpp"
#include "wng/run_log.hpp"

namespace fs = std::filesystem;
using namespace wng;
using wng::cli::ExperimentConfig;
using wng::cli::Kind;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RunOptions {
  std::optional<fs::path> config;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<double> lr;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<fs::path> out;
  std::optional<fs::path> trajectory;
  // toy only
  std::optional<std::string> param;
  std::optional<int> spectrum;
  std::optional<int> dim;
};

CLI::App* add_run_command(CLI::App& app, Kind kind, RunOptions& o, const std::string& help) {
  CLI::App* sub = app.add_subcommand(cli::to_string(kind), help);
  sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  sub->add_option("--method", o.method, "method preset");
  sub->add_option("--seed", o.seed, "run a single seed (replaces the config's seed list)");
  sub->add_option("--iters", o.iters, "iterations");
  sub->add_option("--lr", o.lr, kind == Kind::Es ? "ES learning rate eta" : "step size");
  sub->add_option("--beta", o.beta, "penalty weight");
  sub->add_option("--out", o.out, "CSV output path (default: stdout)");
  if (kind == Kind::Es) sub->add_option("--delta", o.delta, "WNES interpolation coefficient (<= 1)");
  if (kind == Kind::Toy) {
    sub->add_option("--param", o.param, "covariance parameterization: diag or log-diag");
    sub->add_option("--spectrum", o.spectrum, "log the k largest Hessian eigenvalue ratios at the end");
    sub->add_option("--dim", o.dim, "dimension D");
  } else {
    sub->add_option("--trajectory", o.trajectory, "write the final mean-action rollout of the first seed (t,x,y,ax,ay,r)");
  }
  return sub;
}

void apply_flags(ExperimentConfig& c, const RunOptions& o) {
  if (o.seed) c.seeds = {*o.seed};
  switch (c.kind) {
    case Kind::Toy:
      if (o.iters) c.toy.iterations = *o.iters;
      if (o.lr) c.toy.step_size = *o.lr;
      if (o.beta) c.toy.beta = *o.beta;
      if (o.param) c.toy.param = cli::parse_param(*o.param);
      if (o.spectrum) c.toy.spectrum_k = *o.spectrum;
      if (o.dim) c.toy.dim = *o.dim;
      break;
    case Kind::Es:
      if (o.iters) c.es.iterations = *o.iters;
      if (o.lr) c.es.eta = *o.lr;
      if (o.beta) {
        if (!c.es.penalty) c.es.penalty = EsPenalty{};
        c.es.penalty->beta = *o.beta;
      }
      if (o.delta) {
        c.es.delta = *o.delta;
        if (c.es.delta != 0.0 && !c.es.wng) c.es.wng = WngConfig{};
      }
      break;
    case Kind::Pg:
      if (o.iters) c.pg.iterations = *o.iters;
      if (o.lr) c.pg.step_size = *o.lr;
      if (o.beta) c.pg.beta = *o.beta;
      break;
  }
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WNG_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v < 1) throw std::invalid_argument(env);
      n = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("WNG_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

struct SeedResult {
  RunLog log;
  GaussianPolicy policy;
};

SeedResult run_seed(const ExperimentConfig& c, std::uint64_t seed) {
  SeedResult r;
  switch (c.kind) {
    case Kind::Toy: {
      ToyRunConfig t = c.toy;
      t.seed = seed;
      r.log = run_toy(t);
      break;
    }
    case Kind::Es: {
      EsConfig e = c.es;
      e.seed = seed;
      r.log = run_es(e, c.world, GaussianPolicy(), &r.policy);
      break;
    }
    case Kind::Pg: {
      PgConfig p = c.pg;
      p.seed = seed;
      r.log = run_pg(p, c.world, &r.policy);
      break;
    }
  }
  return r;
}

/// Seeds run on up to WNG_THREADS workers; results keep the seed order.
std::vector<SeedResult> run_all(const ExperimentConfig& c, unsigned workers) {
  std::vector<SeedResult> results(c.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < c.seeds.size(); i = next++) {
      try {
        results[i] = run_seed(c, c.seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return results;
}

const char* headline_metric(Kind k) {
  switch (k) {
    case Kind::Toy: return "loss_per_dim";
    case Kind::Es: return "distance_to_goal";
    case Kind::Pg: return "return";
  }
  return "";
}

std::optional<fs::path> resolve_output(const ExperimentConfig& c, const RunOptions& o) {
  if (o.out) {
    const fs::path parent = o.out->parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw ConfigError("output directory " + parent.string() + " does not exist");
    return o.out;
  }
  if (!c.output_dir) return std::nullopt;
  std::error_code ec;
  fs::create_directories(*c.output_dir, ec);
  if (ec || !fs::is_directory(*c.output_dir)) throw ConfigError("cannot create output_dir " + c.output_dir->string());
  return *c.output_dir / (std::string(cli::to_string(c.kind)) + "-" + c.method + ".csv");
}

int run_command(Kind kind, const RunOptions& o) {
  ExperimentConfig config;
  std::optional<fs::path> out;
  unsigned workers = 1;
  try {
    config = cli::load_config(kind, o.config, o.method);
    apply_flags(config, o);
    config.validate();
    out = resolve_output(config, o);
    workers = worker_count(config.seeds.size());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const std::vector<SeedResult> results = run_all(config, workers);
    RunLog merged;
    for (const SeedResult& r : results) merged.append(r.log);
    if (out) {
      write_log(merged, *out);
    } else {
      std::cout << format_log(merged);
    }
    if (o.trajectory) write_trajectory(rollout(results.front().policy, config.world, false, 0), *o.trajectory);
    const char* metric = headline_metric(kind);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto v = results[i].log.last(metric, config.seeds[i]);
      std::cerr << cli::to_string(kind) << ' ' << config.method << " seed " << config.seeds[i] << ": " << metric
                << " = ";
      if (v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", *v);
        std::cerr << buf << '\n';
      } else {
        std::cerr << "n/a\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Kernel-estimated Wasserstein natural gradients: experiments and checks", "wng");
  app.require_subcommand(1);

  RunOptions toy_opts, es_opts, pg_opts;
  CLI::App* toy = add_run_command(app, Kind::Toy, toy_opts, "Gaussian lab: minimize E[1 - sin(x)/x] over a diagonal Gaussian");
  CLI::App* es = add_run_command(app, Kind::Es, es_opts, "Evolution strategies on the point-with-wall task");
  CLI::App* pg = add_run_command(app, Kind::Pg, pg_opts, "Policy gradients on the point task");

  std::string filter;
  CLI::App* check = app.add_subcommand("check", "Run the property-check suite");
  check->add_option("--filter", filter, "only run checks whose name starts with this prefix");
  CLI::App* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (toy->parsed()) return run_command(Kind::Toy, toy_opts);
  if (es->parsed()) return run_command(Kind::Es, es_opts);
  if (pg->parsed()) return run_command(Kind::Pg, pg_opts);
  if (check->parsed()) return wng::verify::run_property_suite(filter, std::cout) == 0 ? 0 : kExitRuntime;
  if (version->parsed()) {
    std::cout << "wng " << kVersion << '\n';
    return 0;
  }
  return kExitUsage;
}
