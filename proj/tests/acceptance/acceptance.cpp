// Acceptance criteria. Usage: acceptance [name-prefix]
// Prints one PASS/FAIL line per criterion; exits 1 if any selected criterion fails.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "verify/checks.hpp"
#include "verify/property_suite.hpp"
#include "wng/es.hpp"
#include "wng/gaussian_lab.hpp"
#include "wng/pg.hpp"

using namespace wng;
using wng::verify::CheckResult;
using wng::verify::format;

namespace {

// Tolerances and budgets, fixed before the runs.
constexpr int kSeeds = 5;
constexpr int kSeedsRequired = 4;
constexpr double kWngLogDiagLoss = 1e-7;
constexpr double kFngLow = 1e-5, kFngHigh = 1e-3;
constexpr double kW2PenaltyFloor = 1e-2;
constexpr double kDiagonalLoss = 1e-5;
constexpr double kConvergedLoss = 1e-3;
constexpr double kWngRangeDecades = 2.0;
constexpr double kStallLow = 4.5, kStallHigh = 5.0;
constexpr double kGoalDistance = 1.0;
constexpr int kEsIterations = 300;

unsigned threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WNG_THREADS")) n = static_cast<unsigned>(std::max(1, std::atoi(env)));
  return n;
}

/// out[i] = fn(i) for i < n, on up to WNG_THREADS workers.
template <class T>
std::vector<T> parallel_map(int n, const std::function<T(int)>& fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) out[static_cast<std::size_t>(i)] = fn(i);
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < std::min<unsigned>(threads(), static_cast<unsigned>(n)); ++w) pool.emplace_back(work);
  work();
  return out;
}

std::string join(const std::vector<double>& v, const char* fmt = "%.2g") {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + format(fmt, x);
  return s;
}

int count_if(const std::vector<double>& v, const std::function<bool(double)>& p) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), p));
}

double toy_final(ToyMethod method, CovarianceParam param, double step_size, double beta, std::uint64_t seed) {
  ToyRunConfig c;
  c.method = method;
  c.param = param;
  c.step_size = step_size;
  c.beta = beta;
  c.seed = seed;
  c.log_every = c.iterations;
  return *run_toy(c).last("loss_per_dim", seed);
}

std::vector<double> toy_seeds(ToyMethod method, CovarianceParam param, double step_size = 0.9, double beta = 0.1) {
  return parallel_map<double>(kSeeds, [&](int s) { return toy_final(method, param, step_size, beta, static_cast<std::uint64_t>(s)); });
}

CheckResult toy_wng_logdiag() {
  const auto l = toy_seeds(ToyMethod::Wng, CovarianceParam::LogDiagonal);
  const int ok = count_if(l, [](double x) { return x <= kWngLogDiagLoss; });
  return {ok >= kSeedsRequired, format("%d/%d seeds <= %.0e; loss per dim %s", ok, kSeeds, kWngLogDiagLoss, join(l).c_str())};
}

CheckResult toy_fng_logdiag() {
  const auto l = toy_seeds(ToyMethod::Fng, CovarianceParam::LogDiagonal);
  const int ok = count_if(l, [](double x) { return x >= kFngLow && x <= kFngHigh; });
  return {ok >= kSeedsRequired, format("%d/%d seeds in [%.0e, %.0e]; loss per dim %s", ok, kSeeds, kFngLow, kFngHigh, join(l).c_str())};
}

CheckResult toy_w2_logdiag() {
  bool pass = true;
  std::string detail;
  for (double beta : {0.1, 1.0, 10.0}) {
    const auto l = toy_seeds(ToyMethod::W2Penalty, CovarianceParam::LogDiagonal, 0.9, beta);
    const int ok = count_if(l, [](double x) { return x >= kW2PenaltyFloor; });
    pass = pass && ok >= kSeedsRequired;
    detail += format("beta %g: %d/%d >= %.0e (%s); ", beta, ok, kSeeds, kW2PenaltyFloor, join(l).c_str());
  }
  return {pass, detail};
}

CheckResult toy_diagonal() {
  bool pass = true;
  std::string detail;
  for (ToyMethod m : {ToyMethod::Wng, ToyMethod::W2Penalty}) {
    const auto l = toy_seeds(m, CovarianceParam::Diagonal);
    const int ok = count_if(l, [](double x) { return x <= kDiagonalLoss; });
    pass = pass && ok >= kSeedsRequired;
    detail += format("%s: %d/%d <= %.0e (%s); ", to_string(m), ok, kSeeds, kDiagonalLoss, join(l).c_str());
  }
  return {pass, detail};
}

/// Decades spanned by the widest contiguous run of converged step sizes.
double convergent_decades(const std::vector<double>& grid, const std::vector<double>& loss) {
  double best = 0.0;
  std::size_t i = 0;
  while (i < grid.size()) {
    if (!(loss[i] < kConvergedLoss)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size() && loss[j + 1] < kConvergedLoss) ++j;
    best = std::max(best, std::log10(grid[j] / grid[i]));
    i = j + 1;
  }
  return best;
}

CheckResult toy_step_size_range() {
  const std::vector<double> grid = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
  auto sweep = [&](ToyMethod m) {
    return parallel_map<double>(static_cast<int>(grid.size()), [&](int i) {
      return toy_final(m, CovarianceParam::LogDiagonal, grid[static_cast<std::size_t>(i)], 0.1, 0);
    });
  };
  const auto wng = sweep(ToyMethod::Wng);
  const auto w2 = sweep(ToyMethod::W2Penalty);
  const double dw = convergent_decades(grid, wng), dp = convergent_decades(grid, w2);
  return {dw >= kWngRangeDecades && dp < dw,
          format("convergent range: wng %.2f decades, w2-penalty %.2f decades; wng %s; w2 %s", dw, dp, join(wng).c_str(),
                 join(w2).c_str())};
}

CheckResult property(const char* name) {
  const verify::PropertyCheck* c = verify::find_check(name);
  if (!c) return {false, format("no property check named %s", name)};
  return verify::run_check(*c);
}

CheckResult all_of(std::initializer_list<const char*> names) {
  bool pass = true;
  std::string detail;
  for (const char* n : names) {
    const CheckResult r = property(n);
    pass = pass && r.passed;
    detail += format("%s %s: %s; ", n, r.passed ? "ok" : "FAILED", r.detail.c_str());
  }
  return {pass, detail};
}

struct EsOutcome {
  double final_x = 0.0;
  double distance = 0.0;
};

std::vector<EsOutcome> es_seeds(EsMethod m) {
  return parallel_map<EsOutcome>(kSeeds, [&](int s) {
    EsConfig c = es_preset(m);
    c.iterations = kEsIterations;
    c.seed = static_cast<std::uint64_t>(s);
    const RunLog log = run_es(c, PointWorld{}, GaussianPolicy());
    return EsOutcome{*log.last("final_x", c.seed), *log.last("distance_to_goal", c.seed)};
  });
}

CheckResult es_vanilla_stalls() {
  const auto r = es_seeds(EsMethod::Vanilla);
  std::vector<double> x;
  for (const auto& o : r) x.push_back(o.final_x);
  const int ok = count_if(x, [](double v) { return v >= kStallLow && v <= kStallHigh; });
  return {ok >= kSeedsRequired, format("%d/%d seeds stalled, final x %s", ok, kSeeds, join(x, "%.3f").c_str())};
}

CheckResult es_reaches(EsMethod m) {
  const auto r = es_seeds(m);
  std::vector<double> d;
  for (const auto& o : r) d.push_back(o.distance);
  const int ok = count_if(d, [](double v) { return v < kGoalDistance; });
  return {ok >= kSeedsRequired, format("%d/%d seeds within %.1f of the goal, distance %s", ok, kSeeds, kGoalDistance,
                                       join(d, "%.2f").c_str())};
}

CheckResult pg_wnpg_beats_vanilla() {
  PointWorld world;
  world.wall_enabled = false;
  auto finals = [&](PgMethod m) {
    return parallel_map<double>(kSeeds, [&](int s) {
      PgConfig c = pg_preset(m);
      c.seed = static_cast<std::uint64_t>(s);
      return *run_pg(c, world).last("return", c.seed);
    });
  };
  const auto w = finals(PgMethod::Wnpg), v = finals(PgMethod::Vanilla);
  int ok = 0;
  for (int s = 0; s < kSeeds; ++s) ok += w[static_cast<std::size_t>(s)] > v[static_cast<std::size_t>(s)];
  return {ok >= kSeedsRequired,
          format("%d/%d seeds; wnpg %s vs vanilla %s", ok, kSeeds, join(w, "%.1f").c_str(), join(v, "%.1f").c_str())};
}

CheckResult determinism() {
  int compared = 0, differing = 0;
  std::string which;
  auto same = [&](const std::string& name, const std::function<RunLog()>& run) {
    ++compared;
    if (format_log(run(), false) != format_log(run(), false)) {
      ++differing;
      which += " " + name;
    }
  };
  for (ToyMethod m : {ToyMethod::GradientDescent, ToyMethod::Wng, ToyMethod::Fng, ToyMethod::W2Penalty, ToyMethod::KlPenalty}) {
    for (CovarianceParam p : {CovarianceParam::Diagonal, CovarianceParam::LogDiagonal}) {
      ToyRunConfig c;
      c.method = m;
      c.param = p;
      c.iterations = 200;
      c.seed = 3;
      same(std::string("toy-") + to_string(m) + "-" + to_string(p), [&] { return run_toy(c); });
    }
  }
  for (EsMethod m : {EsMethod::Vanilla, EsMethod::Clipped, EsMethod::Wnes, EsMethod::Bges, EsMethod::BgWnes}) {
    EsConfig c = es_preset(m);
    c.iterations = 20;
    c.seed = 3;
    same(std::string("es-") + to_string(m), [&] { return run_es(c, PointWorld{}, GaussianPolicy()); });
  }
  for (PgMethod m : {PgMethod::Vanilla, PgMethod::PpoClip, PgMethod::KlPenalty, PgMethod::Bgpg, PgMethod::Wnpg, PgMethod::BgWnpg}) {
    PgConfig c = pg_preset(m);
    c.iterations = 5;
    c.seed = 3;
    same(std::string("pg-") + to_string(m), [&] { return run_pg(c, PointWorld{}); });
  }
  return {differing == 0, format("%d/%d experiments byte-identical on rerun%s", compared - differing, compared,
                                  differing ? (";" + which).c_str() : "")};
}

struct Criterion {
  std::string name;
  std::function<CheckResult()> run;
};

std::vector<Criterion> criteria() {
  return {
      {"toy.wng_logdiag", toy_wng_logdiag},
      {"toy.fng_logdiag", toy_fng_logdiag},
      {"toy.w2_logdiag", toy_w2_logdiag},
      {"toy.diagonal", toy_diagonal},
      {"toy.step_size_range", toy_step_size_range},
      {"estimator.woodbury", [] { return property("estimator.woodbury"); }},
      {"estimator.analytic_wim", [] { return property("estimator.analytic_wim"); }},
      {"estimator.limits", [] { return all_of({"lab.wim_expansion", "lab.prox_limit"}); }},
      {"estimator.jacobian_backends", [] { return all_of({"estimator.backends_agree", "estimator.score_vs_quadrature"}); }},
      {"es.vanilla_stalls", es_vanilla_stalls},
      {"es.wnes_reaches", [] { return es_reaches(EsMethod::Wnes); }},
      {"es.bgwnes_reaches", [] { return es_reaches(EsMethod::BgWnes); }},
      {"es.gradient_unbiased", [] { return property("es.unbiased"); }},
      {"es.sinkhorn_exact", [] { return property("es.sinkhorn_exact"); }},
      {"pg.fd_checks", [] { return all_of({"pg.finite_differences", "env.score"}); }},
      {"pg.ratio_identity", [] { return property("pg.ratio_identity"); }},
      {"pg.bandit", [] { return property("pg.bandit"); }},
      {"pg.wnpg_beats_vanilla", pg_wnpg_beats_vanilla},
      {"determinism", determinism},
  };
}

}  // namespace

int main(int argc, char** argv) {
  const std::string prefix = argc > 1 ? argv[1] : "";
  int ran = 0, failed = 0;
  for (const Criterion& c : criteria()) {
    if (!c.name.starts_with(prefix)) continue;
    ++ran;
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    failed += !r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << c.name << "  " << r.detail << '\n' << std::flush;
  }
  if (ran == 0) {
    std::cerr << "no criterion matches '" << prefix << "'\n";
    return 2;
  }
  std::cout << (ran - failed) << '/' << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
