// conebessel: evaluate cone Bessel series and integrals, run the check suite.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conebessel/algebra.h"
#include "conebessel/cone_integral.h"
#include "conebessel/series.h"
#include "conebessel/verify.h"

namespace cb = conebessel;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kComputation = 1, kUsage = 2, kVerifyFailed = 3;

struct Options {
  std::optional<double> nu, d;
  std::optional<int> rank, j;
  std::vector<double> t, x;
  double tol = 1e-13;
  int max_degree = 200;
  long samples = 100000;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool json = false;
  bool partner = false;
  bool timing = false;
  std::string kind = "ordinary";
  std::string suite = "all";
};

std::uint64_t default_seed() {
  const char* env = std::getenv("CONEBESSEL_SEED");
  if (!env || !*env) return 42;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-')
    throw cb::UsageError(std::string("CONEBESSEL_SEED is not an unsigned integer: ") + env);
  return v;
}

template <class T>
T need(const std::optional<T>& v, const std::string& flag, const std::string& cmd) {
  if (!v) throw cb::UsageError(cmd + " needs " + flag);
  return *v;
}

// Symmetric coordinates from --t, or from --x through the elementary
// symmetric functions.
cb::SymmetricPoint point(const Options& o, const std::string& cmd) {
  if (o.t.empty() && o.x.empty()) throw cb::UsageError(cmd + " needs --t or --x");
  cb::SymmetricPoint p = o.t.empty() ? cb::elem_sym(o.x) : cb::SymmetricPoint{o.t};
  if (o.rank && *o.rank != p.rank())
    throw cb::UsageError("--rank " + std::to_string(*o.rank) + " does not match " +
                         std::to_string(p.rank()) + " coordinates");
  if (p.rank() != 2 && p.rank() != 3) throw cb::UsageError(cmd + " needs rank 2 or 3");
  return p;
}

cb::SeriesParams series_params(const Options& o, const std::string& cmd) {
  cb::SeriesParams p;
  p.nu = need(o.nu, "--nu", cmd);
  p.d = need(o.d, "--d", cmd);
  p.tol = o.tol;
  p.max_degree = o.max_degree;
  return p;
}

Json eval_json(const cb::EvalResult& r) {
  return Json{{"value", r.value}, {"err", r.err}, {"work", r.work}};
}

Json mc_json(const cb::McEstimate& e) {
  return Json{{"value", e.value},
              {"std_error", e.std_error},
              {"n_samples", e.n_samples},
              {"seed", e.seed}};
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void print_eval(const Options& o, const cb::EvalResult& r) {
  if (o.json) std::cout << eval_json(r).dump() << "\n";
  else std::cout << "value " << num(r.value) << "\nerr   " << num(r.err) << "\nwork  " << r.work << "\n";
}

int eval_j(const Options& o) {
  const std::string cmd = "eval-j";
  const auto p = series_params(o, cmd);
  const auto t = point(o, cmd);
  cb::SolutionId id{t.rank(), need(o.j, "--j", cmd), o.partner};
  if (id.j < 1 || id.j > (1 << (id.rank - 1)))
    throw cb::UsageError("--j must be in 1.." + std::to_string(1 << (id.rank - 1)) + " for rank " +
                         std::to_string(id.rank));
  const auto kind = o.kind == "modified" ? cb::SeriesKind::modified : cb::SeriesKind::ordinary;
  print_eval(o, cb::solution(id, p, t, kind));
  return kOk;
}

int eval_k_series(const Options& o) {
  const std::string cmd = "eval-k-series";
  const auto p = series_params(o, cmd);
  const auto t = point(o, cmd);
  print_eval(o, t.rank() == 2 ? cb::k2_series(p, t) : cb::k3_series(p, t));
  return kOk;
}

int eval_k_mc(const Options& o) {
  const std::string cmd = "eval-k-mc";
  const double nu = need(o.nu, "--nu", cmd);
  const double d = need(o.d, "--d", cmd);
  if (!o.t.empty()) throw cb::UsageError("eval-k-mc takes the eigenvalues via --x, not --t");
  if (o.x.empty()) throw cb::UsageError("eval-k-mc needs --x");
  const int r = static_cast<int>(o.x.size());
  if (o.rank && *o.rank != r)
    throw cb::UsageError("--rank " + std::to_string(*o.rank) + " does not match " +
                         std::to_string(r) + " eigenvalues");
  const auto alg = cb::AlgebraDescriptor::make(r, d);
  const std::uint64_t seed = o.seed ? *o.seed : default_seed();
  const auto e = cb::k_integral_mc(alg, nu, cb::diagonal(alg, o.x), o.samples, seed, o.threads);
  if (o.json) {
    std::cout << mc_json(e).dump() << "\n";
  } else {
    std::cout << "value     " << num(e.value) << "\nstd_error " << num(e.std_error)
              << "\nn_samples " << e.n_samples << "\nseed      " << e.seed << "\n";
  }
  return kOk;
}

int coeffs(const Options& o) {
  const std::string cmd = "coeffs";
  const double nu = need(o.nu, "--nu", cmd);
  const double d = need(o.d, "--d", cmd);
  const int r = o.rank.value_or(3);
  if (r == 2) {
    const auto c = cb::coeffs2(nu, d);
    if (o.json) {
      std::cout << Json{{"nu", nu}, {"d", d}, {"c", c}}.dump() << "\n";
    } else {
      for (int i = 0; i < 4; ++i) std::cout << "c" << i + 1 << " " << num(c[i]) << "\n";
    }
    return kOk;
  }
  if (r != 3) throw cb::UsageError("coeffs needs --rank 2 or 3");
  const auto c = cb::coeffs3(nu, d);
  if (o.json) {
    std::cout << Json{{"nu", c.nu}, {"d", c.d}, {"a", c.a}, {"b", c.b}}.dump() << "\n";
  } else {
    for (int i = 0; i < 4; ++i) std::cout << "a" << i + 1 << " " << num(c.a[i]) << "\n";
    for (int i = 0; i < 4; ++i) std::cout << "b" << i + 1 << " " << num(c.b[i]) << "\n";
  }
  return kOk;
}

int verify(const Options& o) {
  std::vector<std::string> names;
  std::stringstream ss(o.suite);
  for (std::string n; std::getline(ss, n, ',');)
    if (!n.empty()) names.push_back(n);
  // Resolve every name before running anything.
  for (const auto& n : names)
    if (n != "all") cb::find_check(n);
  const std::uint64_t seed = o.seed ? *o.seed : default_seed();
  const auto report = cb::run_suite(names, seed, o.threads);
  if (o.json) {
    std::cout << cb::report_json(report, o.timing) << "\n";
  } else {
    for (const auto& c : report.results) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.spec.name << "  observed " << num(c.observed)
                << "  bound " << num(c.bound);
      if (c.attempts > 1) std::cout << "  (retried)";
      if (o.timing) std::cout << "  " << c.wall_time << " s";
      if (!c.passed && !c.diagnostics.empty()) std::cout << "  " << c.diagnostics;
      std::cout << "\n";
    }
    std::cout << report.pass << " passed, " << report.fail << " failed\n";
  }
  return report.fail == 0 ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bessel functions on symmetric cones of rank 2 and 3"};
  app.require_subcommand(1);
  Options o;

  auto add_series = [&](CLI::App* s) {
    s->add_option("--nu", o.nu, "order");
    s->add_option("--d", o.d, "Peirce multiplicity");
    s->add_option("--rank", o.rank, "rank")->check(CLI::Range(1, 3));
    auto* t = s->add_option("--t", o.t, "elementary symmetric coordinates, comma separated")
                  ->delimiter(',');
    auto* x = s->add_option("--x", o.x, "eigenvalues, comma separated")->delimiter(',');
    t->excludes(x);
    s->add_option("--tol", o.tol, "relative stopping tolerance")->check(CLI::PositiveNumber);
    s->add_option("--max-degree", o.max_degree, "layer cap")->check(CLI::PositiveNumber);
    s->add_flag("--json", o.json, "JSON output");
  };

  auto* ej = app.add_subcommand("eval-j", "one fundamental J solution");
  add_series(ej);
  ej->add_option("--j", o.j, "solution index");
  ej->add_flag("--partner", o.partner, "t_r^-nu J_-nu instead of J_nu");
  ej->add_option("--kind", o.kind, "sign convention")
      ->check(CLI::IsMember({"ordinary", "modified"}));

  auto* ek = app.add_subcommand("eval-k-series", "K function from the series");
  add_series(ek);

  auto* em = app.add_subcommand("eval-k-mc", "K integral by Monte Carlo");
  add_series(em);
  em->add_option("--samples", o.samples, "sample count")->check(CLI::PositiveNumber);
  em->add_option("--seed", o.seed, "seed (default CONEBESSEL_SEED or 42)");
  em->add_option("--threads", o.threads, "worker threads; does not change results")
      ->check(CLI::NonNegativeNumber);

  auto* co = app.add_subcommand("coeffs", "K coefficient table");
  co->add_option("--nu", o.nu, "order");
  co->add_option("--d", o.d, "Peirce multiplicity");
  co->add_option("--rank", o.rank, "2 or 3 (default 3)")->check(CLI::Range(2, 3));
  co->add_flag("--json", o.json, "JSON output");

  auto* ve = app.add_subcommand("verify", "run named checks");
  ve->add_option("--suite", o.suite, "'all' or comma-separated check names");
  ve->add_option("--seed", o.seed, "suite seed (default CONEBESSEL_SEED or 42)");
  ve->add_option("--threads", o.threads, "worker threads; does not change results")
      ->check(CLI::NonNegativeNumber);
  ve->add_flag("--timing", o.timing, "include wall times");
  ve->add_flag("--json", o.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*ej) return eval_j(o);
    if (*ek) return eval_k_series(o);
    if (*em) return eval_k_mc(o);
    if (*co) return coeffs(o);
    return verify(o);
  } catch (const cb::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const cb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputation;
  }
}
