// Acceptance run: the full suite through the command-line tool, grouped
// into the ten acceptance criteria, one PASS/FAIL line each.
// Usage: acceptance <path to conebessel>

#include <array>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

using Json = nlohmann::ordered_json;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& cmd) {
  Run r;
  std::unique_ptr<FILE, int (*)(FILE*)> p(popen(cmd.c_str(), "r"), pclose);
  if (!p) return r;
  std::array<char, 4096> buf;
  for (size_t n; (n = fread(buf.data(), 1, buf.size(), p.get())) > 0;) r.out.append(buf.data(), n);
  const int raw = pclose(p.release());
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

bool starts(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

struct Criterion {
  int id;
  std::string title;
  double limit_s;  // 0: no runtime limit
  std::function<bool(const std::string&)> member;
};

Json strip_timing(Json j) {
  for (auto& r : j["results"]) r.erase("wall_time");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <path to conebessel>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::string base = "\"" + cli + "\" verify --suite all --seed 42 --json --timing --threads ";

  const Run first = run(base + "1");
  const Run second = run(base + "3");
  if ((first.status != 0 && first.status != 3) || (second.status != 0 && second.status != 3)) {
    std::cerr << "suite run failed to complete (exit " << first.status << ", " << second.status
              << ")\n";
    return 1;
  }
  const Json report = Json::parse(first.out);
  const Json report3 = Json::parse(second.out);

  const std::vector<std::string> algebra = {"jordan-identity", "cayley-hamilton", "unit-block-det",
                                            "schur-block-det", "trace-inverse",   "xi-facts",
                                            "quadratic-det",   "peirce-rules"};
  const std::vector<Criterion> criteria = {
      {1, "algebraic identities, 1000 draws each, d = 1 and 2", 10,
       [&](const std::string& n) {
         for (const auto& a : algebra)
           if (n == a + "-d1" || n == a + "-d2") return true;
         return false;
       }},
      {2, "annihilation by Z_k and B_i, 12 solutions; controls", 60,
       [](const std::string& n) {
         return starts(n, "z-annihilation-") || starts(n, "muirhead-") || n == "residual-controls";
       }},
      {3, "rank-3 to rank-2 reductions, 50 draws, 1e-11 relative", 10,
       [](const std::string& n) { return starts(n, "reduction-j3"); }},
      {4, "coefficient chain and table", 0,
       [](const std::string& n) { return n == "coeffs-table" || n == "coeffs-chain"; }},
      {5, "rank-1 and rank-2 integrals against quadrature and series", 300,
       [](const std::string& n) {
         return n == "k1-mc-vs-quadrature" || starts(n, "k2-mc-vs-series-");
       }},
      {6, "boundary chain at x = (1,1) and (1,1.5); Gaussian sub-step", 300,
       [](const std::string& n) {
         return starts(n, "gaussian-substep-") || starts(n, "v-positivity-") ||
                starts(n, "boundary-direct-vs-semi-") || starts(n, "boundary-vs-series-");
       }},
      {7, "rank-3 integral against the rank-3 K series, d = 1 and 2", 600,
       [](const std::string& n) { return n == "k3-mc-vs-series-d1" || n == "k3-mc-vs-series-d2"; }},
      {8, "K symmetry, series and Monte Carlo", 0,
       [](const std::string& n) { return starts(n, "k-symmetry-"); }},
      {9, "cone gamma normalization", 0,
       [](const std::string& n) { return starts(n, "gamma-cone-"); }},
  };

  int failed = 0;
  std::vector<bool> used(report["results"].size(), false);
  for (const auto& c : criteria) {
    bool ok = true;
    int members = 0;
    double seconds = 0;
    std::vector<std::string> notes;
    for (size_t i = 0; i < report["results"].size(); ++i) {
      const auto& r = report["results"][i];
      const std::string name = r["name"];
      if (!c.member(name)) continue;
      used[i] = true;
      ++members;
      seconds += r["wall_time"].get<double>();
      if (!r["passed"].get<bool>()) {
        ok = false;
        notes.push_back(name + ": observed " + r["observed"].dump() + ", bound " +
                        r["bound"].dump() + "; " + r["diagnostics"].get<std::string>());
      }
    }
    if (members == 0) {
      ok = false;
      notes.push_back("no checks registered");
    }
    if (c.limit_s > 0 && seconds > c.limit_s) {
      ok = false;
      notes.push_back("runtime " + std::to_string(seconds) + " s over " +
                      std::to_string(c.limit_s) + " s");
    }
    failed += !ok;
    std::printf("criterion %2d %s  %s (%d checks, %.1f s)\n", c.id, ok ? "PASS" : "FAIL",
                c.title.c_str(), members, seconds);
    for (const auto& n : notes) std::printf("    %s\n", n.c_str());
  }

  const bool same = strip_timing(report).dump() == strip_timing(report3).dump();
  failed += !same;
  std::printf("criterion 10 %s  report identical with 1 and 3 threads, seed 42\n",
              same ? "PASS" : "FAIL");

  for (size_t i = 0; i < used.size(); ++i) {
    if (used[i]) continue;
    const auto& r = report["results"][i];
    std::printf("supplementary %s %s\n", r["passed"].get<bool>() ? "PASS" : "FAIL",
                r["name"].get<std::string>().c_str());
  }
  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
