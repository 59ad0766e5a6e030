#include "conebessel/series.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <math.h>
#include <sstream>

namespace conebessel {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kDirectMax = 30;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Product of count consecutive factors start, start + step, ...
SignedLog direct_product(double start, int count, int step) {
  SignedLog out;
  for (int i = 0; i < count; ++i) {
    const double f = start + step * i;
    if (f == 0.0) return {0, 0.0};
    if (f < 0) out.sign = -out.sign;
    out.log_abs += std::log(std::abs(f));
  }
  return out;
}

SignedLog invert(SignedLog s) {
  s.log_abs = -s.log_abs;
  return s;
}

}  // namespace

double SignedLog::value() const {
  if (sign == 0) return 0.0;
  return sign * std::exp(log_abs);
}

SignedLog& SignedLog::operator*=(const SignedLog& o) {
  sign *= o.sign;
  log_abs += o.log_abs;
  return *this;
}

SignedLog& SignedLog::operator/=(const SignedLog& o) {
  if (o.sign == 0) throw DomainError("division by a zero signed-log value");
  sign *= o.sign;
  log_abs -= o.log_abs;
  return *this;
}

SignedLog log_gamma(double x) {
  if (is_nonpositive_integer(x)) throw DomainError("Gamma has a pole at " + fmt(x));
  int sg = 1;
  const double l = ::lgamma_r(x, &sg);
  return {sg, l};
}

SignedLog pochhammer(double a, int k) {
  if (k >= 0) {
    if (k <= kDirectMax || is_nonpositive_integer(a)) return direct_product(a, k, 1);
    SignedLog out = log_gamma(a + k);
    out /= log_gamma(a);
    return out;
  }
  // (a)_k = 1 / ((a-1)(a-2)...(a+k)).
  const SignedLog den = (-k <= kDirectMax || a == std::floor(a))
                            ? direct_product(a - 1.0, -k, -1)
                            : [&] {
                                SignedLog g = log_gamma(a);
                                g /= log_gamma(a + k);
                                return g;
                              }();
  if (den.sign == 0)
    throw DomainError("Pochhammer (" + fmt(a) + ")_" + std::to_string(k) + " is infinite");
  return invert(den);
}

SignedLog rpochhammer(double a, int k) {
  if (k < 0) {
    // Gamma(a)/Gamma(a+k) = (a-1)(a-2)...(a+k).
    if (-k <= kDirectMax || a == std::floor(a)) return direct_product(a - 1.0, -k, -1);
    SignedLog g = log_gamma(a);
    g /= log_gamma(a + k);
    return g;
  }
  const SignedLog p = pochhammer(a, k);
  if (p.sign == 0)
    throw DomainError("reciprocal Pochhammer 1/(" + fmt(a) + ")_" + std::to_string(k) +
                      " is infinite");
  return invert(p);
}

SymmetricPoint elem_sym(std::span<const double> x) {
  const int r = static_cast<int>(x.size());
  if (r < 1 || r > 3) throw UsageError("elem_sym needs 1 to 3 variables");
  SymmetricPoint out;
  if (r == 1) out.t = {x[0]};
  if (r == 2) out.t = {x[0] + x[1], x[0] * x[1]};
  if (r == 3)
    out.t = {x[0] + x[1] + x[2], x[0] * x[1] + x[0] * x[2] + x[1] * x[2],
             x[0] * x[1] * x[2]};
  return out;
}

SymmetricPoint elem_sym(std::initializer_list<double> x) {
  return elem_sym(std::span<const double>(x.begin(), x.size()));
}

std::string SolutionId::name() const {
  std::string s = "j" + std::to_string(rank) + std::to_string(j);
  return partner ? s + "-partner" : s;
}

std::vector<SolutionId> all_solutions(int rank) {
  std::vector<SolutionId> out;
  const int count = rank == 2 ? 2 : 4;
  for (bool partner : {false, true})
    for (int j = 1; j <= count; ++j) out.push_back({rank, j, partner});
  return out;
}

void check_generic(double x, double guard, const std::string& what) {
  const double nearest = std::round(x);
  if (nearest <= 0.0 && std::abs(x - nearest) <= guard) {
    throw NonGenericParameterError(
        "non-generic parameter: " + what + " = " + fmt(x) +
            " is within " + fmt(guard) + " of the pole " + fmt(nearest),
        x);
  }
}

// ---------------------------------------------------------------------------
// JSeries

struct JSeries::Eval {
  double value = 0.0;
  double err = 0.0;
  long work = 0;
  int layers = 0;
};

JSeries::JSeries(SolutionId id, SeriesParams p, SeriesKind kind)
    : id_(id), p_(p), kind_(kind) {
  if (id.rank != 2 && id.rank != 3) throw UsageError("J-series exist for rank 2 and 3");
  const int count = id.rank == 2 ? 2 : 4;
  if (id.j < 1 || id.j > count) throw UsageError("series index out of range");
  if (!(p.d > 0.0)) throw UsageError("d must be positive");
  if (!(p.tol > 0.0)) throw UsageError("tol must be positive");
  if (p.max_degree < 1) throw UsageError("max_degree must be positive");
  order_ = id.partner ? -p.nu : p.nu;
  const double v = order_, h = p.d / 2.0, d = p.d;
  std::vector<std::pair<double, std::string>> bases;
  if (id.rank == 2) {
    if (id.j == 1) {
      bases = {{1 + v, "1+nu"}, {1 + v + h, "1+nu+d/2"}};
    } else {
      bases = {{1 - v - h, "1-nu-d/2"}, {1 + v, "1+nu"}};
      lead_ = {-v - h, 0.0, 0.0};
    }
  } else {
    switch (id.j) {
      case 1:
        bases = {{1 + v, "1+nu"}, {1 + v + h, "1+nu+d/2"}, {1 + v + d, "1+nu+d"}};
        break;
      case 2:
        bases = {{1 - v - d, "1-nu-d"}, {1 + v, "1+nu"}, {1 + v + h, "1+nu+d/2"}};
        lead_ = {-v - d, 0.0, 0.0};
        break;
      case 3:
        bases = {{1 - v - h, "1-nu-d/2"}, {1 + v, "1+nu"}, {1 - v, "1-nu"}};
        lead_ = {0.0, -v - h, 0.0};
        break;
      default:
        bases = {{1 + v, "1+nu"}, {1 - v - h, "1-nu-d/2"}};
        lead_ = {v, -v - h, 0.0};
        break;
    }
  }
  const std::string tag = id.partner ? " (with nu -> -nu) in " : " in ";
  for (const auto& [a, what] : bases)
    check_generic(a, p.pole_guard, "Gamma argument " + what + tag + id.name());
}

JSeries::Layer JSeries::build_layer(int L) const {
  Layer out;
  const double v = order_, h = p_.d / 2.0, d = p_.d;
  const int r = id_.rank;
  const int n3max = r == 3 ? L / 3 : 0;
  for (int n3 = 0; n3 <= n3max; ++n3) {
    for (int n2 = 0; 2 * n2 + 3 * n3 <= L; ++n2) {
      const int n1 = L - 2 * n2 - 3 * n3;
      int m1 = n1, m2 = n2, m3 = n3;
      std::vector<SignedLog> f;
      if (r == 2) {
        if (id_.j == 1) {
          f = {rpochhammer(1, m1), rpochhammer(1, m2), rpochhammer(1 + v, m2),
               rpochhammer(1 + v + h, m1 + 2 * m2)};
        } else {
          m1 = n1 - 2 * n2;
          f = {rpochhammer(1 - v - h, m1), rpochhammer(1, m2), rpochhammer(1 + v, m2),
               rpochhammer(1, m1 + 2 * m2)};
        }
      } else {
        if (id_.j == 2) m1 = n1 - 2 * n2 - 3 * n3;
        if (id_.j == 3) m2 = n2 - 2 * n3;
        if (id_.j == 4) {
          m2 = n2 - 2 * n3;
          m1 = n1 - 2 * m2 - 3 * m3;
        }
        const int k = m1 + 2 * m2 + 3 * m3;
        switch (id_.j) {
          case 1:
            f = {rpochhammer(1, m1), rpochhammer(1, m2), rpochhammer(1, m3),
                 rpochhammer(1 + v, m3), rpochhammer(1 + v + h, m2 + 2 * m3),
                 pochhammer(1 + 2 * v + d + k, m3), rpochhammer(1 + v + d, k)};
            break;
          case 2:
            f = {rpochhammer(1 - v - d, m1), rpochhammer(1, m2), rpochhammer(1, m3),
                 rpochhammer(1 + v, m3), rpochhammer(1 + v + h, m2 + 2 * m3),
                 pochhammer(1 + v + k, m3), rpochhammer(1, k)};
            break;
          case 3:
            f = {rpochhammer(1, m1), rpochhammer(1 - v - h, m2), rpochhammer(1, m3),
                 rpochhammer(1 + v, m3), rpochhammer(1, m2 + 2 * m3),
                 pochhammer(1 + k, m3), rpochhammer(1 - v, k)};
            break;
          default:
            f = {rpochhammer(1 + v, m1), rpochhammer(1 - v - h, m2), rpochhammer(1, m3),
                 rpochhammer(1 + v, m3), rpochhammer(1, m2 + 2 * m3),
                 pochhammer(1 + v + k, m3), rpochhammer(1, k)};
            break;
        }
      }
      SignedLog c;
      for (const auto& x : f) c *= x;
      if (c.sign == 0) continue;
      if (kind_ == SeriesKind::ordinary && ((m1 + (r == 3 ? m3 : 0)) & 1)) c.sign = -c.sign;
      out.terms.push_back({{m1, m2, m3}, c.sign, c.log_abs});
    }
  }
  return out;
}

const JSeries::Layer& JSeries::layer(int L) const {
  std::lock_guard<std::mutex> lock(mu_);
  while (static_cast<int>(layers_.size()) <= L)
    layers_.push_back(std::make_unique<Layer>(build_layer(static_cast<int>(layers_.size()))));
  return *layers_[L];
}

JSeries::Eval JSeries::run(const SymmetricPoint& t, int fixed_layers) const {
  const int r = id_.rank;
  if (t.rank() != r) throw UsageError("point has the wrong number of coordinates");
  std::array<double, 3> logt{}, sgn{1, 1, 1};
  std::array<bool, 3> zero{};
  for (int i = 0; i < r; ++i) {
    const double ti = t[i];
    const bool integral = lead_[i] == std::floor(lead_[i]);
    if (!std::isfinite(ti)) throw DomainError("non-finite coordinate");
    if (ti > 0) {
      logt[i] = std::log(ti);
    } else if (!integral) {
      throw DomainError(id_.name() + " needs t" + std::to_string(i + 1) +
                        " > 0 (non-integer power), got " + fmt(ti));
    } else if (ti == 0) {
      zero[i] = true;
    } else {
      logt[i] = std::log(-ti);
      sgn[i] = -1;
    }
  }
  double partner_factor = 1.0;
  if (id_.partner) {
    if (!(t[r - 1] > 0))
      throw DomainError(id_.name() + " needs t" + std::to_string(r) + " > 0");
    partner_factor = std::pow(t[r - 1], -p_.nu);
  }

  // Neumaier-compensated running sum.
  double sum = 0.0, comp = 0.0, rounding = 0.0;
  long work = 0;
  std::vector<double> masses;
  int below = 0;
  const int last = fixed_layers >= 0 ? fixed_layers : p_.max_degree;
  int L = 0;
  bool converged = false;
  for (; L <= last; ++L) {
    double mass = 0.0;
    for (const auto& term : layer(L).terms) {
      double arg = term.log_c, spread = std::abs(term.log_c);
      int s = term.sign;
      bool skip = false;
      for (int i = 0; i < r; ++i) {
        const double e = lead_[i] + term.m[i];
        if (zero[i]) {
          if (e > 0) { skip = true; break; }
          if (e < 0) throw DomainError(id_.name() + ": negative power of a zero coordinate");
          continue;
        }
        arg += e * logt[i];
        spread += std::abs(e * logt[i]);
        if (sgn[i] < 0 && (static_cast<long>(e) & 1)) s = -s;
      }
      if (skip) continue;
      const double val = s * std::exp(arg);
      if (!std::isfinite(val))
        throw NoConvergenceError(id_.name() + ": term overflow at layer " + std::to_string(L),
                                 (sum + comp) * partner_factor, work);
      ++work;
      const double y = sum + val;
      comp += std::abs(sum) >= std::abs(val) ? (sum - y) + val : (val - y) + sum;
      sum = y;
      mass += std::abs(val);
      rounding += std::abs(val) * kEps * (4.0 + spread);
    }
    masses.push_back(mass);
    if (fixed_layers < 0) {
      const double partial = std::abs(sum + comp);
      below = mass <= p_.tol * partial ? below + 1 : 0;
      if (below >= 3 && L >= 3) {
        converged = true;
        break;
      }
    }
  }
  if (fixed_layers < 0 && !converged) {
    std::ostringstream os;
    os << id_.name() << " did not converge within degree " << p_.max_degree
       << " (last layer mass " << masses.back() << ", partial " << (sum + comp) << ")";
    throw NoConvergenceError(os.str(), (sum + comp) * partner_factor, work);
  }
  const int used = std::min(L, last);
  // Tail bound: largest of the last three layer masses, inflated by a
  // geometric factor estimated from the latest nonzero ratio.
  double recent = 0.0, q = 0.0;
  const int nm = static_cast<int>(masses.size());
  for (int i = std::max(0, nm - 3); i < nm; ++i) recent = std::max(recent, masses[i]);
  for (int i = nm - 1; i >= 1; --i) {
    if (masses[i] > 0 && masses[i - 1] > 0) {
      q = masses[i] / masses[i - 1];
      break;
    }
  }
  q = std::min(q, 0.9);
  const double tail = recent / (1.0 - q);
  Eval out;
  out.value = (sum + comp) * partner_factor;
  out.err = (tail + rounding) * std::abs(partner_factor);
  out.work = work;
  out.layers = used;
  return out;
}

EvalResult JSeries::operator()(const SymmetricPoint& t) const {
  const Eval e = run(t, -1);
  return {e.value, e.err, e.work};
}

EvalResult JSeries::truncated(const SymmetricPoint& t, int layers) const {
  const Eval e = run(t, layers);
  return {e.value, e.err, e.work};
}

int JSeries::layers_needed(const SymmetricPoint& t) const { return run(t, -1).layers; }

EvalResult solution(const SolutionId& id, const SeriesParams& p, const SymmetricPoint& t,
                    SeriesKind kind) {
  return JSeries(id, p, kind)(t);
}

EvalResult j2(int j, const SeriesParams& p, const SymmetricPoint& t, SeriesKind kind) {
  if (t.rank() != 2) throw UsageError("j2 needs (t1, t2)");
  return solution({2, j, false}, p, t, kind);
}

EvalResult j3(int j, const SeriesParams& p, const SymmetricPoint& t, SeriesKind kind) {
  if (t.rank() != 3) throw UsageError("j3 needs (t1, t2, t3)");
  return solution({3, j, false}, p, t, kind);
}

// ---------------------------------------------------------------------------
// Coefficients and K-series

namespace {

double gamma_checked(double x, double guard) {
  check_generic(x, guard, "Gamma argument");
  return std::tgamma(x);
}

std::array<double, 4> a3(double v, double d, double guard) {
  const double h = d / 2.0;
  const double pre = std::pow(2.0 * M_PI, 3.0 * h);
  auto g = [&](double x) { return gamma_checked(x, guard); };
  return {pre * g(-v) * g(-v - h) * g(-v - d), pre * g(-v) * g(-v - h) * g(v + d),
          pre * g(-v) * g(v + h) * g(v), pre * g(-v) * g(v + h) * g(-v)};
}

}  // namespace

std::array<double, 4> coeffs2(double nu, double d, double pole_guard) {
  const double h = d / 2.0;
  const double pre = std::pow(2.0 * M_PI, h);
  auto g = [&](double x) { return gamma_checked(x, pole_guard); };
  return {pre * g(-nu) * g(-nu - h), pre * g(-nu) * g(nu + h), pre * g(nu) * g(nu - h),
          pre * g(nu) * g(-nu + h)};
}

CoefficientTable coeffs3(double nu, double d, double pole_guard) {
  CoefficientTable t;
  t.nu = nu;
  t.d = d;
  t.a = a3(nu, d, pole_guard);
  t.b = a3(-nu, d, pole_guard);
  return t;
}

namespace {

EvalResult combine(const std::vector<std::pair<double, SolutionId>>& parts,
                   const SeriesParams& p, const SymmetricPoint& t) {
  EvalResult out;
  for (const auto& [c, id] : parts) {
    const EvalResult e = JSeries(id, p, SeriesKind::modified)(t);
    out.value += c * e.value;
    out.err += std::abs(c) * e.err;
    out.work += e.work;
  }
  return out;
}

void require_positive(const SymmetricPoint& t) {
  for (int i = 0; i < t.rank(); ++i)
    if (!(t[i] > 0))
      throw DomainError("K-series needs all t_i > 0; t" + std::to_string(i + 1) + " = " +
                        fmt(t[i]));
}

}  // namespace

EvalResult k2_series(const SeriesParams& p, const SymmetricPoint& t) {
  if (t.rank() != 2) throw UsageError("k2_series needs (t1, t2)");
  require_positive(t);
  const auto c = coeffs2(p.nu, p.d, p.pole_guard);
  return combine({{c[0], {2, 1, false}},
                  {c[1], {2, 2, false}},
                  {c[2], {2, 1, true}},
                  {c[3], {2, 2, true}}},
                 p, t);
}

EvalResult k3_series(const SeriesParams& p, const SymmetricPoint& t) {
  if (t.rank() != 3) throw UsageError("k3_series needs (t1, t2, t3)");
  require_positive(t);
  const auto tab = coeffs3(p.nu, p.d, p.pole_guard);
  std::vector<std::pair<double, SolutionId>> parts;
  for (int j = 1; j <= 4; ++j) parts.push_back({tab.a[j - 1], {3, j, false}});
  for (int j = 1; j <= 4; ++j) parts.push_back({tab.b[j - 1], {3, j, true}});
  return combine(parts, p, t);
}

// ---------------------------------------------------------------------------
// Residuals

TFunction fixed_truncation(std::shared_ptr<const JSeries> s, const SymmetricPoint& t0) {
  const int layers = s->layers_needed(t0) + 6;
  return [s, layers](const SymmetricPoint& t) { return s->truncated(t, layers).value; };
}

namespace {

constexpr double kW1[4] = {1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12};  // offsets -2,-1,1,2
constexpr int kOff1[4] = {-2, -1, 1, 2};
constexpr double kW2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

// Step for a coordinate: max(1e-3 |v|, 1e-4), kept inside (0, v) when v > 0
// so singular powers are never crossed.
double fd_step(double v) {
  double h = std::max(1e-3 * std::abs(v), 1e-4);
  if (v > 0) h = std::min(h, v / 4.0);
  if (h < 1e-8) throw DomainError("finite-difference step underflow near the domain boundary");
  return h;
}

struct Derivs {
  double f0 = 0.0;
  std::array<double, 3> d1{};
  std::array<std::array<double, 3>, 3> d2{};
};

template <class F>
Derivs derivs_once(const F& f, std::vector<double> x, const std::vector<double>& h,
                   bool mixed) {
  const int r = static_cast<int>(x.size());
  Derivs out;
  out.f0 = f(x);
  auto at = [&](int i, double di, int j, double dj) {
    std::vector<double> y = x;
    y[i] += di;
    if (j >= 0) y[j] += dj;
    return f(y);
  };
  for (int i = 0; i < r; ++i) {
    double s1 = 0.0, s2 = kW2[2] * out.f0;
    for (int a = 0; a < 4; ++a) {
      const double v = at(i, kOff1[a] * h[i], -1, 0.0);
      s1 += kW1[a] * v;
      s2 += kW2[a < 2 ? a : a + 1] * v;
    }
    out.d1[i] = s1 / h[i];
    out.d2[i][i] = s2 / (h[i] * h[i]);
  }
  for (int i = 0; i < r && mixed; ++i) {
    for (int j = i + 1; j < r; ++j) {
      double s = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          s += kW1[a] * kW1[b] * at(i, kOff1[a] * h[i], j, kOff1[b] * h[j]);
      out.d2[i][j] = out.d2[j][i] = s / (h[i] * h[j]);
    }
  }
  return out;
}

// Fourth-order central differences, Richardson-extrapolated once.
template <class F>
Derivs derivs(const F& f, const std::vector<double>& x, bool mixed) {
  const int r = static_cast<int>(x.size());
  std::vector<double> h(r), h2(r);
  for (int i = 0; i < r; ++i) {
    h[i] = fd_step(x[i]);
    h2[i] = h[i] / 2;
  }
  auto g = [&](const std::vector<double>& y) { return f(y); };
  Derivs a = derivs_once(g, x, h, mixed);
  Derivs b = derivs_once(g, x, h2, mixed);
  Derivs out;
  out.f0 = b.f0;
  for (int i = 0; i < r; ++i) {
    out.d1[i] = (16 * b.d1[i] - a.d1[i]) / 15;
    for (int j = 0; j < r; ++j) {
      if (!mixed && i != j) continue;
      out.d2[i][j] = (16 * b.d2[i][j] - a.d2[i][j]) / 15;
    }
  }
  return out;
}

double tcoord(const std::vector<double>& t, int p) {
  if (p == 0) return 1.0;
  if (p < 0 || p > static_cast<int>(t.size())) return 0.0;
  return t[p - 1];
}

double apply_z(int k, const Derivs& dv, const SeriesParams& p, const std::vector<double>& t,
               int constant_sign) {
  const int r = static_cast<int>(t.size());
  double s = 0.0;
  for (int i = 1; i <= r; ++i) {
    for (int j = 1; j <= r; ++j) {
      double a = 0.0;
      if (i >= k && j >= k) a = tcoord(t, i + j - k);
      else if (i < k && j < k && i + j >= k) a = -tcoord(t, i + j - k);
      s += a * dv.d2[i - 1][j - 1];
    }
  }
  s += (p.nu + 1 + (r - k) * p.d / 2.0) * dv.d1[k - 1];
  if (k == 1) s += constant_sign * dv.f0;
  return s;
}

}  // namespace

std::vector<double> z_residuals(const TFunction& f, const SeriesParams& p,
                                const SymmetricPoint& t, int constant_sign) {
  const int r = t.rank();
  if (r < 1 || r > 3) throw UsageError("z_residual needs rank 1 to 3");
  auto g = [&](const std::vector<double>& y) { return f(SymmetricPoint{y}); };
  const Derivs dv = derivs(g, t.t, true);
  std::vector<double> out;
  for (int k = 1; k <= r; ++k) out.push_back(apply_z(k, dv, p, t.t, constant_sign));
  return out;
}

double z_residual(int k, const TFunction& f, const SeriesParams& p, const SymmetricPoint& t,
                  int constant_sign) {
  if (k < 1 || k > t.rank()) throw UsageError("operator index out of range");
  return z_residuals(f, p, t, constant_sign)[k - 1];
}

double muirhead_residual(int i, const XFunction& f, const SeriesParams& p,
                         std::span<const double> x, int constant_sign) {
  const int r = static_cast<int>(x.size());
  if (r < 1 || r > 3) throw UsageError("muirhead_residual needs rank 1 to 3");
  if (i < 1 || i > r) throw UsageError("operator index out of range");
  for (int a = 0; a < r; ++a)
    for (int b = a + 1; b < r; ++b)
      if (std::abs(x[a] - x[b]) <= 1e-3)
        throw IllConditionedError("eigenvalues " + fmt(x[a]) + " and " + fmt(x[b]) +
                                  " are too close for the Muirhead operator");
  std::vector<double> xv(x.begin(), x.end());
  auto g = [&](const std::vector<double>& y) { return f(std::span<const double>(y)); };
  const Derivs dv = derivs(g, xv, false);
  const int c = i - 1;
  double s = xv[c] * dv.d2[c][c] + (p.nu + 1) * dv.d1[c] + constant_sign * dv.f0;
  for (int j = 0; j < r; ++j) {
    if (j == c) continue;
    s += p.d / 2.0 * (xv[c] * dv.d1[c] - xv[j] * dv.d1[j]) / (xv[c] - xv[j]);
  }
  return s;
}

}  // namespace conebessel
