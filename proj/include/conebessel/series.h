#pragma once

// J-Bessel series of ranks 2 and 3 in elementary symmetric coordinates, the
// K-series combinations built from them, and finite-difference residuals of
// the Bessel-Muirhead operators B_i and their t-space forms Z_k.

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "conebessel/errors.h"

namespace conebessel {

// sign in {-1, 0, +1}; value = sign * exp(log_abs).
struct SignedLog {
  int sign = 1;
  double log_abs = 0.0;

  double value() const;
  SignedLog& operator*=(const SignedLog& o);
  SignedLog& operator/=(const SignedLog& o);
};

// Signed log of Gamma(x); throws DomainError at a pole.
SignedLog log_gamma(double x);

// (a)_k = a(a+1)...(a+k-1); k < 0 extends by Gamma(a+k)/Gamma(a).
// A zero factor gives sign 0.
SignedLog pochhammer(double a, int k);

// 1/(a)_k read as Gamma(a)/Gamma(a+k): zero (sign 0) when a+k is a
// non-positive integer and a is not. Throws DomainError if a itself makes
// the reciprocal infinite.
SignedLog rpochhammer(double a, int k);

struct SeriesParams {
  double nu = 0.0;
  double d = 1.0;
  double tol = 1e-13;
  int max_degree = 200;
  double pole_guard = 1e-6;
};

struct SymmetricPoint {
  std::vector<double> t;

  int rank() const { return static_cast<int>(t.size()); }
  double operator[](int i) const { return t[i]; }
};

SymmetricPoint elem_sym(std::span<const double> x);
SymmetricPoint elem_sym(std::initializer_list<double> x);

struct EvalResult {
  double value = 0.0;
  double err = 0.0;
  long work = 0;
};

// ordinary: the displayed series with signs (-1)^{m1} / (-1)^{m1+m3}; they
// solve B_i f = 0 with the constant term +1.
// modified: all signs dropped; solves the system with constant term -1,
// which is the one satisfied by the K integral.
enum class SeriesKind { ordinary, modified };

// One of the 2^r fundamental solutions: J^[r,j]_nu or, if partner is set,
// t_r^{-nu} J^[r,j]_{-nu}.
struct SolutionId {
  int rank = 2;
  int j = 1;
  bool partner = false;

  std::string name() const;
};

std::vector<SolutionId> all_solutions(int rank);

// A series with its coefficient layers cached. Evaluation is thread safe;
// layers are built on demand under a lock.
class JSeries {
 public:
  JSeries(SolutionId id, SeriesParams p, SeriesKind kind = SeriesKind::ordinary);

  EvalResult operator()(const SymmetricPoint& t) const;
  // Sum exactly the layers 0..layers (no stopping rule, no convergence
  // error). Used for finite differences, where every stencil point must be
  // the same polynomial-like truncation.
  EvalResult truncated(const SymmetricPoint& t, int layers) const;

  const SolutionId& id() const { return id_; }
  const SeriesParams& params() const { return p_; }
  SeriesKind kind() const { return kind_; }

  // Layer count used by the last converged evaluation at t.
  int layers_needed(const SymmetricPoint& t) const;

 private:
  struct Term {
    std::array<int, 3> m;
    int sign;
    double log_c;
  };
  struct Layer {
    std::vector<Term> terms;
  };
  struct Eval;

  const Layer& layer(int L) const;
  Layer build_layer(int L) const;
  Eval run(const SymmetricPoint& t, int fixed_layers) const;

  SolutionId id_;
  SeriesParams p_;
  SeriesKind kind_;
  double order_;                   // nu of the inner series (-nu for partners)
  std::array<double, 3> lead_{};   // leading exponents of the inner series
  mutable std::mutex mu_;
  mutable std::vector<std::unique_ptr<Layer>> layers_;
};

EvalResult j2(int j, const SeriesParams& p, const SymmetricPoint& t,
              SeriesKind kind = SeriesKind::ordinary);
EvalResult j3(int j, const SeriesParams& p, const SymmetricPoint& t,
              SeriesKind kind = SeriesKind::ordinary);
EvalResult solution(const SolutionId& id, const SeriesParams& p,
                    const SymmetricPoint& t, SeriesKind kind = SeriesKind::ordinary);

// Throws NonGenericParameterError if x is within guard of 0, -1, -2, ...
void check_generic(double x, double guard, const std::string& what);

// Rank-2 K coefficients, ordered to match the rank-3 table:
// [0] J^[2,1]_nu, [1] J^[2,2]_nu, [2] t2^{-nu} J^[2,1]_{-nu},
// [3] t2^{-nu} J^[2,2]_{-nu}.
std::array<double, 4> coeffs2(double nu, double d, double pole_guard = 1e-6);

struct CoefficientTable {
  double nu = 0.0;
  double d = 1.0;
  std::array<double, 4> a{};
  std::array<double, 4> b{};
};
CoefficientTable coeffs3(double nu, double d, double pole_guard = 1e-6);

EvalResult k2_series(const SeriesParams& p, const SymmetricPoint& t);
EvalResult k3_series(const SeriesParams& p, const SymmetricPoint& t);

using TFunction = std::function<double(const SymmetricPoint&)>;
using XFunction = std::function<double(std::span<const double>)>;

// A J-solution as a function of t, truncated at the layer count needed at
// the centre point t0 plus a margin, so finite differences see one fixed
// analytic function.
TFunction fixed_truncation(std::shared_ptr<const JSeries> s, const SymmetricPoint& t0);

// Z_k f at t. constant_sign is the sign of the zeroth-order term of Z_1.
double z_residual(int k, const TFunction& f, const SeriesParams& p,
                  const SymmetricPoint& t, int constant_sign = +1);
std::vector<double> z_residuals(const TFunction& f, const SeriesParams& p,
                                const SymmetricPoint& t, int constant_sign = +1);

// B_i f at x, f a function of the eigenvalues.
double muirhead_residual(int i, const XFunction& f, const SeriesParams& p,
                         std::span<const double> x, int constant_sign = +1);

}  // namespace conebessel
