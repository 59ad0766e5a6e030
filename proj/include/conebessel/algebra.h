#pragma once

// Concrete Euclidean Jordan algebras Herm_r(F), F = R (d = 1) or C (d = 2),
// r <= 3. Elements are stored as coordinates in an orthonormal basis for
// (x, y) = tr(x o y): diagonal units E_ii first, then for each pair i < j
// (ordered (1,2), (1,3), (2,3)) the generator (E_ij + E_ji)/sqrt2 and, for
// d = 2, i(E_ij - E_ji)/sqrt2.

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conebessel/errors.h"

namespace conebessel {

inline constexpr int kMaxDim = 9;

struct AlgebraDescriptor {
  int rank = 3;
  double d = 1.0;

  // Validates rank in {1,2,3} and d > 0.
  static AlgebraDescriptor make(int rank, double d);

  int dim() const;
  bool concrete() const;
  bool operator==(const AlgebraDescriptor& o) const {
    return rank == o.rank && d == o.d;
  }
};

class Element {
 public:
  explicit Element(const AlgebraDescriptor& alg);
  Element(const AlgebraDescriptor& alg, std::span<const double> coords);
  Element(const AlgebraDescriptor& alg, std::initializer_list<double> coords);

  const AlgebraDescriptor& algebra() const { return alg_; }
  int size() const { return n_; }
  double operator[](int i) const { return c_[i]; }
  double& operator[](int i) { return c_[i]; }
  std::span<const double> coords() const { return {c_.data(), size_t(n_)}; }
  std::vector<double> to_vector() const { return {c_.begin(), c_.begin() + n_}; }

  double norm() const;

  Element& operator+=(const Element& o);
  Element& operator-=(const Element& o);
  Element& operator*=(double s);

 private:
  AlgebraDescriptor alg_;
  int n_;
  std::array<double, kMaxDim> c_{};
};

Element operator+(Element a, const Element& b);
Element operator-(Element a, const Element& b);
Element operator-(Element a);
Element operator*(double s, Element a);
Element operator*(Element a, double s);

double inner(const Element& x, const Element& y);

using HermMatrix = Eigen::MatrixXcd;

// Matrix picture (r x r Hermitian) and back. from_matrix drops the
// anti-Hermitian part and, for d = 1, any imaginary part.
HermMatrix to_matrix(const Element& x);
Element from_matrix(const AlgebraDescriptor& alg, const HermMatrix& m);

Element identity(const AlgebraDescriptor& alg);
// Diagonal unit E_ii (0-based i).
Element frame_idempotent(const AlgebraDescriptor& alg, int i);
Element diagonal(const AlgebraDescriptor& alg, std::span<const double> diag);
Element diagonal(const AlgebraDescriptor& alg, std::initializer_list<double> diag);

Element jordan_mul(const Element& x, const Element& y);
Element square(const Element& x);
double trace(const Element& x);
double det(const Element& x);
double a2(const Element& x);

// Coefficients a_1..a_r of the characteristic polynomial
// x^r - a_1 x^{r-1} + ... + (-1)^r a_r e; a_1 = tr, a_r = det.
std::vector<double> char_coeffs(const Element& x);

Element inverse(const Element& x);
Element sqrt_cone(const Element& x);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // descending
  std::vector<Element> frame;
};
SpectralDecomposition spectral(const Element& x);

// P(x)y = 2 x o (x o y) - x^2 o y.
Element quadratic_rep(const Element& x, const Element& y);

// Matrix of L(x) acting on coordinates.
Eigen::MatrixXd lmul_matrix(const Element& x);

struct PeirceSplit {
  Element a0;
  Element a_half;
  Element a1;
  Element c;
};
PeirceSplit peirce_split(const Element& x, const Element& c);

// The last diagonal unit E_rr, the idempotent fixed for the rank-3 Peirce
// picture, and its complement e0 = e - c.
Element peirce_idempotent(const AlgebraDescriptor& alg);
Element peirce_unit(const Element& c);

// Rank-2 calculus inside A_0(c): z lives in A_0, the unit block is c.
double det0(const Element& z, const Element& c);
Element inverse0(const Element& z, const Element& c);

// rho(u) xi = 2 u o xi for u in A_0(c), xi in A_1/2(c).
Element rho_apply(const Element& u, const Element& xi);
Element rho_apply(const Element& u, const Element& xi, const Element& c);

// Orthonormal basis of A_1/2(c), as coordinate columns.
Eigen::MatrixXd half_space_basis(const Element& c);
// Matrix of rho(u) on A_1/2(c) in the basis above.
Eigen::MatrixXd rho_matrix(const Element& u, const Element& c);
double det_rho(const Element& u);
double det_rho(const Element& u, const Element& c);

// Places a rank-2 element in the upper-left block of a rank-3 algebra with
// the same d, i.e. into A_0 of the last diagonal unit.
Element embed_upper_left(const Element& z, const AlgebraDescriptor& target);

std::string to_json(const Element& x);
Element element_from_json(const std::string& text);

}  // namespace conebessel
