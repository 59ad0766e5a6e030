#include "conebessel/algebra.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace conebessel {

namespace {

using Mat3 = Eigen::Matrix3cd;
using cd = std::complex<double>;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr std::array<std::pair<int, int>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};

void require_concrete(const AlgebraDescriptor& a) {
  if (!a.concrete()) {
    std::ostringstream os;
    os << "no concrete algebra for rank " << a.rank << ", d = " << a.d;
    throw UnsupportedAlgebraError(os.str());
  }
}

void require_same(const Element& x, const Element& y) {
  if (!(x.algebra() == y.algebra()))
    throw UsageError("operands belong to different algebras");
}

int imag_parts(const AlgebraDescriptor& a) { return a.d == 2.0 ? 1 : 0; }

Mat3 to_mat3(const Element& x) {
  const auto& a = x.algebra();
  require_concrete(a);
  Mat3 m = Mat3::Zero();
  const int r = a.rank;
  for (int i = 0; i < r; ++i) m(i, i) = x[i];
  int k = r;
  const int im = imag_parts(a);
  for (auto [i, j] : kPairs) {
    if (j >= r) continue;
    cd v(x[k] * kInvSqrt2, im ? x[k + 1] * kInvSqrt2 : 0.0);
    m(i, j) = v;
    m(j, i) = std::conj(v);
    k += 1 + im;
  }
  return m;
}

Element from_mat3(const AlgebraDescriptor& a, const Mat3& m) {
  Element x(a);
  const int r = a.rank;
  for (int i = 0; i < r; ++i) x[i] = m(i, i).real();
  int k = r;
  const int im = imag_parts(a);
  for (auto [i, j] : kPairs) {
    if (j >= r) continue;
    // Hermitian part of the (i,j) entry.
    cd v = 0.5 * (m(i, j) + std::conj(m(j, i)));
    x[k] = kSqrt2 * v.real();
    if (im) x[k + 1] = kSqrt2 * v.imag();
    k += 1 + im;
  }
  return x;
}

Element basis_element(const AlgebraDescriptor& a, int k) {
  Element b(a);
  b[k] = 1.0;
  return b;
}

double herm_det(const Mat3& m, int r) {
  if (r == 1) return m(0, 0).real();
  if (r == 2) return (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)).real();
  cd d = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  return d.real();
}

double principal_minors2(const Mat3& m, int r) {
  double s = 0.0;
  for (auto [i, j] : kPairs) {
    if (j >= r) continue;
    s += (m(i, i) * m(j, j) - m(i, j) * m(j, i)).real();
  }
  return s;
}

// Cyclic Jacobi on the leading r x r block of a Hermitian matrix.
void jacobi(Mat3& a, Mat3& v, int r) {
  v.setIdentity();
  double fro = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) fro += std::norm(a(i, j));
  fro = std::sqrt(fro);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < r; ++p)
      for (int q = p + 1; q < r; ++q) off += 2.0 * std::norm(a(p, q));
    if (std::sqrt(off) <= 1e-14 * fro) return;
    for (int p = 0; p < r; ++p) {
      for (int q = p + 1; q < r; ++q) {
        const double g = std::abs(a(p, q));
        if (g == 0.0) continue;
        const cd phase = a(p, q) / g;
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * g);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Mat3 rot = Mat3::Identity();
        rot(p, p) = c;
        rot(p, q) = s;
        rot(q, p) = -s * std::conj(phase);
        rot(q, q) = c * std::conj(phase);
        a = (rot.adjoint() * a * rot).eval();
        a(p, q) = a(q, p) = 0.0;
        v = (v * rot).eval();
      }
    }
  }
}

bool near_zero(const Element& x, double scale) {
  return x.norm() <= 1e-10 * (1.0 + scale);
}

void require_idempotent(const Element& c) {
  const double res = (square(c) - c).norm();
  if (res > 1e-10) {
    std::ostringstream os;
    os << "not an idempotent: |c o c - c| = " << res;
    throw DomainError(os.str());
  }
  if (std::abs(trace(c) - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "idempotent is not primitive: tr(c) = " << trace(c);
    throw DomainError(os.str());
  }
}

}  // namespace

AlgebraDescriptor AlgebraDescriptor::make(int rank, double d) {
  if (rank < 1 || rank > 3) throw UsageError("rank must be 1, 2 or 3");
  if (!(d > 0.0) || !std::isfinite(d)) throw UsageError("d must be positive");
  return AlgebraDescriptor{rank, d};
}

int AlgebraDescriptor::dim() const {
  return rank + static_cast<int>(std::lround(rank * (rank - 1) * d / 2.0));
}

bool AlgebraDescriptor::concrete() const {
  if (rank == 1) return true;
  return (rank == 2 || rank == 3) && (d == 1.0 || d == 2.0);
}

Element::Element(const AlgebraDescriptor& alg) : alg_(alg), n_(0) {
  require_concrete(alg);
  n_ = alg.dim();
}

Element::Element(const AlgebraDescriptor& alg, std::span<const double> coords)
    : Element(alg) {
  if (static_cast<int>(coords.size()) != n_)
    throw UsageError("coordinate count does not match algebra dimension");
  std::copy(coords.begin(), coords.end(), c_.begin());
}

Element::Element(const AlgebraDescriptor& alg, std::initializer_list<double> coords)
    : Element(alg, std::span<const double>(coords.begin(), coords.size())) {}

double Element::norm() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += c_[i] * c_[i];
  return std::sqrt(s);
}

Element& Element::operator+=(const Element& o) {
  require_same(*this, o);
  for (int i = 0; i < n_; ++i) c_[i] += o.c_[i];
  return *this;
}

Element& Element::operator-=(const Element& o) {
  require_same(*this, o);
  for (int i = 0; i < n_; ++i) c_[i] -= o.c_[i];
  return *this;
}

Element& Element::operator*=(double s) {
  for (int i = 0; i < n_; ++i) c_[i] *= s;
  return *this;
}

Element operator+(Element a, const Element& b) { return a += b; }
Element operator-(Element a, const Element& b) { return a -= b; }
Element operator-(Element a) { return a *= -1.0; }
Element operator*(double s, Element a) { return a *= s; }
Element operator*(Element a, double s) { return a *= s; }

double inner(const Element& x, const Element& y) {
  require_same(x, y);
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

HermMatrix to_matrix(const Element& x) {
  const int r = x.algebra().rank;
  return to_mat3(x).topLeftCorner(r, r);
}

Element from_matrix(const AlgebraDescriptor& alg, const HermMatrix& m) {
  require_concrete(alg);
  if (m.rows() != alg.rank || m.cols() != alg.rank)
    throw UsageError("matrix size does not match rank");
  Mat3 full = Mat3::Zero();
  full.topLeftCorner(alg.rank, alg.rank) = m;
  return from_mat3(alg, full);
}

Element identity(const AlgebraDescriptor& alg) {
  Element e(alg);
  for (int i = 0; i < alg.rank; ++i) e[i] = 1.0;
  return e;
}

Element frame_idempotent(const AlgebraDescriptor& alg, int i) {
  if (i < 0 || i >= alg.rank) throw UsageError("frame index out of range");
  return basis_element(alg, i);
}

Element diagonal(const AlgebraDescriptor& alg, std::span<const double> diag) {
  if (static_cast<int>(diag.size()) != alg.rank)
    throw UsageError("diagonal length does not match rank");
  Element x(alg);
  for (int i = 0; i < alg.rank; ++i) x[i] = diag[i];
  return x;
}

Element diagonal(const AlgebraDescriptor& alg, std::initializer_list<double> diag) {
  return diagonal(alg, std::span<const double>(diag.begin(), diag.size()));
}

Element jordan_mul(const Element& x, const Element& y) {
  require_same(x, y);
  const Mat3 a = to_mat3(x);
  const Mat3 b = to_mat3(y);
  return from_mat3(x.algebra(), 0.5 * (a * b + b * a));
}

Element square(const Element& x) {
  const Mat3 a = to_mat3(x);
  return from_mat3(x.algebra(), a * a);
}

double trace(const Element& x) {
  require_concrete(x.algebra());
  double s = 0.0;
  for (int i = 0; i < x.algebra().rank; ++i) s += x[i];
  return s;
}

double det(const Element& x) { return herm_det(to_mat3(x), x.algebra().rank); }

double a2(const Element& x) {
  return principal_minors2(to_mat3(x), x.algebra().rank);
}

std::vector<double> char_coeffs(const Element& x) {
  const Mat3 m = to_mat3(x);
  const int r = x.algebra().rank;
  if (r == 1) return {x[0]};
  if (r == 2) return {trace(x), herm_det(m, 2)};
  return {trace(x), principal_minors2(m, 3), herm_det(m, 3)};
}

Element inverse(const Element& x) {
  const auto& alg = x.algebra();
  const int r = alg.rank;
  const auto a = char_coeffs(x);
  const double dt = a.back();
  const double scale = std::pow(x.norm(), r);
  if (!(std::abs(dt) > 1e-12 * scale) || scale == 0.0) {
    std::ostringstream os;
    os << "element is singular: |det| = " << std::abs(dt);
    throw SingularElementError(os.str(), std::abs(dt));
  }
  const Element e = identity(alg);
  if (r == 1) return (1.0 / dt) * e;
  if (r == 2) return (1.0 / dt) * (a[0] * e - x);
  return (1.0 / dt) * (square(x) - a[0] * x + a[1] * e);
}

SpectralDecomposition spectral(const Element& x) {
  const auto& alg = x.algebra();
  const int r = alg.rank;
  Mat3 a = to_mat3(x);
  Mat3 v;
  jacobi(a, v, r);
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });
  SpectralDecomposition out;
  for (int k : order) {
    out.eigenvalues.push_back(a(k, k).real());
    Mat3 p = Mat3::Zero();
    p.topLeftCorner(r, r) =
        v.col(k).head(r) * v.col(k).head(r).adjoint();
    out.frame.push_back(from_mat3(alg, p));
  }
  return out;
}

Element sqrt_cone(const Element& x) {
  const auto sd = spectral(x);
  const double lmin = sd.eigenvalues.back();
  if (!(lmin > 1e-15 * std::max(1.0, x.norm()))) {
    std::ostringstream os;
    os << "element is not in the open cone: smallest eigenvalue " << lmin;
    throw DomainError(os.str());
  }
  Element out(x.algebra());
  for (size_t i = 0; i < sd.frame.size(); ++i)
    out += std::sqrt(sd.eigenvalues[i]) * sd.frame[i];
  return out;
}

Element quadratic_rep(const Element& x, const Element& y) {
  require_same(x, y);
  return 2.0 * jordan_mul(x, jordan_mul(x, y)) - jordan_mul(square(x), y);
}

Eigen::MatrixXd lmul_matrix(const Element& x) {
  const int n = x.size();
  Eigen::MatrixXd m(n, n);
  for (int k = 0; k < n; ++k) {
    const Element col = jordan_mul(x, basis_element(x.algebra(), k));
    for (int i = 0; i < n; ++i) m(i, k) = col[i];
  }
  return m;
}

PeirceSplit peirce_split(const Element& x, const Element& c) {
  require_same(x, c);
  require_idempotent(c);
  Element a1 = quadratic_rep(c, x);
  Element a0 = quadratic_rep(peirce_unit(c), x);
  Element ah = x - a1 - a0;
  return PeirceSplit{a0, ah, a1, c};
}

Element peirce_idempotent(const AlgebraDescriptor& alg) {
  return frame_idempotent(alg, alg.rank - 1);
}

Element peirce_unit(const Element& c) { return identity(c.algebra()) - c; }

double det0(const Element& z, const Element& c) { return det(z + c); }

Element inverse0(const Element& z, const Element& c) {
  return inverse(z + c) - c;
}

Element rho_apply(const Element& u, const Element& xi) {
  return rho_apply(u, xi, peirce_idempotent(u.algebra()));
}

Element rho_apply(const Element& u, const Element& xi, const Element& c) {
  require_same(u, xi);
  require_same(u, c);
  require_idempotent(c);
  const Element e0 = peirce_unit(c);
  if (!near_zero(u - quadratic_rep(e0, u), u.norm()))
    throw DomainError("rho: u is not in A_0");
  const double off = quadratic_rep(c, xi).norm() + quadratic_rep(e0, xi).norm();
  if (off > 1e-10 * (1.0 + xi.norm()))
    throw DomainError("rho: xi is not in A_1/2");
  return 2.0 * jordan_mul(u, xi);
}

Eigen::MatrixXd half_space_basis(const Element& c) {
  require_idempotent(c);
  const Eigen::MatrixXd l = lmul_matrix(c);
  const int n = c.size();
  const Eigen::MatrixXd proj = 4.0 * l * (Eigen::MatrixXd::Identity(n, n) - l);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(proj);
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i) > 0.5) keep.push_back(i);
  Eigen::MatrixXd b(n, keep.size());
  for (size_t k = 0; k < keep.size(); ++k) b.col(k) = es.eigenvectors().col(keep[k]);
  return b;
}

Eigen::MatrixXd rho_matrix(const Element& u, const Element& c) {
  const Eigen::MatrixXd b = half_space_basis(c);
  const int m = static_cast<int>(b.cols());
  const int n = u.size();
  Eigen::MatrixXd out(m, m);
  for (int k = 0; k < m; ++k) {
    Element xi(u.algebra());
    for (int i = 0; i < n; ++i) xi[i] = b(i, k);
    const Element img = rho_apply(u, xi, c);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = img[i];
    out.col(k) = b.transpose() * v;
  }
  return out;
}

double det_rho(const Element& u) {
  return det_rho(u, peirce_idempotent(u.algebra()));
}

double det_rho(const Element& u, const Element& c) {
  return rho_matrix(u, c).partialPivLu().determinant();
}

Element embed_upper_left(const Element& z, const AlgebraDescriptor& target) {
  if (z.algebra().rank != 2 || target.rank != 3 || z.algebra().d != target.d)
    throw UsageError("embedding needs a rank-2 element and a rank-3 target with equal d");
  Mat3 m = to_mat3(z);
  return from_mat3(target, m);
}

std::string to_json(const Element& x) {
  nlohmann::json j;
  j["rank"] = x.algebra().rank;
  j["d"] = x.algebra().d;
  j["coords"] = x.to_vector();
  return j.dump();
}

Element element_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad element json: ") + e.what());
  }
  if (!j.contains("rank") || !j.contains("d") || !j.contains("coords"))
    throw UsageError("element json needs rank, d and coords");
  const auto alg = AlgebraDescriptor::make(j["rank"].get<int>(), j["d"].get<double>());
  const auto coords = j["coords"].get<std::vector<double>>();
  return Element(alg, coords);
}

}  // namespace conebessel
