#include "conebessel/cone_integral.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/gamma_distribution.hpp>

namespace conebessel {

namespace {

constexpr std::int64_t kBlock = 4096;
constexpr double kXiSpread = 1.5;  // xi proposal covariance relative to the integrand's

void require_concrete(const AlgebraDescriptor& alg) {
  if (!alg.concrete())
    throw UnsupportedAlgebraError("Monte Carlo needs a concrete algebra (d = 1 or 2)");
}

double nr(const AlgebraDescriptor& alg) { return 1.0 + (alg.rank - 1) * alg.d / 2.0; }

Eigen::MatrixXcd lower_factor(const AlgebraDescriptor& alg, std::span<const double> u) {
  const int r = alg.rank;
  if (static_cast<int>(u.size()) != alg.dim()) throw UsageError("wrong number of T parameters");
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(r, r);
  int k = r;
  for (int i = 0; i < r; ++i) t(i, i) = u[i];
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      const double re = u[k++];
      const double im = alg.d == 2 ? u[k++] : 0.0;
      t(j, i) = {re, im};
    }
  }
  return t;
}

// Unit perturbation of parameter k, in the layout of lower_factor.
Eigen::MatrixXcd unit_direction(const AlgebraDescriptor& alg, int k) {
  const int r = alg.rank;
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(r, r);
  if (k < r) {
    e(k, k) = 1.0;
    return e;
  }
  int idx = r;
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      if (idx == k) e(j, i) = 1.0;
      ++idx;
      if (alg.d == 2) {
        if (idx == k) e(j, i) = std::complex<double>(0.0, 1.0);
        ++idx;
      }
    }
  }
  return e;
}

Element basis_element(const AlgebraDescriptor& alg, int k) {
  Element b(alg);
  b[k] = 1.0;
  return b;
}

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double w) {
    n += 1.0;
    const double delta = w - mean;
    mean += delta / n;
    m2 += delta * (w - mean);
  }
};

Moments merge(const Moments& a, const Moments& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  Moments out;
  out.n = a.n + b.n;
  const double delta = b.mean - a.mean;
  out.mean = a.mean + delta * (b.n / out.n);
  out.m2 = a.m2 + b.m2 + delta * delta * (a.n * b.n / out.n);
  return out;
}

McEstimate scaled(McEstimate e, double factor) {
  e.value *= factor;
  e.std_error *= std::abs(factor);
  return e;
}

// Gaussian on A_1/2(c) with covariance kappa (2 B)^-1, B = rho(v).
struct HalfGaussian {
  Eigen::MatrixXd basis;  // n x 2d
  Eigen::MatrixXd b;      // rho(v) in that basis
  Eigen::MatrixXd chol_l; // precision 2B/kappa = L L^T
  double log_norm = 0.0;  // log of the density normalizer

  HalfGaussian(const Element& v, const Element& c, double kappa) {
    basis = half_space_basis(c);
    b = rho_matrix(v, c);
    b = 0.5 * (b + b.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt((2.0 / kappa) * b);
    if (llt.info() != Eigen::Success) throw DomainError("rho(v) is not positive definite");
    chol_l = llt.matrixL();
    const double k = static_cast<double>(b.rows());
    log_norm = -0.5 * k * std::log(2 * std::numbers::pi) +
               chol_l.diagonal().array().log().sum();
  }

  // Draws xi, returns log q(xi) through lq and (B xi, xi) through quad.
  Element draw(SampleStream& rng, const AlgebraDescriptor& alg, double& lq, double& quad) const {
    const int k = static_cast<int>(b.rows());
    Eigen::VectorXd g(k);
    for (int i = 0; i < k; ++i) g[i] = rng.normal();
    const Eigen::VectorXd w = chol_l.transpose().triangularView<Eigen::Upper>().solve(g);
    lq = log_norm - 0.5 * g.squaredNorm();
    quad = w.dot(b * w);
    const Eigen::VectorXd coords = basis * w;
    return Element(alg, std::span<const double>(coords.data(), coords.size()));
  }
};

}  // namespace

Element tt_map(const AlgebraDescriptor& alg, std::span<const double> u) {
  require_concrete(alg);
  const Eigen::MatrixXcd t = lower_factor(alg, u);
  return from_matrix(alg, t * t.adjoint());
}

double tt_log_jacobian(const AlgebraDescriptor& alg, std::span<const double> u) {
  require_concrete(alg);
  const int n = alg.dim();
  const Eigen::MatrixXcd t = lower_factor(alg, u);
  Eigen::MatrixXd jac(n, n);
  for (int k = 0; k < n; ++k) {
    const Eigen::MatrixXcd e = unit_direction(alg, k);
    const Element col = from_matrix(alg, e * t.adjoint() + t * e.adjoint());
    for (int i = 0; i < n; ++i) jac(i, k) = col[i];
  }
  return std::log(std::abs(jac.fullPivLu().determinant()));
}

ConeSampler::ConeSampler(const AlgebraDescriptor& alg, ConeProposal prop)
    : alg_(alg), prop_(std::move(prop)) {
  require_concrete(alg);
  if (prop_.diagonal == ConeProposal::Diagonal::gamma) {
    if (prop_.gamma_s <= (alg.rank - 1) * alg.d / 2.0)
      throw DomainError("gamma proposal needs s > (r-1) d/2");
    if (prop_.gamma_kappa <= 0) throw UsageError("gamma proposal needs kappa > 0");
  }
  if (prop_.centre) {
    if (!(prop_.centre->algebra() == alg)) throw UsageError("proposal centre in another algebra");
    half_ = sqrt_cone(*prop_.centre);
    const int n = alg.dim();
    Eigen::MatrixXd p(n, n);
    for (int k = 0; k < n; ++k) {
      const Element col = quadratic_rep(*half_, basis_element(alg, k));
      for (int i = 0; i < n; ++i) p(i, k) = col[i];
    }
    log_det_centre_map_ = std::log(std::abs(p.fullPivLu().determinant()));
    log_det_centre_ = std::log(det(*prop_.centre));
  }
}

ConeSample ConeSampler::operator()(SampleStream& rng) const {
  const int r = alg_.rank, n = alg_.dim();
  const double log_norm_off = std::log(prop_.sigma_off * std::sqrt(2 * std::numbers::pi));
  const double log_norm_diag = std::log(prop_.sigma_diag * std::sqrt(2 * std::numbers::pi));
  for (;;) {
    std::array<double, kMaxDim> u{};
    double lq = 0.0;
    bool underflow = false;
    for (int i = 0; i < r; ++i) {
      if (prop_.diagonal == ConeProposal::Diagonal::lognormal) {
        const double z = rng.normal();
        u[i] = std::exp(prop_.sigma_diag * z);
        lq += -0.5 * z * z - log_norm_diag - std::log(u[i]);
      } else {
        const double a = prop_.gamma_kappa * (prop_.gamma_s - i * alg_.d / 2.0);
        const double kap = prop_.gamma_kappa;
        boost::random::gamma_distribution<double> gam(a, 1.0 / kap);
        const double g = gam(rng);
        u[i] = std::sqrt(g);
        lq += a * std::log(kap) + (a - 1) * std::log(g) - kap * g - std::lgamma(a) +
              std::log(2 * u[i]);
      }
      if (!(u[i] > 1e-150) || !std::isfinite(u[i])) underflow = true;
    }
    for (int k = r; k < n; ++k) {
      const double p = prop_.sigma_off * rng.normal();
      u[k] = p;
      lq += -0.5 * (p / prop_.sigma_off) * (p / prop_.sigma_off) - log_norm_off;
    }
    if (underflow) continue;
    std::span<const double> us(u.data(), n);
    Element y = tt_map(alg_, us);
    if (half_) y = quadratic_rep(*half_, y);
    const double lw = tt_log_jacobian(alg_, us) + log_det_centre_map_ - lq;
    if (!std::isfinite(lw)) continue;
    double ld = log_det_centre_;
    for (int i = 0; i < r; ++i) ld += 2 * std::log(u[i]);
    return {y, lw, ld};
  }
}

ConeSample sample_cone(const AlgebraDescriptor& alg, SampleStream& rng) {
  return ConeSampler(alg)(rng);
}

McEstimate monte_carlo(std::int64_t n, std::uint64_t seed, const WeightFunction& weight,
                       int threads) {
  if (n < 2) throw UsageError("Monte Carlo needs at least 2 samples");
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::int64_t>(threads, nblocks));

  std::vector<Moments> blocks(nblocks);
  std::vector<std::exception_ptr> errors(nblocks);
  auto work = [&](int w) {
    for (std::int64_t b = w; b < nblocks; b += threads) {
      try {
        Moments m;
        const std::int64_t end = std::min(n, (b + 1) * kBlock);
        for (std::int64_t i = b * kBlock; i < end; ++i) {
          SampleStream rng(seed, static_cast<std::uint64_t>(i));
          const double v = weight(rng);
          if (!std::isfinite(v))
            throw DiagnosticsError("non-finite weight at sample " + std::to_string(i),
                                   static_cast<std::uint64_t>(i));
          m.add(v);
        }
        blocks[b] = m;
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  while (blocks.size() > 1) {
    std::vector<Moments> next;
    for (size_t i = 0; i + 1 < blocks.size(); i += 2) next.push_back(merge(blocks[i], blocks[i + 1]));
    if (blocks.size() % 2) next.push_back(blocks.back());
    blocks.swap(next);
  }
  const Moments& m = blocks.front();
  McEstimate out;
  out.value = m.mean;
  out.std_error = std::sqrt(m.m2 / (m.n - 1)) / std::sqrt(m.n);
  out.n_samples = n;
  out.seed = seed;
  return out;
}

Element k_integral_centre(const AlgebraDescriptor& alg, double nu, const Element& x) {
  const double a = nu - nr(alg);
  const auto sd = spectral(x);
  Element m(alg);
  for (int i = 0; i < alg.rank; ++i) {
    const double xi = std::max(sd.eigenvalues[i], 0.0);
    const double s = std::sqrt(a * a + 4 * xi);
    double lam;
    if (a <= 0) lam = 2.0 / (s - a);
    else lam = (a + s) / (2 * xi);
    m += lam * sd.frame[i];
  }
  return m;
}

McEstimate k_integral_mc(const AlgebraDescriptor& alg, double nu, const Element& x,
                         std::int64_t n, std::uint64_t seed, int threads) {
  require_concrete(alg);
  if (!(x.algebra() == alg)) throw UsageError("x belongs to another algebra");
  if (n < 10000) throw UsageError("k_integral_mc needs n >= 10^4");
  const auto sd = spectral(x);
  const double top = std::max(1.0, std::abs(sd.eigenvalues.front()));
  const double low = sd.eigenvalues.back();
  if (low < -1e-12 * top) throw DomainError("x is outside the closed cone");
  if (low <= 1e-12 * top && nu >= 0)
    throw DivergenceError("boundary x needs nu < 0 for a finite integral");

  ConeProposal prop;
  prop.centre = k_integral_centre(alg, nu, x);
  const ConeSampler sampler(alg, prop);
  const double power = nu - nr(alg);
  auto weight = [&](SampleStream& rng) {
    const ConeSample s = sampler(rng);
    double tri;
    try {
      tri = trace(inverse(s.y));
    } catch (const SingularElementError&) {
      return 0.0;
    }
    return std::exp(-tri - inner(x, s.y) + power * s.log_det + s.log_weight);
  };
  return monte_carlo(n, seed, weight, threads);
}

double gamma_cone(const AlgebraDescriptor& alg, double s) {
  const double d = alg.d;
  const int r = alg.rank;
  if (s <= (r - 1) * d / 2.0) throw DomainError("gamma_cone needs s > (r-1) d/2");
  const double n = r + r * (r - 1) * d / 2.0;
  double out = std::pow(2 * std::numbers::pi, (n - r) / 2.0);
  for (int j = 0; j < r; ++j) out *= std::tgamma(s - j * d / 2.0);
  if (!std::isfinite(out)) throw DomainError("gamma_cone overflow");
  return out;
}

McEstimate gamma_cone_mc(const AlgebraDescriptor& alg, double s, std::int64_t n,
                         std::uint64_t seed, int threads) {
  require_concrete(alg);
  ConeProposal prop;
  prop.diagonal = ConeProposal::Diagonal::gamma;
  prop.gamma_s = s;
  const ConeSampler sampler(alg, prop);
  const double power = s - nr(alg);
  auto weight = [&](SampleStream& rng) {
    const ConeSample c = sampler(rng);
    return std::exp(-trace(c.y) + power * c.log_det + c.log_weight);
  };
  return monte_carlo(n, seed, weight, threads);
}

McEstimate k3_boundary_semi_analytic(double nu, double d, double x1, double x2, std::int64_t n,
                                     std::uint64_t seed, int threads) {
  if (nu >= 0) throw DivergenceError("boundary integral needs nu < 0");
  if (!(x1 > 0 && x2 > 0)) throw DomainError("x1 and x2 must be positive");
  const auto alg2 = AlgebraDescriptor::make(2, d);
  require_concrete(alg2);
  const auto est = k_integral_mc(alg2, nu + d / 2, diagonal(alg2, {x1, x2}), n, seed, threads);
  return scaled(est, std::pow(2 * std::numbers::pi, d) * std::tgamma(-nu));
}

Element boundary_v(const Element& z, double t, const Element& c) {
  if (!(t > 0)) throw DomainError("boundary_v needs t > 0");
  const double dz = det0(z, c);
  if (!(dz > 0)) throw DomainError("z is not in the cone of A_0(c)");
  const double tz = trace(z);
  return (tz / (2 * t * dz)) * inverse0(z, c) - (1.0 / (2 * t * dz)) * peirce_unit(c);
}

double gaussian_half_exact(const Element& v, const Element& c) {
  const double db = det_rho(v, c);
  if (!(db > 0)) throw DomainError("rho(v) is not positive definite");
  return std::pow(std::numbers::pi, v.algebra().d) / std::sqrt(db);
}

McEstimate gaussian_half_mc(const Element& v, const Element& c, std::int64_t n,
                            std::uint64_t seed, int threads) {
  const HalfGaussian g(v, c, kXiSpread);
  auto weight = [&](SampleStream& rng) {
    double lq, quad;
    g.draw(rng, v.algebra(), lq, quad);
    return std::exp(-quad - lq);
  };
  return monte_carlo(n, seed, weight, threads);
}

McEstimate k3_boundary_direct(double nu, double d, double x1, double x2, std::int64_t n,
                              std::uint64_t seed, int threads) {
  if (nu >= 0) throw DivergenceError("boundary integral needs nu < 0");
  if (!(x1 > 0 && x2 > 0)) throw DomainError("x1 and x2 must be positive");
  const auto alg2 = AlgebraDescriptor::make(2, d);
  const auto alg3 = AlgebraDescriptor::make(3, d);
  require_concrete(alg3);
  const Element c = peirce_idempotent(alg3);
  const Element x2d = diagonal(alg2, {x1, x2});
  const Element x3 = embed_upper_left(x2d, alg3);

  ConeProposal prop;
  prop.centre = k_integral_centre(alg2, nu + d / 2, x2d);
  const ConeSampler zs(alg2, prop);
  const double alpha = -nu;
  const double lg_alpha = std::lgamma(alpha);
  const double power = nu - nr(alg3);

  auto weight = [&](SampleStream& rng) {
    const ConeSample zsmp = zs(rng);
    const Element z = embed_upper_left(zsmp.y, alg3);
    boost::random::gamma_distribution<double> gam(alpha, 1.0);
    const double tau = 1.0 / gam(rng);
    if (!(tau > 0) || !std::isfinite(tau)) return 0.0;
    const double lq_tau = -lg_alpha - (alpha + 1) * std::log(tau) - 1.0 / tau;

    const HalfGaussian g(boundary_v(z, tau, c), c, kXiSpread);
    double lq_xi, quad;
    const Element xi = g.draw(rng, alg3, lq_xi, quad);
    const double t = tau + inner(jordan_mul(inverse0(z, c), xi), xi);
    const Element y = z + xi + t * c;

    // det(y) = det(z) tau by construction of t.
    const double log_dy = zsmp.log_det + std::log(tau);
    double tri;
    try {
      tri = trace(inverse(y));
    } catch (const SingularElementError&) {
      return 0.0;
    }
    return std::exp(-tri - inner(x3, y) + power * log_dy + zsmp.log_weight - lq_tau -
                    lq_xi);
  };
  return monte_carlo(n, seed, weight, threads);
}

}  // namespace conebessel
