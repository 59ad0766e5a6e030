#pragma once

// Monte Carlo integrals over symmetric cones: the K-Bessel integral
//   K_nu(x) = int_Omega exp(-tr(y^-1) - (x, y)) det(y)^(nu - n/r) dy,
// the gamma integral of the cone, and the two rank-3 boundary pipelines
// built on the Peirce decomposition y = z + xi + t c.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "conebessel/algebra.h"
#include "conebessel/rng.h"

namespace conebessel {

struct ConeSample {
  Element y;
  double log_weight;  // log of Jacobian / proposal density
  double log_det;     // log det(y) from the factor, free of cancellation
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

// y = P(centre^1/2)(T T^*), T lower triangular with positive diagonal.
struct ConeProposal {
  enum class Diagonal { lognormal, gamma };
  Diagonal diagonal = Diagonal::lognormal;
  double sigma_diag = 1.0;  // log-normal scale
  double sigma_off = 1.0;   // each real component of the strictly lower part
  // Gamma law: T_ii^2 ~ Gamma(kappa k_i, rate kappa), k_i = s - (i-1) d/2.
  double gamma_s = 0.0;
  double gamma_kappa = 0.75;
  std::optional<Element> centre;
};

// The n real parameters of T: diagonal T_ii first, then the entries below
// the diagonal in basis pair order, real part then (d = 2) imaginary part.
Element tt_map(const AlgebraDescriptor& alg, std::span<const double> u);
// log |det| of the differential of u -> T T^*, assembled column by column.
double tt_log_jacobian(const AlgebraDescriptor& alg, std::span<const double> u);

class ConeSampler {
 public:
  ConeSampler(const AlgebraDescriptor& alg, ConeProposal prop = {});
  ConeSample operator()(SampleStream& rng) const;
  const AlgebraDescriptor& algebra() const { return alg_; }

 private:
  AlgebraDescriptor alg_;
  ConeProposal prop_;
  std::optional<Element> half_;  // centre^1/2
  double log_det_centre_map_ = 0.0;
  double log_det_centre_ = 0.0;
};

// Default proposal: log-normal diagonal, standard normal off-diagonal, centre e.
ConeSample sample_cone(const AlgebraDescriptor& alg, SampleStream& rng);

// Generic driver: mean of weight(stream) over samples 0..n-1. Blocks of
// 4096 consecutive samples are reduced in a fixed pairwise order, so the
// result depends only on (seed, n), not on threads (0 = hardware count).
using WeightFunction = std::function<double(SampleStream&)>;
McEstimate monte_carlo(std::int64_t n, std::uint64_t seed, const WeightFunction& weight,
                       int threads = 1);

// Saddle point of exp(-tr y^-1 - (x,y)) det(y)^(nu - n/r), in the frame of x.
Element k_integral_centre(const AlgebraDescriptor& alg, double nu, const Element& x);

McEstimate k_integral_mc(const AlgebraDescriptor& alg, double nu, const Element& x,
                         std::int64_t n, std::uint64_t seed, int threads = 1);

// (2pi)^((n-r)/2) prod_j Gamma(s - (j-1) d/2).
double gamma_cone(const AlgebraDescriptor& alg, double s);
// int_Omega exp(-tr y) det(y)^(s - n/r) dy by sampling.
McEstimate gamma_cone_mc(const AlgebraDescriptor& alg, double s, std::int64_t n,
                         std::uint64_t seed, int threads = 1);

// (2pi)^d Gamma(-nu) times the rank-2 integral at nu + d/2.
McEstimate k3_boundary_semi_analytic(double nu, double d, double x1, double x2, std::int64_t n,
                                     std::uint64_t seed, int threads = 1);
// The rank-3 integral at diag(x1, x2, 0) sampled over (z, xi, t).
McEstimate k3_boundary_direct(double nu, double d, double x1, double x2, std::int64_t n,
                              std::uint64_t seed, int threads = 1);

// v = tr(z)/(2t det z) z^-1 - 1/(2t det z) e0 for z in A_0(c), t > 0.
Element boundary_v(const Element& z, double t, const Element& c);
// pi^d det(rho(v))^(-1/2) and its sampled counterpart over A_1/2(c).
double gaussian_half_exact(const Element& v, const Element& c);
McEstimate gaussian_half_mc(const Element& v, const Element& c, std::int64_t n,
                            std::uint64_t seed, int threads = 1);

}  // namespace conebessel
