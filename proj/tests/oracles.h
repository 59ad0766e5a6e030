#pragma once

// Independent reference computations used by the tests. Nothing here reuses
// the library's matrix picture, term recurrences or samplers.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "conebessel/algebra.h"

namespace oracle {

using conebessel::AlgebraDescriptor;
using conebessel::Element;

// Coordinates -> Hermitian matrix, written out by hand.
Eigen::MatrixXcd dense(const Element& x);
Element undense(const AlgebraDescriptor& alg, const Eigen::MatrixXcd& m);

Element random_element(const AlgebraDescriptor& alg, std::mt19937_64& rng);
// A A^* + 0.05 I with Gaussian A.
Element random_cone(const AlgebraDescriptor& alg, std::mt19937_64& rng);
// Random primitive idempotent v v^* with a Gaussian unit vector v.
Element random_primitive(const AlgebraDescriptor& alg, std::mt19937_64& rng);
// Gaussian element projected onto A_1/2(c) by 4 L(c)(1 - L(c)).
Element random_half(const Element& c, std::mt19937_64& rng);
// Cone element of A_0(c): compression of a random cone element.
Element random_a0_cone(const Element& c, std::mt19937_64& rng);

// Elementary symmetric functions via the expansion of prod (1 + x_i s).
std::vector<double> elem_sym_poly(const std::vector<double>& x);

// Single-variable 0F1(;b;z) by direct summation.
double hyp0f1(double b, double z);

// Natural-support brute force of the J-series: plain nested loops over all
// index vectors of weighted degree <= degree, reciprocal Pochhammer symbols
// from long double product tables. alternating selects the displayed signs.
double j2_brute(int j, double nu, double d, double t1, double t2, int degree,
                bool alternating = true);
double j3_brute(int j, double nu, double d, double t1, double t2, double t3,
                int degree, bool alternating = true);

// Cone integrals by deterministic quadrature.
// Rank 1: int_0^inf exp(-1/y - x y) y^(nu-1) dy.
double k1_quadrature(double nu, double x);
// Rank 2 at x = diag(x1, x2), reduced to a 2-d integral.
double k2_quadrature(double nu, double d, double x1, double x2);

}  // namespace oracle
