#pragma once

// Large-sample covariances of the Gehan and RMST statistics under the null
// model (unit exponential hazard, uniform entry on (0, entry_max)). Used when
// boundaries are driven by a fixed rather than an estimated covariance.

#include <span>

#include "matrix.hpp"

namespace seqcombine::asymptotic {

// Probability that a subject is enrolled long enough to be followed to u at
// calendar time t.
double enrolled_fraction(double u, double t, double entry_max);

// pi(1 - pi) int_0^s w(u,s)^2 w(u,t) du with w(u,t) = e^{-u} enrolled_fraction(u, t).
double gehan_null_cov(double s, double t, double pi, double entry_max);

// {1/pi + 1/(1 - pi)} int_0^{L_j} A(u, L_j) A(u, L_k) e^{u} / enrolled_fraction(u, t_k) du
// with A(u, L) = e^{-u} - e^{-L}, L_j <= L_k <= t_k.
double rmst_null_cov(double restriction_j, double restriction_k, double t_k, double pi, double entry_max);

matrix::SymMatrix gehan_null_matrix(std::span<const double> times, double pi, double entry_max);
matrix::SymMatrix rmst_null_matrix(std::span<const double> times, std::span<const double> restrictions,
                                   double pi, double entry_max);

}  // namespace seqcombine::asymptotic
