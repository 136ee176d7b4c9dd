#pragma once

namespace seqcombine::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double pdf(double x);
double cdf(double x);
// P(Z > x), accurate in the far upper tail.
double upper(double x);
// Inverse of cdf on (0, 1); returns -inf/+inf at 0/1.
double quantile(double p);

}  // namespace seqcombine::normal
