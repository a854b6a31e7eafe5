#pragma once

namespace radmark::special {

// Natural log of the regularized incomplete beta I_x(a, b). The complement
// y = 1 - x is passed separately so callers can supply it without
// cancellation (e.g. y = c*c when x = 1 - c*c).
double log_ibeta(double a, double b, double x, double y);
inline double log_ibeta(double a, double b, double x) { return log_ibeta(a, b, x, 1.0 - x); }

// log P(X >= x) for X ~ chi-square with 2k degrees of freedom, k >= 1.
double log_chi2_sf_even(double x, int k);

// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

}  // namespace radmark::special
