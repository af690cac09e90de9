#pragma once

namespace cval::stats {

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);
// Regularized incomplete beta I_x(a, b).
double beta_i(double a, double b, double x);

// Survival functions used for the association tests.
double chi_square_sf(double x, double df);
double f_sf(double x, double df1, double df2);

}  // namespace cval::stats
