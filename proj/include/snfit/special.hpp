#pragma once

namespace snfit {

/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Chi-square survival function and quantile.
double chi2_sf(double x, double df);
double chi2_cdf(double x, double df);
double chi2_quantile(double p, double df);

}  // namespace snfit
