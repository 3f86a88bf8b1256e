#include "snfit/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snfit/error.hpp"

namespace snfit {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Power series for P(a, x), good for x < a + 1.
double p_series(double a, double x) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), good for x >= a + 1.
double q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_args(double a, double x) {
    if (!(a > 0.0)) throw DomainError("incomplete gamma requires a > 0");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma requires x >= 0");
}

}  // namespace

double gamma_p(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    return x < a + 1.0 ? p_series(a, x) : 1.0 - q_fraction(a, x);
}

double gamma_q(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 1.0;
    if (x == std::numeric_limits<double>::infinity()) return 0.0;
    return x < a + 1.0 ? 1.0 - p_series(a, x) : q_fraction(a, x);
}

double chi2_sf(double x, double df) {
    if (!(df > 0.0)) throw DomainError("chi-square needs df > 0");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double chi2_cdf(double x, double df) {
    if (!(df > 0.0)) throw DomainError("chi-square needs df > 0");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, double df) {
    if (!(df > 0.0)) throw DomainError("chi-square needs df > 0");
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("chi-square quantile needs 0 <= p < 1");
    if (p == 0.0) return 0.0;
    double lo = 0.0, hi = std::max(1.0, df);
    while (chi2_cdf(hi, df) < p) hi *= 2.0;
    // Bisection to a bracket, then Newton on the cdf.
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        (chi2_cdf(mid, df) < p ? lo : hi) = mid;
        if (hi - lo < 1e-6 * hi) break;
    }
    double x = 0.5 * (lo + hi);
    const double k = 0.5 * df;
    for (int i = 0; i < 20; ++i) {
        double density = std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
        double step = (chi2_cdf(x, df) - p) / density;
        double next = x - step;
        if (!(next > lo && next < hi)) break;
        x = next;
        if (std::fabs(step) < 1e-15 * x) break;
    }
    return x;
}

}  // namespace snfit
