#include "snfit/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "snfit/error.hpp"

namespace snfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Acklam's rational approximation, relative error ~1e-9 before polishing.
double acklam(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double norm_log_survival(double z) {
    if (z < 35.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
    // Mills-ratio expansion; erfc underflows past here.
    double z2 = z * z;
    double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(z) - kLogSqrt2Pi + std::log(series);
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::Lognormal: return "lognormal";
        case Family::Weibull: return "weibull";
        case Family::Loglogistic: return "loglogistic";
        case Family::Frechet: return "frechet";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (auto f : kAllFamilies) {
        if (to_string(f) == name) return f;
    }
    throw DomainError("unknown distribution family '" + std::string(name) +
                      "' (expected lognormal, weibull, loglogistic or frechet)");
}

double plogis(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double qlogis(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("qlogis: probability must lie strictly inside (0,1)");
    return std::log(p) - std::log1p(-p);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile: probability must lie strictly inside (0,1)");
    double x = acklam(p);
    // One Halley step against the erfc-based cdf.
    double e = (p < 0.5) ? norm_cdf(x) - p : -(0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p));
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double std_cdf(Family f, double z) {
    switch (f) {
        case Family::Lognormal: return norm_cdf(z);
        case Family::Weibull: return -std::expm1(-std::exp(z));
        case Family::Loglogistic: return plogis(z);
        case Family::Frechet: return std::exp(-std::exp(-z));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double std_log_pdf(Family f, double z) {
    switch (f) {
        case Family::Lognormal: return -0.5 * z * z - kLogSqrt2Pi;
        case Family::Weibull: return z - std::exp(z);
        case Family::Loglogistic: {
            double a = std::fabs(z);
            return -a - 2.0 * std::log1p(std::exp(-a));
        }
        case Family::Frechet: return -z - std::exp(-z);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double std_pdf(Family f, double z) { return std::exp(std_log_pdf(f, z)); }

double std_log_survival(Family f, double z) {
    if (z == -kInf) return 0.0;
    if (z == kInf) return -kInf;
    switch (f) {
        case Family::Lognormal: return norm_log_survival(z);
        case Family::Weibull: return -std::exp(z);
        case Family::Loglogistic: return -(std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))));
        case Family::Frechet: return std::log(-std::expm1(-std::exp(-z)));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double std_quantile(Family f, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: probability must lie strictly inside (0,1)");
    switch (f) {
        case Family::Lognormal: return norm_quantile(p);
        case Family::Weibull: return std::log(-std::log1p(-p));
        case Family::Loglogistic: return qlogis(p);
        case Family::Frechet: return -std::log(-std::log(p));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace snfit
