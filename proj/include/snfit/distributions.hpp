#pragma once

#include <array>
#include <string>
#include <string_view>

namespace snfit {

/// Standard location-scale family of log-lifetime (or log-strength).
/// Each tag is named after the distribution of the untransformed variable.
enum class Family {
    Lognormal,    // normal
    Weibull,      // smallest extreme value
    Loglogistic,  // logistic
    Frechet,      // largest extreme value
};

inline constexpr std::array<Family, 4> kAllFamilies{Family::Lognormal, Family::Weibull, Family::Loglogistic,
                                                    Family::Frechet};

std::string to_string(Family f);
Family parse_family(std::string_view name);

double std_cdf(Family f, double z);
double std_pdf(Family f, double z);
double std_log_pdf(Family f, double z);
/// log(1 - cdf(z)), accurate far into the upper tail.
double std_log_survival(Family f, double z);
double std_quantile(Family f, double p);

/// Standard logistic cdf and quantile (inverse logit / logit).
double plogis(double x);
double qlogis(double p);

/// Standard normal helpers.
double norm_cdf(double z);
double norm_quantile(double p);

}  // namespace snfit
