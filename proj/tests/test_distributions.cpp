#include "doctest.h"

#include <boost/math/distributions/extreme_value.hpp>
#include <boost/math/distributions/logistic.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>

#include "snfit/distributions.hpp"

using namespace snfit;

TEST_SUITE("distributions") {

TEST_CASE("cdf at zero") {
    CHECK(std_cdf(Family::Lognormal, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std_cdf(Family::Weibull, 0) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-15));
    CHECK(std_cdf(Family::Loglogistic, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std_cdf(Family::Frechet, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("pdf at zero") {
    CHECK(std_pdf(Family::Lognormal, 0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(std_pdf(Family::Loglogistic, 0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("median quantiles") {
    CHECK(std::abs(std_quantile(Family::Lognormal, 0.5)) < 1e-15);
    CHECK(std_quantile(Family::Weibull, 0.5) == doctest::Approx(std::log(std::log(2.0))).epsilon(1e-14));
    CHECK(std_quantile(Family::Frechet, 0.5) == doctest::Approx(-std::log(std::log(2.0))).epsilon(1e-14));
    CHECK(std::abs(std_quantile(Family::Loglogistic, 0.5)) < 1e-15);
}

TEST_CASE("logistic helpers") {
    CHECK(plogis(0) == 0.5);
    CHECK(qlogis(0.5) == 0.0);
    CHECK(plogis(qlogis(0.73)) == doctest::Approx(0.73).epsilon(1e-15));
    CHECK(plogis(-800) >= 0.0);
    CHECK(plogis(800) == 1.0);
}

TEST_CASE("agreement with boost distributions") {
    boost::math::normal norm;
    boost::math::logistic logi;
    boost::math::extreme_value gumbel;  // largest extreme value
    for (double z = -6; z <= 6; z += 0.37) {
        CHECK(std_cdf(Family::Lognormal, z) == doctest::Approx(cdf(norm, z)).epsilon(1e-13));
        CHECK(std_cdf(Family::Loglogistic, z) == doctest::Approx(cdf(logi, z)).epsilon(1e-13));
        CHECK(std_cdf(Family::Frechet, z) == doctest::Approx(cdf(gumbel, z)).epsilon(1e-13));
        CHECK(std_pdf(Family::Frechet, z) == doctest::Approx(pdf(gumbel, z)).epsilon(1e-12));
        CHECK(std_cdf(Family::Weibull, z) == doctest::Approx(cdf(complement(gumbel, -z))).epsilon(1e-13));
    }
    for (double p : {1e-9, 0.001, 0.1, 0.5, 0.77, 0.999}) {
        CHECK(norm_quantile(p) == doctest::Approx(quantile(norm, p)).epsilon(1e-12));
    }
}

TEST_CASE("cdf/quantile round trips") {
    for (auto f : kAllFamilies) {
        for (double p = 1e-6; p < 1; p += 0.0371) {
            CHECK(std::abs(std_cdf(f, std_quantile(f, p)) - p) < 1e-10);
        }
        for (double z = -5; z <= 1.5; z += 0.25) {
            CHECK(std::abs(std_quantile(f, std_cdf(f, z)) - z) < 1e-10);
        }
    }
}

TEST_CASE("smallest/largest extreme value reflection") {
    for (double z = -8; z <= 8; z += 0.125) {
        CHECK(std::abs(std_cdf(Family::Weibull, z) - (1 - std_cdf(Family::Frechet, -z))) < 1e-12);
        CHECK(std::abs(std_pdf(Family::Weibull, z) - std_pdf(Family::Frechet, -z)) < 1e-12);
    }
}

TEST_CASE("pdf is the derivative of cdf") {
    const double h = 1e-5;
    for (auto f : kAllFamilies) {
        for (double z = -4; z <= 2.5; z += 0.3) {
            double fd = (std_cdf(f, z + h) - std_cdf(f, z - h)) / (2 * h);
            CHECK(std::abs(fd - std_pdf(f, z)) < 1e-6);
        }
    }
}

TEST_CASE("log pdf and log survival are consistent and tail-safe") {
    for (auto f : kAllFamilies) {
        for (double z = -5; z <= 3; z += 0.5) {
            CHECK(std_log_pdf(f, z) == doctest::Approx(std::log(std_pdf(f, z))).epsilon(1e-12));
            CHECK(std_log_survival(f, z) == doctest::Approx(std::log1p(-std_cdf(f, z))).epsilon(1e-7));
        }
        CHECK(std::isfinite(std_log_survival(f, 30)));
        CHECK(std_log_survival(f, 30) < -10);
    }
    for (double z = -3; z <= 6; z += 0.5) {
        CHECK(std_log_survival(Family::Weibull, z) == doctest::Approx(-std::exp(z)).epsilon(1e-14));
        CHECK(std_log_survival(Family::Loglogistic, z) == doctest::Approx(-std::log1p(std::exp(z))).epsilon(1e-14));
    }
    // Normal upper tail: log Q(z) ~ -z^2/2 - log(z sqrt(2 pi)).
    double z = 40;
    CHECK(std_log_survival(Family::Lognormal, z) == doctest::Approx(-z * z / 2 - std::log(z * std::sqrt(2 * M_PI))).epsilon(1e-3));
}

TEST_CASE("names") {
    for (auto f : kAllFamilies) CHECK(parse_family(to_string(f)) == f);
    CHECK_THROWS(parse_family("gamma"));
}

}
