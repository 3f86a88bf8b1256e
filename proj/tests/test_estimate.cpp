#include "doctest.h"

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "snfit/relationships.hpp"
#include "snfit/special.hpp"

using namespace snfit;
using fixtures::scaled;
using fixtures::tp_of;

namespace {

const FitResult& cm_fit() {
    static const FitResult fit =
        fit_ml(ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal), scaled(fixtures::cm_sample(200, 1)));
    return fit;
}

const FitResult& ridge_fit() {
    static const FitResult fit =
        fit_ml(ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal), scaled(fixtures::ridge_sample()));
    return fit;
}

bool has_advisory(const FitResult& fit, const std::string& needle) {
    for (const auto& a : detect_limiting(fit)) {
        if (a.find(needle) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_SUITE("estimate") {

TEST_CASE("AIC arithmetic") {
    CHECK(aic(5, 1276.6) == doctest::Approx(-2543.2).epsilon(1e-12));
    CHECK(aic(4, 45.8) == doctest::Approx(-83.6).epsilon(1e-12));
    CHECK(aic(4, 45.8) < aic(3, 44.5));
    CHECK(aic(3, 44.5) == doctest::Approx(-83.0).epsilon(1e-12));
}

TEST_CASE("diagnostics on a quadratic toy surface") {
    const std::string_view names[] = {"u0", "u1", "u2"};
    auto f = [](const Eigen::VectorXd& u) { return -0.5 * u.squaredNorm(); };
    auto d = diagnostics_for(f, Eigen::Vector3d::Zero(), names);
    CHECK(d.grad_norm < 1e-10);
    for (double e : d.hessian_eigenvalues) CHECK(e == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(d.converged);
    CHECK(d.limit_flags.empty());

    auto flat = [](const Eigen::VectorXd& u) { return -0.5 * (u[0] * u[0] + u[2] * u[2]); };
    auto d2 = diagnostics_for(flat, Eigen::Vector3d::Zero(), names);
    CHECK_FALSE(d2.converged);
    REQUIRE(!d2.limit_flags.empty());
    CHECK(d2.limit_flags[0].coordinate == "u1");
}

TEST_CASE("Basquin recovery") {
    auto gen = tp_of(RelationshipKind::Basquin, {30, -4, 0.3});
    auto spec = ModelSpec::of(RelationshipKind::Basquin, Family::Lognormal);
    auto raw = simulate(spec, gen, fixtures::stress_levels(200, 200, 600, 10), 1e7, 2);
    auto fit = fit_ml(spec, scaled(raw));
    CHECK(fit.diagnostics.converged);
    auto se = fit.tpns_se();
    for (std::size_t i = 0; i < 3; ++i) {
        INFO(fit.tpns.names()[i]);
        CHECK(std::abs(fit.tpns[i] - gen[i]) < 3 * se[static_cast<Eigen::Index>(i)]);
    }
}

TEST_CASE("Coffin-Manson recovery and convergence diagnostics") {
    const auto& fit = cm_fit();
    CHECK(fit.diagnostics.converged);
    CHECK(fit.diagnostics.grad_norm < 1e-4 * (1 + std::abs(fit.loglik)));
    for (double e : fit.diagnostics.hessian_eigenvalues) CHECK(e < 0);
    auto se = fit.tpns_se();
    for (std::size_t i = 0; i < fit.k(); ++i) {
        INFO(fit.tpns.names()[i]);
        CHECK(std::abs(fit.tpns[i] - fixtures::cm_generator()[i]) < 3 * se[static_cast<Eigen::Index>(i)]);
    }
    CHECK(fit.aic == doctest::Approx(aic(5, fit.loglik)));
    CHECK(fit.advisories.empty());
}

TEST_CASE("maximum beats the generator") {
    const auto& fit = cm_fit();
    auto truth = tp_to_usp(
        [&] {
            auto raw = unscale_tp(fixtures::cm_generator(), ScalingMeta{1 / fit.data->scaling().s_max, 1 / fit.data->scaling().n_max});
            return tpns_as_tp(raw);
        }(),
        fit.ctx, Family::Lognormal);
    CHECK(fit.loglik >= loglik(fit.spec, truth, *fit.data).value);
}

TEST_CASE("delta-method covariance matches a finite-difference Jacobian") {
    const auto& fit = cm_fit();
    const auto k = static_cast<Eigen::Index>(fit.k());
    Eigen::MatrixXd jac(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(fit.usp.values[j]));
        UspVector up = fit.usp, dn = fit.usp;
        up.values[j] += h;
        dn.values[j] -= h;
        jac.col(j) = (usp_to_tp(up, fit.ctx, fit.spec.family).values - usp_to_tp(dn, fit.ctx, fit.spec.family).values) / (2 * h);
    }
    Eigen::MatrixXd expect = jac * fit.cov_usp * jac.transpose();
    for (Eigen::Index i = 0; i < k; ++i) {
        CHECK(fit.cov_tp(i, i) == doctest::Approx(expect(i, i)).epsilon(1e-4));
    }
}

TEST_CASE("profile relative likelihood") {
    const auto& fit = cm_fit();
    for (std::size_t c = 0; c < fit.k(); ++c) {
        auto grid = default_profile_grid(fit, c, 11, 3);
        CHECK(grid[5] == doctest::Approx(fit.usp[c]));
        auto t = profile_1d(fit, c, grid);
        REQUIRE(t.rel_lik[5]);
        CHECK(*t.rel_lik[5] == doctest::Approx(1.0).epsilon(1e-6));
        for (std::size_t i = 1; i <= 5; ++i) {
            REQUIRE(t.rel_lik[5 + i]);
            REQUIRE(t.rel_lik[5 - i]);
            CHECK(*t.rel_lik[5 + i] <= *t.rel_lik[5 + i - 1] + 1e-9);
            CHECK(*t.rel_lik[5 - i] <= *t.rel_lik[5 - i + 1] + 1e-9);
        }
        // Near the maximum the profile is close to its quadratic approximation.
        CHECK(*t.rel_lik[6] == doctest::Approx(std::exp(-0.5 * 0.36)).epsilon(0.05));
    }
}

TEST_CASE("two-dimensional profile") {
    const auto& fit = cm_fit();
    auto g0 = default_profile_grid(fit, 0, 5, 2);
    auto g4 = default_profile_grid(fit, 4, 5, 2);
    auto t = profile_2d(fit, 0, 4, g0, g4);
    REQUIRE(t.rel_lik.size() == 25);
    double best = 0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < 25; ++i) {
        if (t.rel_lik[i] && *t.rel_lik[i] > best) {
            best = *t.rel_lik[i];
            at = i;
        }
    }
    CHECK(at == 12);
    CHECK(best == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ridge: flat qlogisp profile and zero-elastic-slope advisory") {
    const auto& fit = ridge_fit();
    std::vector<double> grid{-30, -25, -20, -15, -10};
    auto t = profile_1d(fit, fit.usp.index_of("qlogisp"), grid);
    for (const auto& r : t.rel_lik) {
        REQUIRE(r);
        CHECK(*r > 0.05);
    }
    CHECK(has_advisory(fit, "zero-elastic-slope limit"));
    bool flagged = false;
    for (const auto& f : fit.diagnostics.limit_flags) flagged = flagged || f.coordinate == "qlogisp";
    CHECK(flagged);
}

TEST_CASE("limiting-model advisories at forced points") {
    auto ni_data = scaled(simulate(ModelSpec::of(RelationshipKind::Nishijima, Family::Lognormal),
                                   tp_of(RelationshipKind::Nishijima, {0.4, 4.0, 0.5, 5.5, 0.05}),
                                   fixtures::stress_levels(100, 300, 1500, 10), 1e7, 4));
    auto spec = ModelSpec::of(RelationshipKind::Nishijima, Family::Lognormal);
    auto fit = fit_ml(spec, ni_data);
    auto u = fit.usp;
    u[2] = 25;
    auto forced = fit_at(spec, fit.data, u);
    CHECK(has_advisory(forced, "rectangular-hyperbola limit"));

    const auto& cm = cm_fit();
    auto v = cm.usp;
    v[2] = -25;
    CHECK(has_advisory(fit_at(cm.spec, cm.data, v), "zero-elastic-slope limit"));
    CHECK(detect_limiting(cm).empty());
}

TEST_CASE("quantile band") {
    const auto& fit = cm_fit();
    std::vector<double> stresses{300, 400, 600, 900, 1300};
    auto zero = quantile_band(fit, 0.1, stresses, 0.0);
    for (const auto& r : zero) {
        CHECK(r.lower == doctest::Approx(r.estimate).epsilon(1e-12));
        CHECK(r.upper == doctest::Approx(r.estimate).epsilon(1e-12));
    }
    auto band = quantile_band(fit, 0.1, stresses, 0.95);
    for (std::size_t i = 0; i < band.size(); ++i) {
        const auto& r = band[i];
        CHECK(r.lower < r.estimate);
        CHECK(r.estimate < r.upper);
        CHECK(r.wald_lower < r.estimate);
        CHECK(r.estimate < r.wald_upper);
        if (i > 0) {
            // Lives fall with stress; so do both band edges.
            CHECK(r.estimate < band[i - 1].estimate);
            CHECK(r.lower < band[i - 1].lower);
            CHECK(r.upper < band[i - 1].upper);
        }
        // Estimate matches the TPNS curve in original units.
        auto raw = tpns_as_tp(fit.tpns);
        CHECK(r.estimate == doctest::Approx(quantile_life(fit.spec, raw, fit.ctx, r.stress, 0.1)).epsilon(1e-8));
    }
}

TEST_CASE("Wald and likelihood intervals agree on a large sample") {
    auto spec = ModelSpec::of(RelationshipKind::Basquin, Family::Lognormal);
    auto raw = simulate(spec, tp_of(RelationshipKind::Basquin, {30, -4, 0.3}), fixtures::stress_levels(1500, 200, 600, 10), 1e9, 9);
    auto fit = fit_ml(spec, scaled(raw));
    REQUIRE(fit.diagnostics.converged);
    for (const auto& r : quantile_band(fit, 0.1, {180, 300, 500, 650}, 0.95)) {
        const double lw = std::log(r.upper) - std::log(r.lower);
        const double ww = std::log(r.wald_upper) - std::log(r.wald_lower);
        CHECK(std::abs(lw - ww) < 0.2 * ww);
    }
}

TEST_CASE("compare grid") {
    auto data = scaled(fixtures::cm_sample(120, 3));
    auto rels = std::vector<RelationshipKind>(kAllRelationships.begin(), kAllRelationships.end());
    auto fams = std::vector<Family>(kAllFamilies.begin(), kAllFamilies.end());
    auto rows = compare_grid(data, rels, fams);
    CHECK(rows.size() == 24);
    bool failed_seen = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].neg_loglik == doctest::Approx(rows[i].error.empty() ? -rows[i].fit->loglik : rows[i].neg_loglik));
        if (!rows[i].error.empty()) failed_seen = true;
        else CHECK_FALSE(failed_seen);
        if (i > 0 && rows[i].error.empty() && rows[i - 1].error.empty()) CHECK(rows[i - 1].aic <= rows[i].aic);
    }
    // The leaderboard does not depend on the thread count.
    setenv("SNFIT_THREADS", "1", 1);
    auto serial = compare_grid(data, {RelationshipKind::Basquin, RelationshipKind::Nishijima}, fams);
    setenv("SNFIT_THREADS", "4", 1);
    auto parallel = compare_grid(data, {RelationshipKind::Basquin, RelationshipKind::Nishijima}, fams);
    unsetenv("SNFIT_THREADS");
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].relationship == parallel[i].relationship);
        CHECK(serial[i].family == parallel[i].family);
        CHECK(serial[i].aic == parallel[i].aic);
    }
}

TEST_CASE("likelihood-ratio test") {
    auto data = scaled(fixtures::ridge_sample(11));
    auto cm = fit_ml(ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal), data);
    auto zes = fit_ml(ModelSpec::of(RelationshipKind::CoffinMansonZeroElasticSlope, Family::Lognormal), data);
    auto tied = zes;
    tied.loglik = cm.loglik;
    auto same = lr_test(cm, tied);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK_THROWS_AS(lr_test(cm, cm), DomainError);

    auto t = lr_test(cm, zes);
    CHECK(t.df == 1);
    CHECK(t.p_value > 0.1);
    CHECK(t.p_value == doctest::Approx(chi2_sf(t.statistic, 1)));
    CHECK(chi2_sf(3.84, 1) == doctest::Approx(0.05).epsilon(0.01));
}

TEST_CASE("residuals") {
    const auto& fit = cm_fit();
    auto res = residuals(fit);
    CHECK(res.size() == fit.data->size());
    double mean = 0, var = 0;
    std::size_t n = 0;
    for (const auto& r : res) {
        if (r.censored) continue;
        mean += r.z;
        ++n;
    }
    mean /= static_cast<double>(n);
    for (const auto& r : res) {
        if (!r.censored) var += (r.z - mean) * (r.z - mean);
    }
    var /= static_cast<double>(n - 1);
    // Failures are a censored-from-above subsample, so allow a slight shift.
    CHECK(std::abs(mean) < 3 / std::sqrt(static_cast<double>(n)) + 0.15);
    CHECK(var > 0.5);
    CHECK(var < 1.5);

    auto sharp = tp_of(RelationshipKind::CoffinManson, {1000, 20000, -0.12, -0.6, 1e-6});
    auto spec = ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal);
    auto raw = simulate(spec, sharp, fixtures::stress_levels(40, 300, 1500), 1e9, 8);
    auto exact = fit_at(spec, scaled(raw), tp_to_usp(tpns_as_tp(unscale_tp(sharp, ScalingMeta{1 / 1500.0, 1 / [&] {
                                                                     double m = 0;
                                                                     for (auto& o : raw) m = std::max(m, o.cycles);
                                                                     return m;
                                                                 }()})),
                                                                 AnchorContext::from(scale(raw)), Family::Lognormal));
    for (const auto& r : residuals(exact)) CHECK(std::abs(r.z * 1e-6) < 1e-5);
}

TEST_CASE("simulation") {
    auto spec = ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal);
    auto a = fixtures::cm_sample(200, 1), b = fixtures::cm_sample(200, 1), c = fixtures::cm_sample(200, 2);
    CHECK(a == b);
    CHECK_FALSE(a == c);

    auto tight = tp_of(RelationshipKind::CoffinManson, {1000, 20000, -0.12, -0.6, 1e-9});
    for (const auto& o : simulate(spec, tight, {300, 700, 1400}, 1e9, 1)) {
        CHECK(o.cycles == doctest::Approx(invert_h(tight, o.stress, {-60, 60})).epsilon(1e-6));
    }

    // Runout fraction against the model's survival at the runout time.
    const double s = 500, runout = 3000;
    const std::size_t n = 4000;
    auto many = simulate(spec, fixtures::cm_generator(), std::vector<double>(n, s), runout, 77);
    double frac = 0;
    for (const auto& o : many) frac += o.status == Status::Runout;
    frac /= static_cast<double>(n);
    const double expect = 1 - cdf_life(spec, fixtures::cm_generator(), s, runout);
    CHECK(std::abs(frac - expect) < 3 / std::sqrt(static_cast<double>(n)));
    for (const auto& o : many) {
        if (o.status == Status::Runout) CHECK(o.cycles == runout);
    }
}

TEST_CASE("estimability guards") {
    std::vector<Observation> one_level{{100, 1000, Status::Failure}, {100, 2000, Status::Failure},
                                       {100, 3000, Status::Failure}, {100, 9000, Status::Runout}};
    for (auto kind : kAllRelationships) {
        INFO(to_string(kind));
        CHECK_THROWS_AS(fit_ml(ModelSpec::of(kind, Family::Lognormal), scaled(one_level)), EstimabilityError);
    }
}

}
