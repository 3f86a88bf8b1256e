#include "doctest.h"

#include <cmath>
#include <random>

#include "snfit/estimate.hpp"
#include "snfit/relationships.hpp"

using namespace snfit;

namespace {

AnchorContext context() {
    AnchorContext c;
    c.n_low = 1e-4;
    c.n_high = 1.0;
    c.n_mid = 1e-2;
    c.s_low_fail = 0.35;
    c.s_high_fail = 1.0;
    c.s_high_all = 1.0;
    c.log_s_center = std::log(0.55);
    return c;
}

UspVector random_usp(RelationshipKind kind, std::mt19937_64& rng, double lo = -5, double hi = 5) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dimension(kind)));
    for (auto& x : v) x = u(rng);
    return UspVector(kind, v);
}

TpVector tp_of(RelationshipKind k, std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return TpVector(k, x);
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("reparam") {

TEST_CASE("limit slope") {
    AnchorContext c;
    c.n_low = 1;
    c.n_high = std::exp(1.0);
    CHECK(limit_slope(c, std::exp(-1.0), 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    c.n_low = 1e-4;
    c.n_high = 1;
    CHECK(limit_slope(c, 0.5, 1.0) == doctest::Approx(-0.6931471805599453 / 9.210340371976184).epsilon(1e-14));
    CHECK(limit_slope(c, 0.7, 0.7) == 0.0);
}

TEST_CASE("Coffin-Manson stable parameters") {
    auto ctx = context();
    UspVector u(RelationshipKind::CoffinManson, Eigen::Vector<double, 5>(std::log(0.4), std::log(0.8), 0.0, -1.0, -3.0));
    auto sp = usp_to_sp(u, ctx, Family::Lognormal);
    const double chi = limit_slope(ctx, sp[0], sp[1]);
    CHECK(sp[2] == doctest::Approx(chi / 2).epsilon(1e-14));
    auto tp = cm_usp_to_tp(u, ctx);
    CHECK(eval_h(tp, ctx.n_high) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(eval_h(tp, ctx.n_low) == doctest::Approx(std::exp(std::log(0.4) + std::exp(std::log(0.8)))).epsilon(1e-12));

    // Basquin limit: c -> chi as the slope gap vanishes.
    u[3] = -40;
    auto sp2 = usp_to_sp(u, ctx, Family::Lognormal);
    CHECK(sp2[3] == doctest::Approx(chi).epsilon(1e-12));
}

TEST_CASE("Coffin-Manson closed-form signs") {
    std::mt19937_64 rng(5);
    auto ctx = context();
    for (int i = 0; i < 200; ++i) {
        auto tp = cm_usp_to_tp(random_usp(RelationshipKind::CoffinManson, rng, -3, 3), ctx);
        CHECK(tp[0] > 0);
        CHECK(tp[1] > 0);
        CHECK(tp[3] < tp[2]);
        CHECK(tp[2] < 0);
    }
}

TEST_CASE("A_pl = 0 is outside the stable parameterization") {
    auto ctx = context();
    CHECK_THROWS_AS(cm_tp_to_usp(tp_of(RelationshipKind::CoffinManson, {0.5, 0.0, -0.1, -0.5, 0.1}), ctx), DomainError);
}

TEST_CASE("round trips for every relationship") {
    std::mt19937_64 rng(17);
    auto ctx = context();
    for (auto kind : kAllRelationships) {
        for (auto fam : {Family::Lognormal, Family::Weibull}) {
            double worst = 0;
            int unrepresentable = 0;
            for (int i = 0; i < 200; ++i) {
                auto u = random_usp(kind, rng);
                try {
                    auto back = tp_to_usp(usp_to_tp(u, ctx, fam), ctx, fam);
                    worst = std::max(worst, max_abs_diff(u.values, back.values));
                } catch (const LimitRegionError&) {
                    ++unrepresentable;  // coefficients outside double range
                }
            }
            INFO(to_string(kind));
            CHECK(worst < 1e-10);
            CHECK(unrepresentable < 40);
        }
    }
}

TEST_CASE("Nishijima anchors are reproduced") {
    std::mt19937_64 rng(23);
    auto ctx = context();
    for (int i = 0; i < 100; ++i) {
        auto u = random_usp(RelationshipKind::Nishijima, rng, -3, 3);
        auto sp = usp_to_sp(u, ctx, Family::Lognormal);
        auto tp = nishijima_usp_to_tp(u, ctx);
        CHECK(log_h(tp, ctx.n_high) == doctest::Approx(std::log(sp[0])).epsilon(1e-10));
        CHECK(log_h(tp, ctx.n_mid) == doctest::Approx(std::log(sp[1])).epsilon(1e-10));
        CHECK(log_h(tp, ctx.n_low) == doctest::Approx(std::log(sp[2])).epsilon(1e-10));
    }
}

TEST_CASE("Nishijima midpoint at qlogisp = 0") {
    auto ctx = context();
    UspVector u(RelationshipKind::Nishijima, Eigen::Vector<double, 5>(std::log(0.4), std::log(0.9), 0.0, std::log(0.5), -3));
    auto sp = usp_to_sp(u, ctx, Family::Lognormal);
    const double e = sp[3];
    const double lo = std::log(sp[0]), hi = std::log(sp[2]);
    // Reference mid levels: the straight line (C = 0) and the hyperbola (C maximal) at n_mid.
    const double t = std::log(ctx.n_mid / ctx.n_low) / std::log(ctx.n_high / ctx.n_low);
    const double mid_line = hi + t * (lo - hi);
    const double a = lo - e, c3 = hi - e;
    const double mid_hyp = e + a * c3 / (a + t * (c3 - a) * 0 + (c3 - a) * (1 - t));
    CHECK(std::log(sp[1]) == doctest::Approx(0.5 * (mid_line + mid_hyp)).epsilon(1e-12));
}

TEST_CASE("Nishijima limits") {
    auto ctx = context();
    Eigen::Vector<double, 5> v(std::log(0.4), std::log(0.9), 0.0, std::log(0.5), -3);
    // qlogisp -> +inf: B/A and C/A approach the hyperbola through the same anchors.
    v[2] = 18.4;  // p ~ 1e-8
    auto ni = nishijima_usp_to_tp(UspVector(RelationshipKind::Nishijima, v), ctx);
    Eigen::Vector4d r(v[0], v[1], v[3], v[4]);
    auto rh = recthyp_usp_to_tp(UspVector(RelationshipKind::RectangularHyperbola, r), ctx);
    CHECK(ni[1] / ni[0] == doctest::Approx(rh[0]).epsilon(1e-6));
    CHECK(ni[2] / ni[0] == doctest::Approx(rh[1]).epsilon(1e-6));
    CHECK(ni[3] == doctest::Approx(rh[2]).epsilon(1e-12));
    // qlogisp -> -inf: C -> 0, the straight line between the anchors.
    v[2] = -30;
    auto line = nishijima_usp_to_tp(UspVector(RelationshipKind::Nishijima, v), ctx);
    CHECK(line[2] < 1e-12);
}

TEST_CASE("rectangular hyperbola anchors") {
    std::mt19937_64 rng(29);
    auto ctx = context();
    for (int i = 0; i < 100; ++i) {
        auto u = random_usp(RelationshipKind::RectangularHyperbola, rng, -3, 3);
        auto sp = usp_to_sp(u, ctx, Family::Lognormal);
        auto tp = recthyp_usp_to_tp(u, ctx);
        CHECK(log_h(tp, ctx.n_high) == doctest::Approx(std::log(sp[0])).epsilon(1e-10));
        CHECK(log_h(tp, ctx.n_low) == doctest::Approx(std::log(sp[1])).epsilon(1e-10));
    }
}

TEST_CASE("Basquin centring") {
    auto ctx = context();
    UspVector u(RelationshipKind::Basquin, Eigen::Vector3d(1.5, std::log(4.0), std::log(0.3)));
    auto tp = basquin_usp_to_tp(u, ctx);
    CHECK(tp[1] == doctest::Approx(-4.0));
    CHECK(tp[0] + tp[1] * ctx.log_s_center == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(tp[2] == doctest::Approx(0.3));
}

TEST_CASE("Box-Cox anchors re-substitute") {
    std::mt19937_64 rng(31);
    auto ctx = context();
    for (auto fam : kAllFamilies) {
        for (int i = 0; i < 50; ++i) {
            auto u = random_usp(RelationshipKind::BoxCoxLoglinearSigma, rng, -2, 2);
            auto tp = boxcox_usp_to_tp(u, ctx, fam);
            // log t_Low/High are the median log lives at the stress extremes.
            // t_Low and sigma_Low belong to the highest stress (shortest lives).
            CHECK(eval_life_median_log(tp, ctx.s_high_all, fam) == doctest::Approx(u[3]).epsilon(1e-12));
            CHECK(eval_life_median_log(tp, ctx.s_low_fail, fam) == doctest::Approx(u[4]).epsilon(1e-12));
            CHECK(life_scale(tp, ctx.s_high_all) == doctest::Approx(std::exp(u[0])).epsilon(1e-12));
            CHECK(life_scale(tp, ctx.s_low_fail) == doctest::Approx(std::exp(u[1])).epsilon(1e-12));
        }
    }
    // Equal sigmas give a constant-sigma model.
    UspVector flat(RelationshipKind::BoxCoxLoglinearSigma, Eigen::Vector<double, 5>(-1, -1, 0.3, 2, -1));
    auto tp = boxcox_usp_to_tp(flat, ctx, Family::Lognormal);
    CHECK(std::abs(tp[4]) < 1e-15);
    CHECK(std::exp(tp[3]) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("unscaling examples") {
    ScalingMeta id{1, 1};
    auto cm = tp_of(RelationshipKind::CoffinManson, {2, 5, -0.1, -0.6, 0.04});
    CHECK(max_abs_diff(unscale_tp(cm, id).values, cm.values) < 1e-15);
    auto cm_hat = unscale_tp(cm, ScalingMeta{3, 100});
    CHECK(cm_hat[0] == doctest::Approx(3 * 2 * std::pow(100.0, 0.1)).epsilon(1e-14));
    CHECK(cm_hat[0] == doctest::Approx(9.5136).epsilon(1e-3));

    auto ni = tp_of(RelationshipKind::Nishijima, {0.4, 1.0, 0.1, -1.0, 0.1});
    CHECK(max_abs_diff(unscale_tp(ni, id).values, ni.values) < 1e-15);
    CHECK(unscale_tp(ni, ScalingMeta{2, 100})[1] == doctest::Approx(3.535215).epsilon(1e-6));
}

TEST_CASE("unscaled curves match the scaled curves") {
    const ScalingMeta meta{17.3, 1e4};
    auto check_strength = [&](const TpVector& tp) {
        auto raw = tpns_as_tp(unscale_tp(tp, meta));
        for (double n = 1e-4; n <= 1.0; n *= 3.7) {
            CHECK(eval_h(raw, n * meta.n_max) == doctest::Approx(meta.s_max * eval_h(tp, n)).epsilon(1e-11));
        }
    };
    check_strength(tp_of(RelationshipKind::CoffinManson, {0.4, 0.6, -0.08, -0.5, 0.05}));
    check_strength(tp_of(RelationshipKind::CoffinMansonZeroElasticSlope, {0.3, 0.2, -0.5, 0.05}));
    check_strength(tp_of(RelationshipKind::Nishijima, {0.3, 0.2, 0.05, -1.5, 0.1}));
    check_strength(tp_of(RelationshipKind::RectangularHyperbola, {-12, 8, -1.2, 0.1}));

    for (double lambda : {-0.7, 0.0, 0.4, 1.3}) {
        auto bc = tp_of(RelationshipKind::BoxCoxLoglinearSigma, {-3, -2, lambda, -1.5, 0.3});
        auto raw = tpns_as_tp(unscale_tp(bc, meta));
        for (double s = 0.2; s <= 1.0; s += 0.1) {
            for (auto fam : kAllFamilies) {
                CHECK(eval_life_median_log(raw, s * meta.s_max, fam) ==
                      doctest::Approx(eval_life_median_log(bc, s, fam) + std::log(meta.n_max)).epsilon(1e-12));
            }
            CHECK(life_scale(raw, s * meta.s_max) == doctest::Approx(life_scale(bc, s)).epsilon(1e-12));
        }
    }
    auto bq = tp_of(RelationshipKind::Basquin, {-4, -3, 0.2});
    auto raw = tpns_as_tp(unscale_tp(bq, meta));
    CHECK(life_location(raw, 0.5 * meta.s_max) == doctest::Approx(life_location(bq, 0.5) + std::log(meta.n_max)));
}

TEST_CASE("Box-Cox transform rescaling identity") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> us(0.1, 50), ul(-1.5, 1.5);
    for (int i = 0; i < 200; ++i) {
        double s = us(rng), smax = s + us(rng), lambda = ul(rng);
        CHECK(boxcox_nu(s / smax, lambda) ==
              doctest::Approx((boxcox_nu(s, lambda) - boxcox_nu(smax, lambda)) / std::pow(smax, lambda)).epsilon(1e-10));
    }
}

TEST_CASE("initial values") {
    // Exact Coffin-Manson data at many stresses, low noise.
    auto gen = tp_of(RelationshipKind::CoffinManson, {0.5, 1.5, -0.1, -0.55, 0.02});
    std::vector<double> stresses;
    for (int i = 0; i < 60; ++i) stresses.push_back(0.55 + 0.9 * (i % 12) / 11.0);
    auto raw = simulate(ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal), gen, stresses, 1e9, 3);
    auto data = scale(raw);
    for (auto kind : kAllRelationships) {
        auto u = initial_usp(kind, data, Family::Lognormal);
        INFO(to_string(kind));
        CHECK(u.all_finite());
    }
    auto ni = nishijima_initial_usp(data);
    CHECK(std::abs(ni[2]) < 1e-12);
    auto sp = usp_to_sp(ni, AnchorContext::from(data), Family::Lognormal);
    CHECK(std::log(sp[0]) - sp[3] == doctest::Approx(0.1 * (std::log(sp[2]) - std::log(sp[0]))).epsilon(1e-10));
}

TEST_CASE("three failures cannot split slopes") {
    std::vector<Observation> raw{{3, 10, Status::Failure}, {2, 100, Status::Failure}, {1, 1000, Status::Failure}};
    CHECK_THROWS_WITH_AS(cm_initial_usp(scale(raw)), "insufficient failures for slope split", EstimabilityError);
}

}
