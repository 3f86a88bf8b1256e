#include "doctest.h"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "snfit/bayesprep.hpp"
#include "snfit/serialize.hpp"

using namespace snfit;

namespace {

const FitResult& fit() {
    static const FitResult f =
        fit_ml(ModelSpec::of(RelationshipKind::CoffinManson, Family::Lognormal), fixtures::scaled(fixtures::cm_sample(200, 1)));
    return f;
}

}  // namespace

TEST_SUITE("bayesprep") {

TEST_CASE("flat priors") {
    auto p = flat_priors(std::size_t{5});
    REQUIRE(p.coordinates.size() == 5);
    for (const auto& c : p.coordinates) CHECK(c.type == CoordinatePrior::Type::Flat);
    CHECK_THROWS_AS(flat_priors(std::size_t{0}), DomainError);
    auto named = flat_priors(RelationshipKind::Nishijima);
    CHECK(named.coordinates[2].name == "qlogisp");
}

TEST_CASE("weakly informative priors") {
    const auto& f = fit();
    auto p = weakly_informative_from_fit(f, 20);
    auto se = f.usp_se();
    for (std::size_t i = 0; i < f.k(); ++i) {
        CHECK(p.coordinates[i].type == CoordinatePrior::Type::Normal);
        CHECK(p.coordinates[i].mean == f.usp[i]);
        CHECK(p.coordinates[i].sd == doctest::Approx(20 * se[static_cast<Eigen::Index>(i)]));
    }
    CHECK_THROWS_WITH_AS(weakly_informative_from_fit(f, 1.96), doctest::Contains("reuses data substantively"), DomainError);

    auto a = weakly_informative_from_fit(f, 15), b = weakly_informative_from_fit(f, 25);
    for (std::size_t i = 0; i < f.k(); ++i) {
        CHECK(a.coordinates[i].name == b.coordinates[i].name);
        CHECK(a.coordinates[i].mean == b.coordinates[i].mean);
        CHECK(a.coordinates[i].sd != b.coordinates[i].sd);
    }
}

TEST_CASE("direct arithmetic: MLE 1, SE 0.1, factor 20") {
    auto f = fit();
    f.usp[0] = 1.0;
    f.cov_usp.row(0).setZero();
    f.cov_usp.col(0).setZero();
    f.cov_usp(0, 0) = 0.01;
    auto p = weakly_informative_from_fit(f, 20);
    CHECK(p.coordinates[0].mean == 1.0);
    CHECK(p.coordinates[0].sd == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("range to normal") {
    auto n = range_to_normal(-2.5758293035489, 2.5758293035489);
    CHECK(std::abs(n.mean) < 1e-15);
    CHECK(n.sd == doctest::Approx(1.0).epsilon(1e-12));
    auto m = range_to_normal(0, 10);
    CHECK(m.mean == 5.0);
    CHECK(m.sd == doctest::Approx(10 / (2 * 2.5758293035489004)).epsilon(1e-14));
    CHECK(std::abs(m.sd - 1.941122) < 1e-6);
    boost::math::normal dist(m.mean, m.sd);
    CHECK(std::abs(quantile(dist, 0.005) - 0.0) < 1e-9);
    CHECK(std::abs(quantile(dist, 0.995) - 10.0) < 1e-9);
    CHECK_THROWS_AS(range_to_normal(3, 3), DomainError);
}

TEST_CASE("chain initial values") {
    Eigen::Vector2d mle(1.0, -2.0), se(0.1, 0.5);
    auto inits = chain_inits(mle, se, 4, 7);
    REQUIRE(inits.size() == 4);
    std::set<std::pair<double, double>> seen;
    for (const auto& v : inits) {
        CHECK(std::abs(std::abs(v[0] - 1.0) - 1.96 * 0.1) < 1e-14);
        CHECK(std::abs(std::abs(v[1] + 2.0) - 1.96 * 0.5) < 1e-14);
        seen.insert({v[0], v[1]});
    }
    CHECK(seen.size() == 4);

    auto again = chain_inits(mle, se, 4, 7);
    for (std::size_t i = 0; i < 4; ++i) CHECK(again[i] == inits[i]);

    Eigen::VectorXd m5 = Eigen::VectorXd::Zero(5), s5 = Eigen::VectorXd::Ones(5);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto v = chain_inits(m5, s5, 4, seed);
        std::set<std::vector<double>> distinct;
        for (const auto& x : v) {
            for (double c : x) CHECK(std::abs(std::abs(c) - 1.96) < 1e-15);
            distinct.insert(std::vector<double>(x.begin(), x.end()));
        }
        CHECK(distinct.size() == 4);
    }
    CHECK_THROWS_AS(chain_inits(mle, se, 5, 1), DomainError);
}

TEST_CASE("chain selection covers every vertex evenly") {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(3), s = Eigen::VectorXd::Ones(3);
    std::vector<int> counts(8, 0);
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        for (const auto& v : chain_inits(m, s, 2, seed)) {
            int id = 0;
            for (int c = 0; c < 3; ++c) id |= (v[c] > 0) << c;
            ++counts[static_cast<std::size_t>(id)];
        }
    }
    for (int c : counts) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("prior serialization round trip") {
    auto p = weakly_informative_from_fit(fit(), 20, "cm-1");
    auto j = to_json(p, chain_inits(fit(), 4, 3));
    auto back = Json::parse(j.dump());
    REQUIRE(back["coordinates"].size() == p.coordinates.size());
    for (std::size_t i = 0; i < p.coordinates.size(); ++i) {
        const auto& c = back["coordinates"][i];
        CHECK(c["name"].get<std::string>() == p.coordinates[i].name);
        CHECK(c["prior"]["type"] == "normal");
        CHECK(c["prior"]["mean"].get<double>() == p.coordinates[i].mean);
        CHECK(c["prior"]["sd"].get<double>() == p.coordinates[i].sd);
    }
    CHECK(back["inits"].size() == 4);
    auto flat = to_json(flat_priors(std::size_t{2}));
    CHECK_FALSE(flat["coordinates"][0]["prior"].contains("mean"));
}

}
