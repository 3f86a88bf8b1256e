#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "snfit/estimate.hpp"

namespace fixtures {

inline snfit::TpVector tp_of(snfit::RelationshipKind k, std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return snfit::TpVector(k, x);
}

/// n stresses cycling through `levels` log-spaced values in [lo, hi].
inline std::vector<double> stress_levels(std::size_t n, double lo, double hi, int levels = 20) {
    std::vector<double> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(lo * std::pow(hi / lo, static_cast<double>(i % levels) / (levels - 1)));
    return s;
}

/// Well-identified Coffin-Manson/lognormal design (about 10% runouts).
inline const snfit::TpVector& cm_generator() {
    static const auto tp = tp_of(snfit::RelationshipKind::CoffinManson, {1000, 20000, -0.12, -0.6, 0.04});
    return tp;
}

inline std::vector<snfit::Observation> cm_sample(std::size_t n, std::uint64_t seed) {
    return snfit::simulate(snfit::ModelSpec::of(snfit::RelationshipKind::CoffinManson, snfit::Family::Lognormal),
                           cm_generator(), stress_levels(n, 250, 1500), 3e4, seed);
}

/// Data on a zero-elastic-slope curve: no detectable second slope, so a
/// Coffin-Manson fit runs along the qlogisp ridge toward b = 0.
inline std::vector<snfit::Observation> ridge_sample(std::uint64_t seed = 5) {
    auto tp = tp_of(snfit::RelationshipKind::CoffinMansonZeroElasticSlope, {300, 20000, -0.6, 0.03});
    return snfit::simulate(snfit::ModelSpec::of(snfit::RelationshipKind::CoffinMansonZeroElasticSlope, snfit::Family::Lognormal),
                           tp, stress_levels(120, 350, 1500, 12), 1e7, seed);
}

inline std::shared_ptr<const snfit::SNDataset> scaled(const std::vector<snfit::Observation>& raw) {
    return std::make_shared<const snfit::SNDataset>(snfit::scale(raw));
}

}  // namespace fixtures
