#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snfit/estimate.hpp"

namespace snfit {

struct CoordinatePrior {
    enum class Type { Flat, Normal };

    std::string name;
    Type type = Type::Flat;
    double mean = 0.0;  // Normal only
    double sd = 0.0;    // Normal only, > 0
    std::string note;   // provenance
};

struct PriorSpec {
    std::vector<CoordinatePrior> coordinates;
};

/// k flat marginals named x0..x{k-1}; throws DomainError for k = 0.
PriorSpec flat_priors(std::size_t k);
/// Flat marginals named after the relationship's USPs.
PriorSpec flat_priors(RelationshipKind kind);

/// Smallest factor accepted by weakly_informative_from_fit.
inline constexpr double kMinPriorFactor = 5.0;

/// Normal(MLE_i, factor * SE_i) per USP.  Requires a converged fit; small
/// factors are rejected because the prior would reuse the data substantively.
PriorSpec weakly_informative_from_fit(const FitResult& fit, double factor = 20.0, const std::string& fit_id = "");

struct NormalParams {
    double mean = 0.0;
    double sd = 1.0;
};

/// Normal whose 0.005 and 0.995 quantiles are q005 and q995.
NormalParams range_to_normal(double q005, double q995);

/// n_chains distinct vertices of the box MLE_i +/- 1.96 SE_i, drawn without
/// replacement with a seeded generator.
std::vector<UspVector> chain_inits(const FitResult& fit, std::size_t n_chains = 4, std::uint64_t seed = 1);

/// Same from explicit centres and standard errors (used by tests and the CLI).
std::vector<Eigen::VectorXd> chain_inits(const Eigen::VectorXd& mle, const Eigen::VectorXd& se, std::size_t n_chains,
                                         std::uint64_t seed);

}  // namespace snfit
