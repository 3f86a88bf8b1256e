#pragma once

#include <span>
#include <vector>

#include "snfit/dataset.hpp"
#include "snfit/distributions.hpp"
#include "snfit/params.hpp"
#include "snfit/reparam.hpp"

namespace snfit {

struct ModelSpec {
    RelationshipKind relationship = RelationshipKind::Basquin;
    Family family = Family::Lognormal;
    Mode mode = Mode::Life;

    /// Spec with the mode implied by the relationship.
    static ModelSpec of(RelationshipKind kind, Family family) { return {kind, family, mode_of(kind)}; }
    /// Throws DomainError when mode disagrees with the relationship.
    void validate() const;
    bool operator==(const ModelSpec&) const = default;
};

struct LogLikValue {
    double value = 0.0;
    std::vector<double> per_observation;
    bool valid = true;
};

/// Per-observation terms below this are treated as impossible points.
inline constexpr double kLogLikFloor = -1e10;

/// Censored log-likelihood at a USP point.  Never throws for bad points:
/// anything non-finite gives valid = false and value = -inf.
LogLikValue loglik(const ModelSpec& spec, const UspVector& usp, const SNDataset& data);
LogLikValue loglik(const ModelSpec& spec, const UspVector& usp, const SNDataset& data, const AnchorContext& ctx);

/// Same, starting from traditional parameters on the data's scale.
LogLikValue loglik_tp(const ModelSpec& spec, const TpVector& tp, std::span<const Observation> observations);

/// Log density of a failure at (s, t) and log survival of a runout at (s, t).
double log_failure_density(const ModelSpec& spec, const TpVector& tp, double s, double t);
double log_survival(const ModelSpec& spec, const TpVector& tp, double s, double t);

/// F_N(t; s), the probability of failure by t at stress s.
double cdf_life(const ModelSpec& spec, const TpVector& tp, double s, double t);

/// Standardized residual z of one observation (the argument of the family cdf).
double standardized(const ModelSpec& spec, const TpVector& tp, double s, double t);

/// Life quantile t_p at stress s_e.  Strength mode solves
/// log h(t) = log s_e - sigma_X * z_p, which may throw NoSolutionError.
double quantile_life(const ModelSpec& spec, const TpVector& tp, const AnchorContext& ctx, double s_e, double p);
double quantile_life(const ModelSpec& spec, const UspVector& usp, const AnchorContext& ctx, double s_e, double p);

/// Fixed-order pairwise summation.
double pairwise_sum(std::span<const double> v);

}  // namespace snfit
