#pragma once

#include "snfit/distributions.hpp"
#include "snfit/params.hpp"

namespace snfit {

/// Box-Cox power transform of stress; continuous through lambda = 0.
double boxcox_nu(double s, double lambda);

// Strength-specified relationships, S = h(N).  All functions take a TP
// vector of a strength kind and throw DomainError for a life kind.

/// log h(n).  Throws DomainError outside the relationship's domain
/// (rectangular hyperbola needs log n > B*).
double log_h(const TpVector& tp, double n);
double eval_h(const TpVector& tp, double n);

/// d log h / d log t, strictly negative.
double dlogh_dlogt(const TpVector& tp, double t);

/// Lower limit of log n where h is defined (-inf except for the rectangular hyperbola).
double log_n_domain_lower(const TpVector& tp);

/// Infimum of h over its domain (0 unless the curve has a horizontal asymptote).
double h_infimum(const TpVector& tp);

struct LogBracket {
    double lo = -60.0;
    double hi = 60.0;
};

/// Solve h(n) = s for n.  Throws NoSolutionError when s lies at or below the
/// horizontal asymptote or outside the bracket.
double invert_h(const TpVector& tp, double s, LogBracket bracket = {});

// Life-specified relationships, log N = mu(S) + sigma(S) * eps.

/// Location mu(s) of log life.
double life_location(const TpVector& tp, double s);
/// Scale sigma(s) of log life.
double life_scale(const TpVector& tp, double s);
/// Log of the median life at stress s.
double eval_life_median_log(const TpVector& tp, double s, Family family);

/// Reject TP vectors violating the per-kind constraints.
bool satisfies_invariants(const TpVector& tp);

}  // namespace snfit
