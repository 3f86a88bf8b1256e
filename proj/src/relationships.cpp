#include "snfit/relationships.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace snfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

void require_strength(const TpVector& tp) {
    if (mode_of(tp.kind) != Mode::Strength) {
        throw DomainError(to_string(tp.kind) + " is life-specified; h(N) is not defined");
    }
}

void require_life(const TpVector& tp) {
    if (mode_of(tp.kind) != Mode::Life) {
        throw DomainError(to_string(tp.kind) + " is strength-specified; no life location/scale");
    }
}

// Power-law pair A_el (2n)^b + A_pl (2n)^c in log form, plus the elastic weight.
struct PowerPair {
    double log_h;
    double slope;  // d log h / d log n
};

PowerPair power_pair(double a_el, double a_pl, double b, double c, double n) {
    double x = std::log(2.0 * n);
    double le = std::log(a_el) + b * x;
    double lp = a_pl > 0.0 ? std::log(a_pl) + c * x : -kInf;
    double lh = log_sum_exp(le, lp);
    double we = std::exp(le - lh);
    double wp = lp == -kInf ? 0.0 : std::exp(lp - lh);
    return {lh, b * we + c * wp};
}

struct Hyperbola {
    double y;     // log h - E
    double disc;  // sqrt(w^2 + 4C)
};

// Root y > 0 of y (y + w) = C, evaluated without cancellation.
Hyperbola nishijima_root(const TpVector& tp, double log_n) {
    double a = tp[0], b = tp[1], c = tp[2], e = tp[3];
    double w = a * log_n - b + e;
    double disc = std::sqrt(w * w + 4.0 * c);
    double y = w > 0.0 ? 2.0 * c / (w + disc) : 0.5 * (disc - w);
    return {y, disc};
}

}  // namespace

double boxcox_nu(double s, double lambda) {
    double ls = std::log(s);
    if (std::fabs(lambda) < 1e-8) return ls * (1.0 + 0.5 * lambda * ls);
    return std::expm1(lambda * ls) / lambda;
}

double log_n_domain_lower(const TpVector& tp) {
    if (tp.kind == RelationshipKind::RectangularHyperbola) return tp[0];
    return -kInf;
}

double log_h(const TpVector& tp, double n) {
    require_strength(tp);
    if (!(n > 0.0)) throw DomainError("h(N) requires N > 0");
    switch (tp.kind) {
        case RelationshipKind::CoffinManson: return power_pair(tp[0], tp[1], tp[2], tp[3], n).log_h;
        case RelationshipKind::CoffinMansonZeroElasticSlope: return power_pair(tp[0], tp[1], 0.0, tp[2], n).log_h;
        case RelationshipKind::Nishijima: return tp[3] + nishijima_root(tp, std::log(n)).y;
        case RelationshipKind::RectangularHyperbola: {
            double d = std::log(n) - tp[0];
            if (!(d > 0.0)) throw DomainError("rectangular hyperbola evaluated at log N <= B*");
            return tp[2] + tp[1] / d;
        }
        default: break;
    }
    throw DomainError("unsupported relationship");
}

double eval_h(const TpVector& tp, double n) { return std::exp(log_h(tp, n)); }

double dlogh_dlogt(const TpVector& tp, double t) {
    require_strength(tp);
    if (!(t > 0.0)) throw DomainError("h(N) requires N > 0");
    switch (tp.kind) {
        case RelationshipKind::CoffinManson: return power_pair(tp[0], tp[1], tp[2], tp[3], t).slope;
        case RelationshipKind::CoffinMansonZeroElasticSlope: return power_pair(tp[0], tp[1], 0.0, tp[2], t).slope;
        case RelationshipKind::Nishijima: {
            auto r = nishijima_root(tp, std::log(t));
            return -tp[0] * r.y / r.disc;
        }
        case RelationshipKind::RectangularHyperbola: {
            double d = std::log(t) - tp[0];
            if (!(d > 0.0)) throw DomainError("rectangular hyperbola evaluated at log N <= B*");
            return -tp[1] / (d * d);
        }
        default: break;
    }
    throw DomainError("unsupported relationship");
}

double h_infimum(const TpVector& tp) {
    require_strength(tp);
    switch (tp.kind) {
        case RelationshipKind::CoffinManson: return tp[2] == 0.0 ? tp[0] : 0.0;
        case RelationshipKind::CoffinMansonZeroElasticSlope: return tp[0];
        case RelationshipKind::Nishijima: return std::exp(tp[3]);
        case RelationshipKind::RectangularHyperbola: return std::exp(tp[2]);
        default: break;
    }
    return 0.0;
}

double invert_h(const TpVector& tp, double s, LogBracket bracket) {
    require_strength(tp);
    if (!(s > 0.0)) throw DomainError("invert_h requires s > 0");
    const double ls = std::log(s);
    switch (tp.kind) {
        case RelationshipKind::CoffinMansonZeroElasticSlope: {
            double a_el = tp[0], a_pl = tp[1], c = tp[2];
            if (!(s > a_el)) throw NoSolutionError("stress at or below horizontal asymptote");
            return 0.5 * std::exp(std::log((s - a_el) / a_pl) / c);
        }
        case RelationshipKind::Nishijima: {
            double a = tp[0], b = tp[1], c = tp[2], e = tp[3];
            if (!(ls > e)) throw NoSolutionError("stress at horizontal asymptote");
            return std::exp((b - ls + c / (ls - e)) / a);
        }
        case RelationshipKind::RectangularHyperbola: {
            double b = tp[0], c = tp[1], e = tp[2];
            if (!(ls > e)) throw NoSolutionError("stress at horizontal asymptote");
            return std::exp(b + c / (ls - e));
        }
        default: break;
    }

    // Coffin-Manson: h is monotone in log n, so a bracketed solve is safe.
    if (!(s > h_infimum(tp))) throw NoSolutionError("stress at or below horizontal asymptote");
    auto f = [&](double x) { return log_h(tp, std::exp(x)) - ls; };
    double flo = f(bracket.lo), fhi = f(bracket.hi);
    if (flo < 0.0) throw NoSolutionError("stress above the curve on the search bracket");
    if (fhi > 0.0) throw NoSolutionError("stress below the curve on the search bracket");
    if (flo == 0.0) return std::exp(bracket.lo);
    if (fhi == 0.0) return std::exp(bracket.hi);
    std::uintmax_t max_iter = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(f, bracket.lo, bracket.hi, flo, fhi,
                                                       boost::math::tools::eps_tolerance<double>(52), max_iter);
    double x = 0.5 * (lo + hi);
    // One Newton step on log n tightens the residual to rounding level.
    double slope = dlogh_dlogt(tp, std::exp(x));
    if (slope < 0.0) {
        double x2 = x - f(x) / slope;
        if (std::isfinite(x2) && std::fabs(f(x2)) <= std::fabs(f(x))) x = x2;
    }
    return std::exp(x);
}

double life_location(const TpVector& tp, double s) {
    require_life(tp);
    if (tp.kind == RelationshipKind::Basquin) return tp[0] + tp[1] * std::log(s);
    return tp[0] + tp[1] * boxcox_nu(s, tp[2]);
}

double life_scale(const TpVector& tp, double s) {
    require_life(tp);
    if (tp.kind == RelationshipKind::Basquin) return tp[2];
    return std::exp(tp[3] + tp[4] * std::log(s));
}

double eval_life_median_log(const TpVector& tp, double s, Family family) {
    if (tp.kind == RelationshipKind::Basquin) return life_location(tp, s);
    return life_location(tp, s) + life_scale(tp, s) * std_quantile(family, 0.5);
}

bool satisfies_invariants(const TpVector& tp) {
    if (!tp.all_finite()) return false;
    switch (tp.kind) {
        case RelationshipKind::Basquin: return tp[1] < 0.0 && tp[2] > 0.0;
        case RelationshipKind::CoffinManson:
            return tp[0] > 0.0 && tp[1] >= 0.0 && tp[2] <= 0.0 && tp[3] < 0.0 && std::fabs(tp[3]) > std::fabs(tp[2]) &&
                   tp[4] > 0.0;
        case RelationshipKind::CoffinMansonZeroElasticSlope:
            return tp[0] > 0.0 && tp[1] > 0.0 && tp[2] < 0.0 && tp[3] > 0.0;
        case RelationshipKind::Nishijima: return tp[0] > 0.0 && tp[2] > 0.0 && tp[4] > 0.0;
        case RelationshipKind::RectangularHyperbola: return tp[1] > 0.0 && tp[3] > 0.0;
        case RelationshipKind::BoxCoxLoglinearSigma: return true;
    }
    return false;
}

}  // namespace snfit
