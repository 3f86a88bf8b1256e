#include "snfit/likelihood.hpp"

#include <cmath>
#include <limits>

#include "snfit/relationships.hpp"

namespace snfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sum_range(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return sum_range(v.first(half)) + sum_range(v.subspan(half));
}

// Strength mode: log h(t) and the slope, or nullopt-like -inf outside the domain.
struct StrengthPoint {
    bool inside = true;
    double log_h = 0.0;
};

StrengthPoint strength_point(const TpVector& tp, double t) {
    if (tp.kind == RelationshipKind::RectangularHyperbola && !(std::log(t) > tp[0])) return {false, kInf};
    return {true, log_h(tp, t)};
}

double sigma_x(const TpVector& tp) { return tp[tp.size() - 1]; }

}  // namespace

void ModelSpec::validate() const {
    if (mode != mode_of(relationship)) {
        throw DomainError(to_string(relationship) + " is specified for fatigue " +
                          (mode_of(relationship) == Mode::Life ? "life" : "strength"));
    }
}

double pairwise_sum(std::span<const double> v) { return sum_range(v); }

double standardized(const ModelSpec& spec, const TpVector& tp, double s, double t) {
    if (spec.mode == Mode::Life) return (std::log(t) - life_location(tp, s)) / life_scale(tp, s);
    auto pt = strength_point(tp, t);
    if (!pt.inside) return -kInf;  // infinite strength below the hyperbola's pole
    return (std::log(s) - pt.log_h) / sigma_x(tp);
}

double log_failure_density(const ModelSpec& spec, const TpVector& tp, double s, double t) {
    const double log_t = std::log(t);
    if (spec.mode == Mode::Life) {
        const double sigma = life_scale(tp, s);
        const double z = (log_t - life_location(tp, s)) / sigma;
        return std_log_pdf(spec.family, z) - std::log(sigma) - log_t;
    }
    auto pt = strength_point(tp, t);
    if (!pt.inside) return -kInf;
    const double sigma = sigma_x(tp);
    const double z = (std::log(s) - pt.log_h) / sigma;
    const double slope = dlogh_dlogt(tp, t);
    if (!(slope < 0.0)) return -kInf;
    return std_log_pdf(spec.family, z) + std::log(-slope) - std::log(sigma) - log_t;
}

double log_survival(const ModelSpec& spec, const TpVector& tp, double s, double t) {
    if (spec.mode == Mode::Strength) {
        auto pt = strength_point(tp, t);
        if (!pt.inside) return 0.0;
    }
    return std_log_survival(spec.family, standardized(spec, tp, s, t));
}

double cdf_life(const ModelSpec& spec, const TpVector& tp, double s, double t) {
    const double z = standardized(spec, tp, s, t);
    if (z == -kInf) return 0.0;
    return std_cdf(spec.family, z);
}

LogLikValue loglik_tp(const ModelSpec& spec, const TpVector& tp, std::span<const Observation> observations) {
    LogLikValue out;
    out.per_observation.resize(observations.size());
    auto invalid = [&] {
        out.valid = false;
        out.value = -kInf;
        return out;
    };
    if (tp.kind != spec.relationship || !tp.all_finite()) return invalid();
    try {
        for (std::size_t i = 0; i < observations.size(); ++i) {
            const auto& o = observations[i];
            double term = o.failed() ? log_failure_density(spec, tp, o.stress, o.cycles)
                                     : log_survival(spec, tp, o.stress, o.cycles);
            if (!(term >= kLogLikFloor) || !std::isfinite(term)) {
                out.per_observation[i] = -kInf;
                return invalid();
            }
            out.per_observation[i] = term;
        }
    } catch (const Error&) {
        return invalid();
    }
    out.value = pairwise_sum(out.per_observation);
    if (!std::isfinite(out.value)) return invalid();
    return out;
}

LogLikValue loglik(const ModelSpec& spec, const UspVector& usp, const SNDataset& data, const AnchorContext& ctx) {
    if (usp.kind != spec.relationship || !usp.all_finite()) {
        return {-kInf, std::vector<double>(data.size(), -kInf), false};
    }
    TpVector tp;
    try {
        tp = usp_to_tp(usp, ctx, spec.family);
    } catch (const Error&) {
        return {-kInf, std::vector<double>(data.size(), -kInf), false};
    }
    return loglik_tp(spec, tp, data.observations());
}

LogLikValue loglik(const ModelSpec& spec, const UspVector& usp, const SNDataset& data) {
    return loglik(spec, usp, data, AnchorContext::from(data));
}

double quantile_life(const ModelSpec& spec, const TpVector& tp, const AnchorContext& ctx, double s_e, double p) {
    if (!(s_e > 0.0)) throw DomainError("quantile requires a positive stress");
    const double zp = std_quantile(spec.family, p);
    if (spec.mode == Mode::Life) return std::exp(life_location(tp, s_e) + life_scale(tp, s_e) * zp);
    LogBracket bracket{std::log(ctx.n_low) - 40.0, std::log(ctx.n_high) + 40.0};
    return invert_h(tp, s_e * std::exp(-sigma_x(tp) * zp), bracket);
}

double quantile_life(const ModelSpec& spec, const UspVector& usp, const AnchorContext& ctx, double s_e, double p) {
    return quantile_life(spec, usp_to_tp(usp, ctx, spec.family), ctx, s_e, p);
}

}  // namespace snfit
