#include "snfit/reparam.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "snfit/optimize.hpp"
#include "snfit/relationships.hpp"

namespace snfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClip = 1e-12;
constexpr double kMaxLog = 709.0;

// log(e^a - e^b) given the positive gap a - b.
double log_diff_exp_gap(double a, double gap) { return a + std::log(-std::expm1(-gap)); }

double checked_exp(double log_value, const std::string& coordinate) {
    if (!(log_value < kMaxLog) || std::isnan(log_value)) {
        throw LimitRegionError(coordinate, "overflow computing traditional parameters (coordinate " + coordinate + ")");
    }
    return std::exp(log_value);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

void require_kind(RelationshipKind got, RelationshipKind want) {
    if (got != want) throw DomainError("expected " + to_string(want) + " parameters, got " + to_string(got));
}

// Clip a probability headed for qlogis; records a flag when it had to be moved.
double clipped_qlogis(double p, const std::string& coordinate, std::vector<LimitFlag>* flags) {
    if (p < kClip) {
        if (flags) flags->push_back({coordinate, -1, "probability clipped at 1e-12 before qlogis"});
        return qlogis(kClip);
    }
    if (p > 1.0 - kClip) {
        if (flags) flags->push_back({coordinate, +1, "probability clipped at 1-1e-12 before qlogis"});
        return qlogis(1.0 - kClip);
    }
    return qlogis(p);
}

// Coffin-Manson family core: b = chi * p with p = plogis(q) (p = 0 for the zero-elastic-slope model).
struct CmCore {
    double a_el, a_pl, b, c;
};

CmCore cm_core(double log_s_low, double log_delta_high_low, double q, bool zero_elastic, double log_delta_slopes,
               const AnchorContext& ctx) {
    const double span = ctx.log_n_span();
    const double delta_hl = checked_exp(log_delta_high_low, "logDeltaHighLow");
    const double log_s_high = log_s_low + delta_hl;
    const double chi = -delta_hl / span;
    const double p = zero_elastic ? 0.0 : plogis(q);
    const double pc = zero_elastic ? 1.0 : plogis(-q);
    const double b = chi * p;
    const double delta = checked_exp(log_delta_slopes, "logDeltaSlopes");
    const double c = chi - delta;
    const double b_minus_c = delta - chi * pc;  // > 0
    const double x_low = std::log(2.0 * ctx.n_low);
    const double x_high = std::log(2.0 * ctx.n_high);

    // Symmetric closed-form solutions of the two anchor equations; the exponent
    // gaps are known exactly, so each difference is formed without cancellation.
    const double log_den = log_diff_exp_gap(0.0, b_minus_c * span);
    const double log_a_el = log_diff_exp_gap(log_s_low - c * x_high, span * delta) -
                            (b_minus_c * x_high + log_den);
    const double log_a_pl = log_diff_exp_gap(log_s_high - b * x_low, -span * chi * pc) -
                            (-b_minus_c * x_low + log_den);
    const std::string culprit = log_delta_slopes > log_delta_high_low ? "logDeltaSlopes" : "logDeltaHighLow";
    CmCore out;
    out.a_el = checked_exp(log_a_el, culprit);
    out.a_pl = checked_exp(log_a_pl, culprit);
    out.b = b;
    out.c = c;
    // Subnormal coefficients lose bits and no longer determine the anchors.
    constexpr double kTiny = std::numeric_limits<double>::min();
    if (!std::isfinite(out.a_el) || !std::isfinite(out.a_pl) || !(out.a_el >= kTiny) || !(out.a_pl >= kTiny)) {
        throw LimitRegionError(culprit, "traditional parameters not representable (coordinate " + culprit + ")");
    }
    return out;
}

void require_stress_spread(const AnchorContext& ctx) {
    if (!(ctx.s_high_fail > ctx.s_low_fail)) {
        throw EstimabilityError("insufficient curvature information: all failures at a single stress level");
    }
}

void require_time_spread(const AnchorContext& ctx) {
    if (!(ctx.n_high > ctx.n_low)) {
        throw EstimabilityError(
            "insufficient curvature information: a single distinct failure time (n_low = n_high)");
    }
}

// Residual SD of the pooled OLS of log stress on log life; all rows treated as failures.
double pooled_sigma_x(const SNDataset& data, double log_span_s) {
    std::vector<double> x, y;
    for (const auto& o : data.observations()) {
        x.push_back(std::log(o.cycles));
        y.push_back(std::log(o.stress));
    }
    double sd = ols(x, y).residual_sd;
    if (!(sd > 0.0) || !std::isfinite(sd)) sd = std::max(0.1 * log_span_s, 0.01);
    return sd;
}

// OLS slopes of log stress on log life below/above the median lifetime.
std::pair<double, double> split_slopes(const SNDataset& data) {
    std::vector<Observation> rows(data.observations().begin(), data.observations().end());
    std::vector<double> cycles;
    for (const auto& o : rows) cycles.push_back(o.cycles);
    std::sort(cycles.begin(), cycles.end());
    const std::size_t n = cycles.size();
    const double median = n % 2 ? cycles[n / 2] : 0.5 * (cycles[n / 2 - 1] + cycles[n / 2]);
    std::vector<double> xl, yl, xu, yu;
    for (const auto& o : rows) {
        // Ties at the median go to the lower-lifetime half.
        if (o.cycles <= median) {
            xl.push_back(std::log(o.cycles));
            yl.push_back(std::log(o.stress));
        } else {
            xu.push_back(std::log(o.cycles));
            yu.push_back(std::log(o.stress));
        }
    }
    if (xl.size() < 2 || xu.size() < 2) throw EstimabilityError("insufficient failures for slope split");
    return {ols(xl, yl).slope, ols(xu, yu).slope};
}

}  // namespace

// ---------------------------------------------------------------------------

AnchorContext AnchorContext::from(const SNDataset& data) {
    const auto& a = data.anchors();
    AnchorContext ctx;
    ctx.n_low = a.n_low;
    ctx.n_high = a.n_high;
    ctx.n_mid = a.n_mid;
    ctx.s_low_fail = a.s_low_fail;
    ctx.s_high_fail = a.s_high_fail;
    double s_max = 0.0, sum = 0.0;
    for (const auto& o : data.observations()) {
        s_max = std::max(s_max, o.stress);
        sum += std::log(o.stress);
    }
    ctx.s_high_all = s_max;
    ctx.log_s_center = sum / static_cast<double>(data.size());
    return ctx;
}

double AnchorContext::log_n_span() const {
    double span = std::log(n_high) - std::log(n_low);
    if (!(span > 0.0)) {
        throw EstimabilityError("insufficient curvature information: degenerate anchors (n_low = n_high)");
    }
    return span;
}

double limit_slope(const AnchorContext& ctx, double s_low, double s_high) {
    return (std::log(s_low) - std::log(s_high)) / ctx.log_n_span();
}

OlsFit ols(std::span<const double> x, std::span<const double> y) {
    OlsFit fit;
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n) {
        fit.intercept = fit.slope = fit.residual_sd = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    fit.intercept = my - (std::isfinite(fit.slope) ? fit.slope : 0.0) * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - fit.intercept - (std::isfinite(fit.slope) ? fit.slope : 0.0) * x[i];
        rss += r * r;
    }
    fit.rss = rss;
    fit.residual_sd = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2)) : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

// --------------------------- Coffin-Manson ---------------------------------

TpVector cm_usp_to_tp(const UspVector& usp, const AnchorContext& ctx) {
    require_kind(usp.kind, RelationshipKind::CoffinManson);
    auto core = cm_core(usp[0], usp[1], usp[2], false, usp[3], ctx);
    return TpVector(usp.kind, vec({core.a_el, core.a_pl, core.b, core.c, checked_exp(usp[4], "logSigmaX")}));
}

UspVector cm_sp_to_usp(const SpVector& sp, const AnchorContext& ctx, std::vector<LimitFlag>* flags) {
    require_kind(sp.kind, RelationshipKind::CoffinManson);
    const double s_low = sp[0], s_high = sp[1], b = sp[2], c = sp[3], sigma = sp[4];
    const double log_delta = std::log(s_high) - std::log(s_low);
    if (!(log_delta > 0.0)) throw DomainError("outside concave-up region: S_High must exceed S_Low");
    const double chi = -log_delta / ctx.log_n_span();
    const double p = b / chi;
    if (!(p > 0.0 && p < 1.0)) throw DomainError("outside concave-up region: b/chi must lie in (0,1)");
    double q;
    if (p < kClip || p > 1.0 - kClip) {
        q = clipped_qlogis(p, "qlogisp", flags);
    } else {
        q = std::log(-b) - std::log(b - chi);
    }
    if (!(chi - c > 0.0)) throw DomainError("outside concave-up region: c must be below chi");
    return UspVector(sp.kind, vec({std::log(s_low), std::log(log_delta), q, std::log(chi - c), std::log(sigma)}));
}

UspVector cm_tp_to_usp(const TpVector& tp, const AnchorContext& ctx, std::vector<LimitFlag>* flags) {
    require_kind(tp.kind, RelationshipKind::CoffinManson);
    if (!(tp[1] > 0.0)) throw DomainError("outside concave-up region: A_pl = 0 puts b/chi on the boundary 1");
    if (!(tp[2] < 0.0)) throw DomainError("outside concave-up region: b = 0 puts b/chi on the boundary 0");
    const double s_low = std::exp(log_h(tp, ctx.n_high));
    const double s_high = std::exp(log_h(tp, ctx.n_low));
    return cm_sp_to_usp(SpVector(tp.kind, vec({s_low, s_high, tp[2], tp[3], tp[4]})), ctx, flags);
}

UspVector cm_initial_usp(const SNDataset& data) {
    const auto ctx = AnchorContext::from(data);
    require_stress_spread(ctx);
    require_time_spread(ctx);
    const double chi = limit_slope(ctx, ctx.s_low_fail, ctx.s_high_fail);
    auto [c, b] = split_slopes(data);
    if (!std::isfinite(b) || !std::isfinite(c) || std::fabs(b - c) <= 1e-12 * std::fabs(chi)) {
        b = 0.9 * chi;
        c = 1.1 * chi;
    } else {
        if (!(chi < b && b < 0.0)) b = chi * plogis(1.0);
        if (!(c < chi)) c = chi - 0.5 * std::fabs(chi);
    }
    const double sigma = pooled_sigma_x(data, std::log(ctx.s_high_fail / ctx.s_low_fail));
    SpVector sp(RelationshipKind::CoffinManson, vec({ctx.s_low_fail, ctx.s_high_fail, b, c, sigma}));
    return cm_sp_to_usp(sp, ctx);
}

TpnsVector cm_unscale_tp(const TpVector& tp, const ScalingMeta& meta) {
    require_kind(tp.kind, RelationshipKind::CoffinManson);
    const double b = tp[2], c = tp[3];
    return TpnsVector(tp.kind, vec({meta.s_max * tp[0] * std::pow(meta.n_max, -b),
                                    meta.s_max * tp[1] * std::pow(meta.n_max, -c), b, c, tp[4]}));
}

// ------------------- Coffin-Manson zero elastic slope -----------------------

TpVector cmzes_usp_to_tp(const UspVector& usp, const AnchorContext& ctx) {
    require_kind(usp.kind, RelationshipKind::CoffinMansonZeroElasticSlope);
    auto core = cm_core(usp[0], usp[1], 0.0, true, usp[2], ctx);
    return TpVector(usp.kind, vec({core.a_el, core.a_pl, core.c, checked_exp(usp[3], "logSigmaX")}));
}

UspVector cmzes_tp_to_usp(const TpVector& tp, const AnchorContext& ctx) {
    require_kind(tp.kind, RelationshipKind::CoffinMansonZeroElasticSlope);
    const double log_s_low = log_h(tp, ctx.n_high);
    const double log_s_high = log_h(tp, ctx.n_low);
    const double log_delta = log_s_high - log_s_low;
    if (!(log_delta > 0.0)) throw DomainError("outside concave-up region: S_High must exceed S_Low");
    const double chi = -log_delta / ctx.log_n_span();
    if (!(chi - tp[2] > 0.0)) throw DomainError("outside concave-up region: c must be below chi");
    return UspVector(tp.kind, vec({log_s_low, std::log(log_delta), std::log(chi - tp[2]), std::log(tp[3])}));
}

UspVector cmzes_initial_usp(const SNDataset& data) {
    const auto ctx = AnchorContext::from(data);
    require_stress_spread(ctx);
    require_time_spread(ctx);
    const double chi = limit_slope(ctx, ctx.s_low_fail, ctx.s_high_fail);
    double c = split_slopes(data).first;
    if (!std::isfinite(c) || !(c < chi)) c = chi - 0.5 * std::fabs(chi);
    const double log_delta = std::log(ctx.s_high_fail / ctx.s_low_fail);
    const double sigma = pooled_sigma_x(data, log_delta);
    return UspVector(RelationshipKind::CoffinMansonZeroElasticSlope,
                     vec({std::log(ctx.s_low_fail), std::log(log_delta), std::log(chi - c), std::log(sigma)}));
}

// ------------------------------ Nishijima -----------------------------------

namespace {

// Offsets above E of the mid-level reference points.
struct MidLevels {
    double upper;  // log S_MidU - E (straight-line limit)
    double lower;  // log S_MidL - E (rectangular-hyperbola limit)
    double gap;    // upper - lower
};

MidLevels mid_levels(double a, double delta_hl) {
    const double c3 = a + delta_hl;
    MidLevels m;
    m.upper = 0.5 * (a + c3);
    m.lower = 2.0 * a * c3 / (a + c3);
    m.gap = delta_hl * delta_hl / (2.0 * (a + c3));
    return m;
}

}  // namespace

TpVector nishijima_usp_to_tp(const UspVector& usp, const AnchorContext& ctx) {
    require_kind(usp.kind, RelationshipKind::Nishijima);
    const double span = ctx.log_n_span();
    const double log_s_low = usp[0];
    const double delta_hl = checked_exp(usp[1], "logDeltaHighLow");
    const double q = usp[2];
    const double a = checked_exp(usp[3], "logDeltaSLowE");  // log S_Low - E
    const double e = log_s_low - a;
    const double c3 = a + delta_hl;                          // log S_High - E
    const auto mid = mid_levels(a, delta_hl);
    // log S_Mid - E, measured from whichever reference is closer.
    const double m = q > 0.0 ? mid.lower + plogis(-q) * mid.gap : mid.upper - plogis(q) * mid.gap;
    // Eliminating A and B from the three anchor equations isolates C.
    const double c = checked_exp(q + std::log(mid.lower) + std::log(m), "qlogisp");
    const double a_coef = delta_hl * (1.0 + c / (a * c3)) / span;
    const double b_coef = log_s_low - c / a + a_coef * std::log(ctx.n_high);
    if (!std::isfinite(a_coef) || !std::isfinite(b_coef)) {
        throw LimitRegionError("qlogisp", "traditional parameters not representable (coordinate qlogisp)");
    }
    return TpVector(usp.kind, vec({a_coef, b_coef, c, e, checked_exp(usp[4], "logSigmaX")}));
}

UspVector nishijima_sp_to_usp(const SpVector& sp, const AnchorContext& ctx, std::vector<LimitFlag>* flags) {
    require_kind(sp.kind, RelationshipKind::Nishijima);
    ctx.log_n_span();
    const double l_low = std::log(sp[0]), l_mid = std::log(sp[1]), l_high = std::log(sp[2]), e = sp[3];
    if (!(l_low - e > 0.0) || !(l_high > l_low)) {
        throw DomainError("Nishijima ordering violated: need exp(E) < S_Low < S_High");
    }
    const double log_mid_u = 0.5 * (l_high + l_low);
    const double log_mid_l = 2.0 * (l_low - e) * (l_high - e) / (l_low + l_high - 2.0 * e) + e;
    if (!(l_mid > log_mid_l && l_mid < log_mid_u)) {
        throw DomainError("limiting-model region: S_Mid outside (S_MidL, S_MidU)");
    }
    const double p = (log_mid_u - l_mid) / (log_mid_u - log_mid_l);
    const double q = clipped_qlogis(p, "qlogisp", flags);
    return UspVector(sp.kind, vec({l_low, std::log(l_high - l_low), q, std::log(l_low - e), std::log(sp[4])}));
}

UspVector nishijima_tp_to_usp(const TpVector& tp, const AnchorContext& ctx, std::vector<LimitFlag>* flags) {
    require_kind(tp.kind, RelationshipKind::Nishijima);
    const double span = ctx.log_n_span();
    const double e = tp[3];
    // Heights above the horizontal asymptote at the three anchor lives.
    const double a = log_h(tp, ctx.n_high) - e;
    const double m = log_h(tp, ctx.n_mid) - e;
    const double c3 = log_h(tp, ctx.n_low) - e;
    if (!(a > 0.0) || !(c3 > a)) throw DomainError("limiting-model region: anchors not ordered");
    const double c = tp[2];
    // Same quantities as the anchor differences, without subtracting nearby logs.
    const double delta_hl = tp[0] * span / (1.0 + c / (a * c3));
    const double mid_lower = 2.0 * a * c3 / (a + c3);
    double q = std::log(c) - std::log(mid_lower) - std::log(m);
    const double q_clip = qlogis(1.0 - kClip);
    if (std::fabs(q) > q_clip) {
        if (flags) flags->push_back({"qlogisp", q > 0 ? +1 : -1, "probability clipped before qlogis"});
        q = std::copysign(q_clip, q);
    }
    return UspVector(tp.kind, vec({e + a, std::log(delta_hl), q, std::log(a), std::log(tp[4])}));
}

UspVector nishijima_initial_usp(const SNDataset& data) {
    const auto ctx = AnchorContext::from(data);
    require_stress_spread(ctx);
    require_time_spread(ctx);
    const double l_low = std::log(ctx.s_low_fail), l_high = std::log(ctx.s_high_fail);
    const double e = l_low - 0.1 * (l_high - l_low);
    const double log_mid_u = 0.5 * (l_high + l_low);
    const double log_mid_l = 2.0 * (l_low - e) * (l_high - e) / (l_low + l_high - 2.0 * e) + e;
    const double s_mid = std::exp(0.5 * (log_mid_l + log_mid_u));
    const double sigma = pooled_sigma_x(data, l_high - l_low);
    return nishijima_sp_to_usp(
        SpVector(RelationshipKind::Nishijima, vec({ctx.s_low_fail, s_mid, ctx.s_high_fail, e, sigma})), ctx);
}

TpnsVector nishijima_unscale_tp(const TpVector& tp, const ScalingMeta& meta) {
    require_kind(tp.kind, RelationshipKind::Nishijima);
    const double log_s = std::log(meta.s_max), log_n = std::log(meta.n_max);
    return TpnsVector(tp.kind, vec({tp[0], tp[1] + log_s + tp[0] * log_n, tp[2], tp[3] + log_s, tp[4]}));
}

// -------------------------- Rectangular hyperbola ---------------------------

TpVector recthyp_usp_to_tp(const UspVector& usp, const AnchorContext& ctx) {
    require_kind(usp.kind, RelationshipKind::RectangularHyperbola);
    const double span = ctx.log_n_span();
    const double log_s_low = usp[0];
    const double delta_hl = checked_exp(usp[1], "logDeltaHighLow");
    const double a = checked_exp(usp[2], "logDeltaSLowE");
    const double c3 = a + delta_hl;
    // Hyperbola through (n_high, S_Low) and (n_low, S_High) with asymptote E.
    const double c_star = a * c3 * span / delta_hl;
    const double b_star = std::log(ctx.n_low) - a * span / delta_hl;
    if (!std::isfinite(c_star) || !std::isfinite(b_star)) {
        throw LimitRegionError("logDeltaHighLow", "traditional parameters not representable (coordinate logDeltaHighLow)");
    }
    return TpVector(usp.kind, vec({b_star, c_star, log_s_low - a, checked_exp(usp[3], "logSigmaX")}));
}

UspVector recthyp_tp_to_usp(const TpVector& tp, const AnchorContext& ctx) {
    require_kind(tp.kind, RelationshipKind::RectangularHyperbola);
    const double span = ctx.log_n_span();
    const double b = tp[0], c = tp[1], e = tp[2];
    const double dh = std::log(ctx.n_high) - b, dl = std::log(ctx.n_low) - b;
    if (!(dl > 0.0)) throw DomainError("rectangular hyperbola: anchors must lie on the decreasing branch");
    const double a = c / dh;
    const double delta_hl = c * span / (dh * dl);
    return UspVector(tp.kind, vec({e + a, std::log(delta_hl), std::log(a), std::log(tp[3])}));
}

UspVector recthyp_initial_usp(const SNDataset& data) {
    const auto ctx = AnchorContext::from(data);
    require_stress_spread(ctx);
    require_time_spread(ctx);
    const double l_low = std::log(ctx.s_low_fail), l_high = std::log(ctx.s_high_fail);
    const double delta = l_high - l_low;
    const double sigma = pooled_sigma_x(data, delta);
    return UspVector(RelationshipKind::RectangularHyperbola,
                     vec({l_low, std::log(delta), std::log(0.1 * delta), std::log(sigma)}));
}

// -------------------------------- Basquin -----------------------------------

TpVector basquin_usp_to_tp(const UspVector& usp, const AnchorContext& ctx) {
    require_kind(usp.kind, RelationshipKind::Basquin);
    const double beta1 = -checked_exp(usp[1], "logNegSlope");
    return TpVector(usp.kind, vec({usp[0] - beta1 * ctx.log_s_center, beta1, checked_exp(usp[2], "logSigma")}));
}

UspVector basquin_tp_to_usp(const TpVector& tp, const AnchorContext& ctx) {
    require_kind(tp.kind, RelationshipKind::Basquin);
    if (!(tp[1] < 0.0)) throw DomainError("Basquin slope must be negative");
    return UspVector(tp.kind, vec({tp[0] + tp[1] * ctx.log_s_center, std::log(-tp[1]), std::log(tp[2])}));
}

UspVector basquin_initial_usp(const SNDataset& data) {
    const auto ctx = AnchorContext::from(data);
    std::vector<double> x, y;
    for (const auto& o : data.observations()) {
        x.push_back(std::log(o.stress));
        y.push_back(std::log(o.cycles));
    }
    auto fit = ols(x, y);
    if (!std::isfinite(fit.slope)) {
        throw EstimabilityError("insufficient curvature information: all observations at a single stress level");
    }
    double beta1 = fit.slope < 0.0 ? fit.slope : -1.0;
    double sigma = fit.residual_sd > 0.0 && std::isfinite(fit.residual_sd) ? fit.residual_sd : 0.5;
    const double center = fit.intercept + fit.slope * ctx.log_s_center;  // mean log life
    return UspVector(RelationshipKind::Basquin, vec({center, std::log(-beta1), std::log(sigma)}));
}

// ------------------------- Box-Cox / loglinear sigma ------------------------

TpVector boxcox_usp_to_tp(const UspVector& usp, const AnchorContext& ctx, Family family) {
    require_kind(usp.kind, RelationshipKind::BoxCoxLoglinearSigma);
    const double s_low = ctx.s_low_fail, s_high = ctx.s_high_all;
    if (!(s_high > s_low)) {
        throw EstimabilityError("insufficient curvature information: S_Low = S_High makes the Box-Cox map singular");
    }
    const double log_sig_low = usp[0], log_sig_high = usp[1], lambda = usp[2];
    const double log_t_low = usp[3], log_t_high = usp[4];
    const double ls_low = std::log(s_low), ls_high = std::log(s_high);
    const double b1s = (log_sig_high - log_sig_low) / (ls_low - ls_high);
    const double b0s = log_sig_low - b1s * ls_high;
    const double z50 = std_quantile(family, 0.5);
    const double sig_low = checked_exp(log_sig_low, "logSigmaLow");
    const double sig_high = checked_exp(log_sig_high, "logSigmaHigh");
    const double nu_low = boxcox_nu(s_low, lambda), nu_high = boxcox_nu(s_high, lambda);
    const double b1 = ((log_t_high - log_t_low) - z50 * (sig_high - sig_low)) / (nu_low - nu_high);
    const double b0 = log_t_low - b1 * nu_high - z50 * sig_low;
    if (!std::isfinite(b0) || !std::isfinite(b1)) {
        throw LimitRegionError("lambda", "traditional parameters not representable (coordinate lambda)");
    }
    return TpVector(usp.kind, vec({b0, b1, lambda, b0s, b1s}));
}

UspVector boxcox_tp_to_usp(const TpVector& tp, const AnchorContext& ctx, Family family) {
    require_kind(tp.kind, RelationshipKind::BoxCoxLoglinearSigma);
    const double s_low = ctx.s_low_fail, s_high = ctx.s_high_all;
    const double b0 = tp[0], b1 = tp[1], lambda = tp[2], b0s = tp[3], b1s = tp[4];
    const double log_sig_low = b0s + b1s * std::log(s_high);
    const double log_sig_high = b0s + b1s * std::log(s_low);
    const double z50 = std_quantile(family, 0.5);
    const double log_t_low = b0 + b1 * boxcox_nu(s_high, lambda) + z50 * std::exp(log_sig_low);
    const double log_t_high = b0 + b1 * boxcox_nu(s_low, lambda) + z50 * std::exp(log_sig_high);
    return UspVector(tp.kind, vec({log_sig_low, log_sig_high, lambda, log_t_low, log_t_high}));
}

namespace {

// ML fit of a location-scale law to a sample treated as fully observed; returns sigma.
double single_distribution_sigma(std::span<const double> y, Family family) {
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (family == Family::Lognormal) return sd;
    auto loglik = [&](const Eigen::VectorXd& th) {
        const double sigma = std::exp(th[1]);
        double s = 0.0;
        for (double v : y) s += std_log_pdf(family, (v - th[0]) / sigma) - th[1];
        return s;
    };
    Eigen::VectorXd x0(2);
    x0 << mean, std::log(sd);
    optim::SimplexOptions opts;
    opts.initial_step = 0.2;
    opts.x_tolerance = 1e-8;
    auto r = optim::nelder_mead(loglik, x0, opts);
    return std::exp(r.x[1]);
}

}  // namespace

UspVector boxcox_initial_usp(const SNDataset& data, Family family) {
    const auto ctx = AnchorContext::from(data);
    if (data.size() < 5) throw EstimabilityError("Box-Cox initial values need at least 5 observations");
    std::vector<double> s, ls, ln;
    for (const auto& o : data.observations()) {
        s.push_back(o.stress);
        ls.push_back(std::log(o.stress));
        ln.push_back(std::log(o.cycles));
    }
    auto loglog = ols(ls, ln);
    if (!std::isfinite(loglog.slope)) {
        throw EstimabilityError("insufficient curvature information: all observations at a single stress level");
    }
    if (!(ctx.s_high_all > ctx.s_low_fail)) {
        throw EstimabilityError("insufficient curvature information: S_Low = S_High makes the Box-Cox map singular");
    }

    // Profile the NLS fit of log N ~ nu(S; lambda) over lambda with inner OLS.
    auto rss_at = [&](double lambda) {
        std::vector<double> nu(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) nu[i] = boxcox_nu(s[i], lambda);
        auto f = ols(nu, ln);
        return std::isfinite(f.rss) && std::isfinite(f.slope) ? f.rss : kInf;
    };
    double best_lambda = 0.0, best_rss = rss_at(0.0);
    const double rss0 = best_rss;
    for (int i = 0; i <= 80; ++i) {
        double lam = -5.0 + 8.0 * i / 80.0;
        double r = rss_at(lam);
        if (r < best_rss) {
            best_rss = r;
            best_lambda = lam;
        }
    }
    {
        double lo = std::max(-5.0, best_lambda - 0.1), hi = std::min(3.0, best_lambda + 0.1);
        auto [lam, r] = boost::math::tools::brent_find_minima(rss_at, lo, hi, 40);
        if (r < best_rss) {
            best_rss = r;
            best_lambda = lam;
        }
    }
    if (!(best_rss < rss0)) best_lambda = 0.0;  // no improvement over the log-log start
    std::vector<double> nu(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) nu[i] = boxcox_nu(s[i], best_lambda);
    auto nls = ols(nu, ln);

    // Spread in each stress half, ties at the median stress to the lower half.
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::vector<double> low_half, high_half;
    for (std::size_t i = 0; i < n; ++i) {
        double resid = ln[i] - nls.intercept - nls.slope * nu[i];
        (s[i] <= median ? low_half : high_half).push_back(resid);
    }
    if (low_half.size() < 2 || high_half.size() < 2) {
        throw EstimabilityError("fewer than 2 observations in a stress half for Box-Cox sigma initial values");
    }
    double fallback = loglog.residual_sd > 0.0 && std::isfinite(loglog.residual_sd) ? loglog.residual_sd : 0.5;
    double sig_low = single_distribution_sigma(high_half, family);
    double sig_high = single_distribution_sigma(low_half, family);
    if (!(sig_low > 0.0) || !std::isfinite(sig_low)) sig_low = fallback;
    if (!(sig_high > 0.0) || !std::isfinite(sig_high)) sig_high = fallback;

    const double z50 = std_quantile(family, 0.5);
    const double log_t_low = nls.intercept + nls.slope * boxcox_nu(ctx.s_high_all, best_lambda) + z50 * sig_low;
    const double log_t_high = nls.intercept + nls.slope * boxcox_nu(ctx.s_low_fail, best_lambda) + z50 * sig_high;
    return UspVector(RelationshipKind::BoxCoxLoglinearSigma,
                     vec({std::log(sig_low), std::log(sig_high), best_lambda, log_t_low, log_t_high}));
}

TpnsVector boxcox_unscale_tp(const TpVector& tp, const ScalingMeta& meta) {
    require_kind(tp.kind, RelationshipKind::BoxCoxLoglinearSigma);
    const double lambda = tp[2];
    const double b1 = tp[1] / std::pow(meta.s_max, lambda);
    const double b0 = std::log(meta.n_max) + tp[0] - b1 * boxcox_nu(meta.s_max, lambda);
    return TpnsVector(tp.kind, vec({b0, b1, lambda, tp[3] - tp[4] * std::log(meta.s_max), tp[4]}));
}

// ------------------------------- dispatch -----------------------------------

TpVector usp_to_tp(const UspVector& usp, const AnchorContext& ctx, Family family) {
    switch (usp.kind) {
        case RelationshipKind::Basquin: return basquin_usp_to_tp(usp, ctx);
        case RelationshipKind::CoffinManson: return cm_usp_to_tp(usp, ctx);
        case RelationshipKind::CoffinMansonZeroElasticSlope: return cmzes_usp_to_tp(usp, ctx);
        case RelationshipKind::Nishijima: return nishijima_usp_to_tp(usp, ctx);
        case RelationshipKind::RectangularHyperbola: return recthyp_usp_to_tp(usp, ctx);
        case RelationshipKind::BoxCoxLoglinearSigma: return boxcox_usp_to_tp(usp, ctx, family);
    }
    throw DomainError("unknown relationship");
}

UspVector tp_to_usp(const TpVector& tp, const AnchorContext& ctx, Family family, std::vector<LimitFlag>* flags) {
    switch (tp.kind) {
        case RelationshipKind::Basquin: return basquin_tp_to_usp(tp, ctx);
        case RelationshipKind::CoffinManson: return cm_tp_to_usp(tp, ctx, flags);
        case RelationshipKind::CoffinMansonZeroElasticSlope: return cmzes_tp_to_usp(tp, ctx);
        case RelationshipKind::Nishijima: return nishijima_tp_to_usp(tp, ctx, flags);
        case RelationshipKind::RectangularHyperbola: return recthyp_tp_to_usp(tp, ctx);
        case RelationshipKind::BoxCoxLoglinearSigma: return boxcox_tp_to_usp(tp, ctx, family);
    }
    throw DomainError("unknown relationship");
}

SpVector usp_to_sp(const UspVector& usp, const AnchorContext& ctx, Family family) {
    const auto tp = usp_to_tp(usp, ctx, family);
    switch (usp.kind) {
        case RelationshipKind::Basquin: return SpVector(usp.kind, vec({std::exp(usp[0]), tp[1], tp[2]}));
        case RelationshipKind::CoffinManson: {
            double s_low = std::exp(usp[0]), s_high = std::exp(usp[0] + std::exp(usp[1]));
            return SpVector(usp.kind, vec({s_low, s_high, tp[2], tp[3], tp[4]}));
        }
        case RelationshipKind::CoffinMansonZeroElasticSlope: {
            double s_low = std::exp(usp[0]), s_high = std::exp(usp[0] + std::exp(usp[1]));
            return SpVector(usp.kind, vec({s_low, s_high, tp[2], tp[3]}));
        }
        case RelationshipKind::Nishijima: {
            double s_low = std::exp(usp[0]), s_high = std::exp(usp[0] + std::exp(usp[1]));
            return SpVector(usp.kind, vec({s_low, eval_h(tp, ctx.n_mid), s_high, tp[3], tp[4]}));
        }
        case RelationshipKind::RectangularHyperbola: {
            double s_low = std::exp(usp[0]), s_high = std::exp(usp[0] + std::exp(usp[1]));
            return SpVector(usp.kind, vec({s_low, s_high, tp[2], tp[3]}));
        }
        case RelationshipKind::BoxCoxLoglinearSigma:
            return SpVector(usp.kind,
                            vec({std::exp(usp[0]), std::exp(usp[1]), usp[2], std::exp(usp[3]), std::exp(usp[4])}));
    }
    throw DomainError("unknown relationship");
}

TpnsVector unscale_tp(const TpVector& tp, const ScalingMeta& meta) {
    switch (tp.kind) {
        case RelationshipKind::Basquin: {
            Eigen::VectorXd v = tp.values;
            v[0] = std::log(meta.n_max) + tp[0] - tp[1] * std::log(meta.s_max);
            return TpnsVector(tp.kind, v);
        }
        case RelationshipKind::CoffinManson: return cm_unscale_tp(tp, meta);
        case RelationshipKind::CoffinMansonZeroElasticSlope:
            return TpnsVector(tp.kind, vec({meta.s_max * tp[0], meta.s_max * tp[1] * std::pow(meta.n_max, -tp[2]),
                                            tp[2], tp[3]}));
        case RelationshipKind::Nishijima: return nishijima_unscale_tp(tp, meta);
        case RelationshipKind::RectangularHyperbola:
            return TpnsVector(tp.kind,
                              vec({tp[0] + std::log(meta.n_max), tp[1], tp[2] + std::log(meta.s_max), tp[3]}));
        case RelationshipKind::BoxCoxLoglinearSigma: return boxcox_unscale_tp(tp, meta);
    }
    throw DomainError("unknown relationship");
}

TpVector tpns_as_tp(const TpnsVector& tpns) { return TpVector(tpns.kind, tpns.values); }

UspVector initial_usp(RelationshipKind kind, const SNDataset& data, Family family) {
    switch (kind) {
        case RelationshipKind::Basquin: return basquin_initial_usp(data);
        case RelationshipKind::CoffinManson: return cm_initial_usp(data);
        case RelationshipKind::CoffinMansonZeroElasticSlope: return cmzes_initial_usp(data);
        case RelationshipKind::Nishijima: return nishijima_initial_usp(data);
        case RelationshipKind::RectangularHyperbola: return recthyp_initial_usp(data);
        case RelationshipKind::BoxCoxLoglinearSigma: return boxcox_initial_usp(data, family);
    }
    throw DomainError("unknown relationship");
}

}  // namespace snfit
