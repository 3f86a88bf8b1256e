#pragma once

#include <span>
#include <string>
#include <vector>

#include "snfit/dataset.hpp"
#include "snfit/distributions.hpp"
#include "snfit/params.hpp"

namespace snfit {

/// Data anchors every stable parameterization is defined against.
struct AnchorContext {
    double n_low = 0.0;
    double n_high = 0.0;
    double n_mid = 0.0;
    double s_low_fail = 0.0;   // S_Low of the Box-Cox model, min failure stress
    double s_high_fail = 0.0;
    double s_high_all = 0.0;   // S_High of the Box-Cox model, max stress in the data
    double log_s_center = 0.0; // mean log stress over all observations (Basquin centering)

    static AnchorContext from(const SNDataset& data);
    double log_n_span() const;  // log n_high - log n_low; throws EstimabilityError when 0
};

/// A coordinate pushed to (or clipped at) the edge of its range.
struct LimitFlag {
    std::string coordinate;
    int direction = 0;  // -1 toward -inf, +1 toward +inf, 0 unspecified
    std::string message;
};

/// Slope of the line joining (n_high, s_low) and (n_low, s_high) on log-log axes.
double limit_slope(const AnchorContext& ctx, double s_low, double s_high);

// Generic dispatch over all six relationships.
TpVector usp_to_tp(const UspVector& usp, const AnchorContext& ctx, Family family);
UspVector tp_to_usp(const TpVector& tp, const AnchorContext& ctx, Family family,
                    std::vector<LimitFlag>* flags = nullptr);
SpVector usp_to_sp(const UspVector& usp, const AnchorContext& ctx, Family family);
TpnsVector unscale_tp(const TpVector& tp, const ScalingMeta& meta);
/// Reinterpret a TPNS vector as traditional parameters on raw units.
TpVector tpns_as_tp(const TpnsVector& tpns);
UspVector initial_usp(RelationshipKind kind, const SNDataset& data, Family family);

// Coffin-Manson.
TpVector cm_usp_to_tp(const UspVector& usp, const AnchorContext& ctx);
UspVector cm_tp_to_usp(const TpVector& tp, const AnchorContext& ctx, std::vector<LimitFlag>* flags = nullptr);
UspVector cm_sp_to_usp(const SpVector& sp, const AnchorContext& ctx, std::vector<LimitFlag>* flags = nullptr);
UspVector cm_initial_usp(const SNDataset& data);
TpnsVector cm_unscale_tp(const TpVector& tp, const ScalingMeta& meta);

// Coffin-Manson zero elastic slope (b fixed at 0).
TpVector cmzes_usp_to_tp(const UspVector& usp, const AnchorContext& ctx);
UspVector cmzes_tp_to_usp(const TpVector& tp, const AnchorContext& ctx);
UspVector cmzes_initial_usp(const SNDataset& data);

// Nishijima.
TpVector nishijima_usp_to_tp(const UspVector& usp, const AnchorContext& ctx);
UspVector nishijima_tp_to_usp(const TpVector& tp, const AnchorContext& ctx,
                              std::vector<LimitFlag>* flags = nullptr);
UspVector nishijima_sp_to_usp(const SpVector& sp, const AnchorContext& ctx, std::vector<LimitFlag>* flags = nullptr);
UspVector nishijima_initial_usp(const SNDataset& data);
TpnsVector nishijima_unscale_tp(const TpVector& tp, const ScalingMeta& meta);

// Rectangular hyperbola.
TpVector recthyp_usp_to_tp(const UspVector& usp, const AnchorContext& ctx);
UspVector recthyp_tp_to_usp(const TpVector& tp, const AnchorContext& ctx);
UspVector recthyp_initial_usp(const SNDataset& data);

// Basquin, centred at the mean log stress.
TpVector basquin_usp_to_tp(const UspVector& usp, const AnchorContext& ctx);
UspVector basquin_tp_to_usp(const TpVector& tp, const AnchorContext& ctx);
UspVector basquin_initial_usp(const SNDataset& data);

// Box-Cox/loglinear-sigma.
TpVector boxcox_usp_to_tp(const UspVector& usp, const AnchorContext& ctx, Family family);
UspVector boxcox_tp_to_usp(const TpVector& tp, const AnchorContext& ctx, Family family);
UspVector boxcox_initial_usp(const SNDataset& data, Family family);
TpnsVector boxcox_unscale_tp(const TpVector& tp, const ScalingMeta& meta);

/// Ordinary least squares y = a + b x.
struct OlsFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual_sd = 0.0;  // n - 2 denominator
    double rss = 0.0;
};
OlsFit ols(std::span<const double> x, std::span<const double> y);

}  // namespace snfit
