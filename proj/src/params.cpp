#include "snfit/params.hpp"

namespace snfit {

namespace {

using Names = std::span<const std::string_view>;

constexpr std::string_view kBasquinUsp[] = {"logMedianAtCenter", "logNegSlope", "logSigma"};
constexpr std::string_view kBasquinSp[] = {"t_Center", "beta1", "sigma"};
constexpr std::string_view kBasquinTp[] = {"beta0", "beta1", "sigma"};

constexpr std::string_view kCmUsp[] = {"logSLow", "logDeltaHighLow", "qlogisp", "logDeltaSlopes", "logSigmaX"};
constexpr std::string_view kCmSp[] = {"S_Low", "S_High", "b", "c", "sigma_X"};
constexpr std::string_view kCmTp[] = {"A_el", "A_pl", "b", "c", "sigma_X"};

constexpr std::string_view kZesUsp[] = {"logSLow", "logDeltaHighLow", "logDeltaSlopes", "logSigmaX"};
constexpr std::string_view kZesSp[] = {"S_Low", "S_High", "c", "sigma_X"};
constexpr std::string_view kZesTp[] = {"A_el", "A_pl", "c", "sigma_X"};

constexpr std::string_view kNishUsp[] = {"logSLow", "logDeltaHighLow", "qlogisp", "logDeltaSLowE", "logSigmaX"};
constexpr std::string_view kNishSp[] = {"S_Low", "S_Mid", "S_High", "E", "sigma_X"};
constexpr std::string_view kNishTp[] = {"A", "B", "C", "E", "sigma_X"};

constexpr std::string_view kRhUsp[] = {"logSLow", "logDeltaHighLow", "logDeltaSLowE", "logSigmaX"};
constexpr std::string_view kRhSp[] = {"S_Low", "S_High", "E", "sigma_X"};
constexpr std::string_view kRhTp[] = {"B_star", "C_star", "E_star", "sigma_X"};

constexpr std::string_view kBcUsp[] = {"logSigmaLow", "logSigmaHigh", "lambda", "logTLow", "logTHigh"};
constexpr std::string_view kBcSp[] = {"sigma_Low", "sigma_High", "lambda", "t_Low", "t_High"};
constexpr std::string_view kBcTp[] = {"beta0", "beta1", "lambda", "beta0_sigma", "beta1_sigma"};

Names pick(View view, Names usp, Names sp, Names tp) {
    switch (view) {
        case View::Usp: return usp;
        case View::Sp: return sp;
        case View::Tp:
        case View::Tpns: return tp;
    }
    return tp;
}

}  // namespace

Mode mode_of(RelationshipKind kind) noexcept {
    return (kind == RelationshipKind::Basquin || kind == RelationshipKind::BoxCoxLoglinearSigma) ? Mode::Life
                                                                                                  : Mode::Strength;
}

std::string to_string(RelationshipKind kind) {
    switch (kind) {
        case RelationshipKind::Basquin: return "basquin";
        case RelationshipKind::CoffinManson: return "coffin-manson";
        case RelationshipKind::CoffinMansonZeroElasticSlope: return "coffin-manson-zes";
        case RelationshipKind::Nishijima: return "nishijima";
        case RelationshipKind::RectangularHyperbola: return "rect-hyperbola";
        case RelationshipKind::BoxCoxLoglinearSigma: return "boxcox-loglinear-sigma";
    }
    return "?";
}

std::string display_name(RelationshipKind kind) {
    switch (kind) {
        case RelationshipKind::Basquin: return "Basquin (Inverse Power)";
        case RelationshipKind::CoffinManson: return "Coffin-Manson";
        case RelationshipKind::CoffinMansonZeroElasticSlope: return "Coffin-Manson Zero Elastic Slope";
        case RelationshipKind::Nishijima: return "Nishijima";
        case RelationshipKind::RectangularHyperbola: return "Rectangular Hyperbola";
        case RelationshipKind::BoxCoxLoglinearSigma: return "Box-Cox/Loglinear Sigma";
    }
    return "?";
}

RelationshipKind parse_relationship(std::string_view name) {
    for (auto k : kAllRelationships) {
        if (to_string(k) == name) return k;
    }
    throw DomainError("unknown relationship '" + std::string(name) +
                      "' (expected basquin, coffin-manson, coffin-manson-zes, nishijima, rect-hyperbola or "
                      "boxcox-loglinear-sigma)");
}

std::string to_string(Mode mode) { return mode == Mode::Life ? "life" : "strength"; }

std::string to_string(View view) {
    switch (view) {
        case View::Usp: return "usp";
        case View::Sp: return "sp";
        case View::Tp: return "tp";
        case View::Tpns: return "tpns";
    }
    return "?";
}

std::span<const std::string_view> coordinate_names(RelationshipKind kind, View view) {
    switch (kind) {
        case RelationshipKind::Basquin: return pick(view, kBasquinUsp, kBasquinSp, kBasquinTp);
        case RelationshipKind::CoffinManson: return pick(view, kCmUsp, kCmSp, kCmTp);
        case RelationshipKind::CoffinMansonZeroElasticSlope: return pick(view, kZesUsp, kZesSp, kZesTp);
        case RelationshipKind::Nishijima: return pick(view, kNishUsp, kNishSp, kNishTp);
        case RelationshipKind::RectangularHyperbola: return pick(view, kRhUsp, kRhSp, kRhTp);
        case RelationshipKind::BoxCoxLoglinearSigma: return pick(view, kBcUsp, kBcSp, kBcTp);
    }
    return {};
}

std::size_t dimension(RelationshipKind kind) noexcept { return coordinate_names(kind, View::Usp).size(); }

std::size_t coordinate_index(RelationshipKind kind, View view, std::string_view name) {
    auto names = coordinate_names(kind, view);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw DomainError("no coordinate '" + std::string(name) + "' in " + to_string(view) + " of " + to_string(kind));
}

}  // namespace snfit
