#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "snfit/error.hpp"

namespace snfit {

enum class RelationshipKind {
    Basquin,
    CoffinManson,
    CoffinMansonZeroElasticSlope,
    Nishijima,
    RectangularHyperbola,
    BoxCoxLoglinearSigma,
};

inline constexpr std::array<RelationshipKind, 6> kAllRelationships{
    RelationshipKind::Basquin,   RelationshipKind::BoxCoxLoglinearSigma,
    RelationshipKind::CoffinManson, RelationshipKind::CoffinMansonZeroElasticSlope,
    RelationshipKind::Nishijima, RelationshipKind::RectangularHyperbola,
};

/// Whether the model is written for fatigue life (inducing strength) or for
/// fatigue strength (inducing life). Fixed by the relationship.
enum class Mode { Life, Strength };

Mode mode_of(RelationshipKind kind) noexcept;
std::string to_string(RelationshipKind kind);    // CLI/JSON name
std::string display_name(RelationshipKind kind);  // leaderboard name
RelationshipKind parse_relationship(std::string_view name);
std::string to_string(Mode mode);

/// Parameter views of one model.
///   Usp  - unrestricted stable parameters (optimizer coordinates)
///   Sp   - stable parameters (features of the fitted curve)
///   Tp   - traditional parameters on the scaled data
///   Tpns - traditional parameters as if the data had not been scaled
enum class View { Usp, Sp, Tp, Tpns };

std::string to_string(View view);
std::span<const std::string_view> coordinate_names(RelationshipKind kind, View view);
std::size_t dimension(RelationshipKind kind) noexcept;

template <View V>
struct ParamVector {
    RelationshipKind kind = RelationshipKind::Basquin;
    Eigen::VectorXd values;

    ParamVector() = default;
    ParamVector(RelationshipKind k, Eigen::VectorXd v) : kind(k), values(std::move(v)) {
        if (static_cast<std::size_t>(values.size()) != dimension(kind)) {
            throw DomainError("parameter vector for " + to_string(kind) + " must have " +
                              std::to_string(dimension(kind)) + " entries");
        }
    }

    static constexpr View view = V;

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
    double& operator[](std::size_t i) { return values[static_cast<Eigen::Index>(i)]; }

    std::span<const std::string_view> names() const { return coordinate_names(kind, V); }

    std::size_t index_of(std::string_view name) const {
        auto n = names();
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (n[i] == name) return i;
        }
        throw DomainError("no coordinate '" + std::string(name) + "' in " + to_string(V) + " of " + to_string(kind));
    }
    double at(std::string_view name) const { return (*this)[index_of(name)]; }

    bool all_finite() const { return values.allFinite(); }
};

using UspVector = ParamVector<View::Usp>;
using SpVector = ParamVector<View::Sp>;
using TpVector = ParamVector<View::Tp>;
using TpnsVector = ParamVector<View::Tpns>;

/// Index of a named coordinate in a view, or throws DomainError.
std::size_t coordinate_index(RelationshipKind kind, View view, std::string_view name);

}  // namespace snfit
