#pragma once

#include "json.hpp"

#include "snfit/bayesprep.hpp"
#include "snfit/estimate.hpp"

namespace snfit {

using Json = nlohmann::ordered_json;

template <View V>
Json to_json(const ParamVector<V>& p) {
    Json values = Json::object();
    auto names = p.names();
    for (std::size_t i = 0; i < p.size(); ++i) values[std::string(names[i])] = p[i];
    return Json{{"kind", to_string(p.kind)}, {"view", to_string(V)}, {"values", values}};
}

/// Reads {"kind", "values": {name: value}}; the view tag, when present, must match.
template <View V>
ParamVector<V> param_from_json(const Json& j);

/// Values by coordinate name (object) or in coordinate order (array).
TpVector tp_from_values(RelationshipKind kind, const Json& values);

Json to_json(const SNDataset& data);
SNDataset dataset_from_json(const Json& j);

Json to_json(const Eigen::MatrixXd& m);  // row-major, NaN as null
Json to_json(const ConvergenceDiag& d);
Json to_json(const FitResult& fit);
/// Rebuilds the fit at the stored USP point (diagnostics recomputed).
FitResult fit_from_json(const Json& j);

Json to_json(const ProfileTrace& t);
Json to_json(const PriorSpec& p, const std::vector<UspVector>& inits = {});
Json to_json(const std::vector<QuantileBandRow>& rows, double p, double level);

}  // namespace snfit
