#include "snfit/serialize.hpp"

#include <cmath>

namespace snfit {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
    return a;
}

View parse_view(const std::string& s) {
    for (auto v : {View::Usp, View::Sp, View::Tp, View::Tpns}) {
        if (to_string(v) == s) return v;
    }
    throw ParseError("unknown parameter view '" + s + "'");
}

Eigen::VectorXd values_from_json(RelationshipKind kind, View view, const Json& values) {
    auto names = coordinate_names(kind, view);
    Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
    if (values.is_array()) {
        if (values.size() != names.size()) {
            throw ParseError(to_string(kind) + " expects " + std::to_string(names.size()) + " values");
        }
        for (std::size_t i = 0; i < names.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i].get<double>();
        return v;
    }
    if (!values.is_object()) throw ParseError("parameter values must be an object or an array");
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto key = std::string(names[i]);
        if (!values.contains(key)) throw ParseError("missing parameter '" + key + "' for " + to_string(kind));
        v[static_cast<Eigen::Index>(i)] = values.at(key).get<double>();
    }
    for (auto it = values.begin(); it != values.end(); ++it) {
        bool known = false;
        for (auto n : names) known = known || n == it.key();
        if (!known) throw ParseError("unknown parameter '" + it.key() + "' for " + to_string(kind));
    }
    return v;
}

}  // namespace

template <View V>
ParamVector<V> param_from_json(const Json& j) {
    auto kind = parse_relationship(j.at("kind").get<std::string>());
    if (j.contains("view") && parse_view(j.at("view").get<std::string>()) != V) {
        throw ParseError("expected a " + to_string(V) + " parameter vector");
    }
    return ParamVector<V>(kind, values_from_json(kind, V, j.at("values")));
}

template UspVector param_from_json<View::Usp>(const Json&);
template SpVector param_from_json<View::Sp>(const Json&);
template TpVector param_from_json<View::Tp>(const Json&);
template TpnsVector param_from_json<View::Tpns>(const Json&);

TpVector tp_from_values(RelationshipKind kind, const Json& values) {
    return TpVector(kind, values_from_json(kind, View::Tp, values));
}

Json to_json(const SNDataset& data) {
    Json obs = Json::array();
    for (const auto& o : data.observations()) {
        obs.push_back({{"stress", o.stress}, {"cycles", o.cycles}, {"status", to_string(o.status)}});
    }
    return Json{{"observations", obs},
                {"scaling", {{"s_max", data.scaling().s_max}, {"n_max", data.scaling().n_max}}}};
}

SNDataset dataset_from_json(const Json& j) {
    std::vector<Observation> obs;
    for (const auto& o : j.at("observations")) {
        obs.push_back({o.at("stress").get<double>(), o.at("cycles").get<double>(),
                       parse_status(o.at("status").get<std::string>())});
    }
    ScalingMeta meta{j.at("scaling").at("s_max").get<double>(), j.at("scaling").at("n_max").get<double>()};
    return SNDataset(std::move(obs), meta);
}

Json to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
        rows.push_back(row);
    }
    return rows;
}

Json to_json(const ConvergenceDiag& d) {
    Json flags = Json::array();
    for (const auto& f : d.limit_flags) {
        flags.push_back({{"coordinate", f.coordinate}, {"direction", f.direction}, {"message", f.message}});
    }
    Json eig = Json::array();
    for (double e : d.hessian_eigenvalues) eig.push_back(number(e));
    return Json{{"converged", d.converged},
                {"grad_norm", number(d.grad_norm)},
                {"grad_tolerance", number(d.grad_tolerance)},
                {"hessian_eigenvalues", eig},
                {"limit_flags", flags},
                {"evaluations", d.evaluations}};
}

Json to_json(const FitResult& fit) {
    const auto& a = fit.data->anchors();
    Json j;
    j["format"] = "snfit-fit";
    j["model"] = {{"relationship", to_string(fit.spec.relationship)},
                  {"display_name", display_name(fit.spec.relationship)},
                  {"family", to_string(fit.spec.family)},
                  {"mode", to_string(fit.spec.mode)}};
    j["k"] = fit.k();
    j["loglik"] = number(fit.loglik);
    j["aic"] = number(fit.aic);
    j["usp"] = to_json(fit.usp);
    j["sp"] = to_json(fit.sp);
    j["tp"] = to_json(fit.tp);
    j["tpns"] = to_json(fit.tpns);
    j["se"] = {{"usp", vector_json(fit.usp_se())}, {"tp", vector_json(fit.tp_se())}, {"tpns", vector_json(fit.tpns_se())}};
    j["cov_usp"] = to_json(fit.cov_usp);
    j["cov_tp"] = to_json(fit.cov_tp);
    j["cov_tpns"] = to_json(fit.cov_tpns);
    j["diagnostics"] = to_json(fit.diagnostics);
    j["advisories"] = fit.advisories;
    j["anchors"] = {{"n_low", a.n_low},
                    {"n_high", a.n_high},
                    {"n_mid", a.n_mid},
                    {"s_low_fail", a.s_low_fail},
                    {"s_high_fail", a.s_high_fail},
                    {"s_high_all", fit.ctx.s_high_all},
                    {"log_s_center", fit.ctx.log_s_center}};
    j["metadata"] = {{"basquin_centering", "mean log stress over all observations (failures and runouts)"},
                     {"covariance", "inverse negative finite-difference Hessian; delta method for tp/tpns"}};
    j["dataset"] = to_json(*fit.data);
    return j;
}

FitResult fit_from_json(const Json& j) {
    if (j.value("format", "") != "snfit-fit") throw ParseError("not a fit file (format != snfit-fit)");
    const auto& m = j.at("model");
    auto spec = ModelSpec::of(parse_relationship(m.at("relationship").get<std::string>()),
                              parse_family(m.at("family").get<std::string>()));
    auto data = std::make_shared<const SNDataset>(dataset_from_json(j.at("dataset")));
    auto usp = param_from_json<View::Usp>(j.at("usp"));
    if (usp.kind != spec.relationship) throw ParseError("fit file: usp kind does not match the model");
    std::size_t evals = j.contains("diagnostics") ? j["diagnostics"].value("evaluations", std::size_t{0}) : 0;
    auto fit = fit_at(spec, std::move(data), usp, evals);
    if (j.contains("advisories")) fit.advisories = j.at("advisories").get<std::vector<std::string>>();
    return fit;
}

Json to_json(const ProfileTrace& t) {
    Json rel = Json::array(), refits = Json::array();
    for (std::size_t i = 0; i < t.rel_lik.size(); ++i) {
        rel.push_back(t.rel_lik[i] ? Json(*t.rel_lik[i]) : Json(nullptr));
        refits.push_back(t.refit_usp[i] ? vector_json(t.refit_usp[i]->values) : Json(nullptr));
    }
    Json j{{"format", "snfit-profile"}, {"coordinates", t.coordinates}, {"grid", t.grid}};
    if (!t.grid2.empty()) j["grid2"] = t.grid2;
    j["loglik_max"] = number(t.loglik_max);
    j["rel_lik"] = rel;
    j["refit_usp"] = refits;
    return j;
}

Json to_json(const PriorSpec& p, const std::vector<UspVector>& inits) {
    Json coords = Json::array();
    for (const auto& c : p.coordinates) {
        Json prior = {{"type", c.type == CoordinatePrior::Type::Flat ? "flat" : "normal"}};
        if (c.type == CoordinatePrior::Type::Normal) {
            prior["mean"] = c.mean;
            prior["sd"] = c.sd;
        }
        coords.push_back({{"name", c.name}, {"prior", prior}, {"note", c.note}});
    }
    Json init = Json::array();
    for (const auto& u : inits) init.push_back(vector_json(u.values));
    return Json{{"coordinates", coords}, {"inits", init}};
}

Json to_json(const std::vector<QuantileBandRow>& rows, double p, double level) {
    Json out = Json::array();
    for (const auto& r : rows) {
        out.push_back({{"stress", r.stress},
                       {"estimate", number(r.estimate)},
                       {"lower", number(r.lower)},
                       {"upper", number(r.upper)},
                       {"wald_lower", number(r.wald_lower)},
                       {"wald_upper", number(r.wald_upper)},
                       {"lower_one_sided", r.lower_one_sided},
                       {"upper_one_sided", r.upper_one_sided},
                       {"note", r.note}});
    }
    return Json{{"format", "snfit-quantile"},
                {"p", p},
                {"level", level},
                {"calibration", "chi-square, 1 degree of freedom"},
                {"rows", out}};
}

}  // namespace snfit
