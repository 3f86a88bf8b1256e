#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "snfit/bayesprep.hpp"
#include "snfit/serialize.hpp"

using namespace snfit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitEstimability = 2;

// Writes to the named file, or stdout when the name is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw ParseError("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string csv_number(double x) {
    if (std::isnan(x)) return "";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

// Inline JSON when the argument starts with '{' or '[', otherwise a file name.
Json read_json_arg(const std::string& arg) {
    auto first = arg.find_first_not_of(" \t\n");
    if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
        try {
            return Json::parse(arg);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("inline JSON: ") + e.what());
        }
    }
    return read_json_file(arg);
}

// "a,b,c" lists and "lo:hi:n" log-spaced ranges, mixed freely.
std::vector<double> parse_grid(const std::vector<std::string>& items) {
    std::vector<double> out;
    auto number = [](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size() || t.empty()) throw ParseError("not a number: '" + t + "'");
        return v;
    };
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            auto c1 = tok.find(':');
            if (c1 == std::string::npos) {
                out.push_back(number(tok));
                continue;
            }
            auto c2 = tok.find(':', c1 + 1);
            if (c2 == std::string::npos) throw ParseError("range must be lo:hi:n, got '" + tok + "'");
            double lo = number(tok.substr(0, c1)), hi = number(tok.substr(c1 + 1, c2 - c1 - 1));
            double n = number(tok.substr(c2 + 1));
            if (!(lo > 0 && hi > lo) || n < 2 || n != std::floor(n)) {
                throw ParseError("range needs 0 < lo < hi and an integer n >= 2: '" + tok + "'");
            }
            for (int i = 0; i < static_cast<int>(n); ++i) out.push_back(lo * std::pow(hi / lo, i / (n - 1)));
        }
    }
    return out;
}

std::shared_ptr<const SNDataset> load_dataset(const std::string& path) {
    auto raw = load_csv_file(path);
    return std::make_shared<const SNDataset>(scale(raw));
}

void write_json(const Json& j, const std::string& out) {
    Output o(out);
    o.stream() << j.dump(2) << '\n';
}

void write_error_json(const std::string& out, const std::string& message) {
    Json j{{"format", "snfit-error"}, {"error", message}, {"diagnostics", nullptr}};
    write_json(j, out);
}

// -- verbs -------------------------------------------------------------------

struct FitArgs {
    std::string data, relationship, family, out;
    int restarts = 0;
};

int run_fit(const FitArgs& a) {
    auto spec = ModelSpec::of(parse_relationship(a.relationship), parse_family(a.family));
    std::shared_ptr<const SNDataset> data = load_dataset(a.data);
    FitResult fit;
    try {
        fit = fit_ml(spec, data, FitOptions{a.restarts, true});
    } catch (const EstimabilityError& e) {
        write_error_json(a.out, e.what());
        std::cerr << "snfit: " << e.what() << '\n';
        return kExitEstimability;
    }
    write_json(to_json(fit), a.out);
    if (!fit.diagnostics.converged) {
        std::cerr << "snfit: fit did not converge (see diagnostics)\n";
        return kExitEstimability;
    }
    return kExitOk;
}

struct CompareArgs {
    std::vector<std::string> data, relationships, families;
    std::string out;
    int restarts = 0;
};

int run_compare(const CompareArgs& a) {
    std::vector<RelationshipKind> rels;
    std::vector<Family> fams;
    if (a.relationships.empty()) {
        rels.assign(kAllRelationships.begin(), kAllRelationships.end());
    } else {
        for (const auto& r : a.relationships) rels.push_back(parse_relationship(r));
    }
    if (a.families.empty()) {
        fams = {Family::Lognormal, Family::Weibull, Family::Loglogistic, Family::Frechet};
    } else {
        for (const auto& f : a.families) fams.push_back(parse_family(f));
    }
    const bool batch = a.data.size() > 1;
    Output o(a.out);
    auto& os = o.stream();
    if (batch) os << "dataset,";
    os << "mode,relationship,family,n_parms,neg_loglike,aic,converged,note\n";
    bool any_converged = false;
    for (const auto& path : a.data) {
        auto rows = compare_grid(load_dataset(path), rels, fams, FitOptions{a.restarts, false});
        for (const auto& r : rows) {
            if (batch) os << csv_text(path) << ',';
            os << to_string(r.mode) << ',' << csv_text(display_name(r.relationship)) << ',' << to_string(r.family) << ','
               << r.k << ',';
            if (r.error.empty()) {
                os << std::fixed << std::setprecision(1) << r.neg_loglik << ',' << r.aic << std::defaultfloat << ','
                   << (r.converged ? "true" : "false") << ',';
                if (r.fit && !r.fit->advisories.empty()) os << csv_text(r.fit->advisories.front());
            } else {
                os << ",,false," << csv_text(r.error);
            }
            os << '\n';
            any_converged = any_converged || r.converged;
        }
    }
    return any_converged ? kExitOk : kExitEstimability;
}

struct ProfileArgs {
    std::string fit, coord, coord2, out;
    std::size_t points = 41;
    double span = 6.0;
};

int run_profile(const ProfileArgs& a) {
    auto fit = fit_from_json(read_json_file(a.fit));
    auto c1 = fit.usp.index_of(a.coord);
    auto g1 = default_profile_grid(fit, c1, a.points, a.span);
    Output o(a.out);
    auto& os = o.stream();
    if (a.coord2.empty()) {
        auto t = profile_1d(fit, c1, g1);
        os << a.coord << ",rel_lik\n";
        for (std::size_t i = 0; i < t.grid.size(); ++i) {
            os << csv_number(t.grid[i]) << ',' << (t.rel_lik[i] ? csv_number(*t.rel_lik[i]) : "") << '\n';
        }
        return kExitOk;
    }
    auto c2 = fit.usp.index_of(a.coord2);
    if (c2 == c1) throw DomainError("--coord2 must differ from --coord");
    auto g2 = default_profile_grid(fit, c2, a.points, a.span);
    auto t = profile_2d(fit, c1, c2, g1, g2);
    os << a.coord << ',' << a.coord2 << ",rel_lik\n";
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        for (std::size_t k = 0; k < t.grid2.size(); ++k) {
            const auto& r = t.rel_lik[i * t.grid2.size() + k];
            os << csv_number(t.grid[i]) << ',' << csv_number(t.grid2[k]) << ',' << (r ? csv_number(*r) : "") << '\n';
        }
    }
    return kExitOk;
}

struct QuantileArgs {
    std::string fit, out;
    double p = 0.5, level = 0.95;
    std::vector<std::string> grid;
};

int run_quantile(const QuantileArgs& a) {
    auto fit = fit_from_json(read_json_file(a.fit));
    auto rows = quantile_band(fit, a.p, parse_grid(a.grid), a.level);
    Output o(a.out);
    auto& os = o.stream();
    os << "stress,estimate,lower,upper,wald_lower,wald_upper,lower_one_sided,upper_one_sided,note\n";
    for (const auto& r : rows) {
        os << csv_number(r.stress) << ',' << csv_number(r.estimate) << ',' << csv_number(r.lower) << ','
           << csv_number(r.upper) << ',' << csv_number(r.wald_lower) << ',' << csv_number(r.wald_upper) << ','
           << (r.lower_one_sided ? "true" : "false") << ',' << (r.upper_one_sided ? "true" : "false") << ','
           << csv_text(r.note) << '\n';
    }
    return kExitOk;
}

struct SimulateArgs {
    std::string relationship, family, tp, out;
    std::vector<std::string> stresses;
    double runout = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;
};

int run_simulate(const SimulateArgs& a) {
    auto spec = ModelSpec::of(parse_relationship(a.relationship), parse_family(a.family));
    auto j = read_json_arg(a.tp);
    if (j.is_object() && j.contains("values")) j = j.at("values");
    auto tp = tp_from_values(spec.relationship, j);
    auto obs = simulate(spec, tp, parse_grid(a.stresses), a.runout, a.seed);
    Output o(a.out);
    auto& os = o.stream();
    os << "stress,cycles,status\n";
    for (const auto& ob : obs) os << csv_number(ob.stress) << ',' << csv_number(ob.cycles) << ',' << to_string(ob.status) << '\n';
    return kExitOk;
}

struct BayesArgs {
    std::string fit, out;
    double factor = 20.0;
    std::size_t chains = 4;
    std::uint64_t seed = 1;
    bool flat = false;
};

int run_bayes(const BayesArgs& a) {
    auto fit = fit_from_json(read_json_file(a.fit));
    PriorSpec priors = a.flat ? flat_priors(fit.spec.relationship) : weakly_informative_from_fit(fit, a.factor, a.fit);
    auto j = to_json(priors, chain_inits(fit, a.chains, a.seed));
    j["model"] = {{"relationship", to_string(fit.spec.relationship)}, {"family", to_string(fit.spec.family)}};
    j["scaling"] = {{"s_max", fit.data->scaling().s_max}, {"n_max", fit.data->scaling().n_max}};
    write_json(j, a.out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Censored maximum-likelihood fitting of S-N curves"};
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit one relationship/family pair; writes JSON");
    fit->add_option("--data", fa.data, "CSV with stress,cycles,status")->required()->check(CLI::ExistingFile);
    fit->add_option("--relationship,-r", fa.relationship, "Relationship name")->required();
    fit->add_option("--family,-f", fa.family, "Error distribution family")->required();
    fit->add_option("--restarts", fa.restarts, "Extra starts from perturbed initial values")->check(CLI::NonNegativeNumber);
    fit->add_option("--out,-o", fa.out, "Output JSON (default stdout)");

    CompareArgs ca;
    auto* cmp = app.add_subcommand("compare", "Fit the model grid and print an AIC leaderboard (CSV)");
    cmp->add_option("--data", ca.data, "One or more CSV datasets")->required()->check(CLI::ExistingFile);
    cmp->add_option("--relationships", ca.relationships, "Subset of relationships")->delimiter(',');
    cmp->add_option("--families", ca.families, "Subset of families")->delimiter(',');
    cmp->add_option("--restarts", ca.restarts, "Extra starts per cell")->check(CLI::NonNegativeNumber);
    cmp->add_option("--out,-o", ca.out, "Output CSV (default stdout)");

    ProfileArgs pa;
    auto* prof = app.add_subcommand("profile", "Profile relative likelihood of USP coordinates (CSV)");
    prof->add_option("--fit", pa.fit, "Fit JSON")->required()->check(CLI::ExistingFile);
    prof->add_option("--coord", pa.coord, "USP coordinate name")->required();
    prof->add_option("--coord2", pa.coord2, "Second coordinate for a 2-D profile");
    prof->add_option("--points", pa.points, "Grid points per coordinate")->check(CLI::Range(3, 1001));
    prof->add_option("--span", pa.span, "Grid half-width in standard errors")->check(CLI::PositiveNumber);
    prof->add_option("--out,-o", pa.out, "Output CSV (default stdout)");

    QuantileArgs qa;
    auto* quant = app.add_subcommand("quantile", "Quantile curve with likelihood band (CSV)");
    quant->add_option("--fit", qa.fit, "Fit JSON")->required()->check(CLI::ExistingFile);
    quant->add_option("--p", qa.p, "Quantile probability")->required()->check(CLI::Range(0.0, 1.0));
    quant->add_option("--level", qa.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    quant->add_option("--stress-grid", qa.grid, "Stresses: a,b,c or lo:hi:n")->required();
    quant->add_option("--out,-o", qa.out, "Output CSV (default stdout)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Draw a censored dataset from a model (CSV)");
    sim->add_option("--relationship,-r", sa.relationship, "Relationship name")->required();
    sim->add_option("--family,-f", sa.family, "Error distribution family")->required();
    sim->add_option("--tp", sa.tp, "Traditional parameters: JSON file or inline JSON")->required();
    sim->add_option("--stresses", sa.stresses, "Stresses: a,b,c or lo:hi:n")->required();
    sim->add_option("--runout", sa.runout, "Censoring time")->check(CLI::PositiveNumber);
    sim->add_option("--seed", sa.seed, "Random seed");
    sim->add_option("--out,-o", sa.out, "Output CSV (default stdout)");

    BayesArgs ba;
    auto* bay = app.add_subcommand("bayes-prep", "Priors and chain initial values for a Bayesian refit (JSON)");
    bay->add_option("--fit", ba.fit, "Fit JSON")->required()->check(CLI::ExistingFile);
    bay->add_option("--factor", ba.factor, "Prior SD as a multiple of the SE");
    bay->add_option("--chains", ba.chains, "Number of chains")->check(CLI::PositiveNumber);
    bay->add_option("--seed", ba.seed, "Random seed for chain initial values");
    bay->add_flag("--flat", ba.flat, "Flat priors instead of weakly informative ones");
    bay->add_option("--out,-o", ba.out, "Output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*fit) return run_fit(fa);
        if (*cmp) return run_compare(ca);
        if (*prof) return run_profile(pa);
        if (*quant) return run_quantile(qa);
        if (*sim) return run_simulate(sa);
        if (*bay) return run_bayes(ba);
    } catch (const EstimabilityError& e) {
        std::cerr << "snfit: " << e.what() << '\n';
        return kExitEstimability;
    } catch (const LimitRegionError& e) {
        std::cerr << "snfit: " << e.what() << '\n';
        return kExitEstimability;
    } catch (const NoSolutionError& e) {
        std::cerr << "snfit: " << e.what() << '\n';
        return kExitEstimability;
    } catch (const Error& e) {
        std::cerr << "snfit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "snfit: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
