#include "snfit/bayesprep.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace snfit {

namespace {

constexpr double kZ975 = 1.96;

// Unbiased integer in [0, n): reject the partial top block, then reduce.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace

PriorSpec flat_priors(std::size_t k) {
    if (k == 0) throw DomainError("flat_priors: dimension must be at least 1");
    PriorSpec p;
    for (std::size_t i = 0; i < k; ++i) p.coordinates.push_back({"x" + std::to_string(i), CoordinatePrior::Type::Flat, 0, 0, "flat"});
    return p;
}

PriorSpec flat_priors(RelationshipKind kind) {
    PriorSpec p;
    for (auto name : coordinate_names(kind, View::Usp)) {
        p.coordinates.push_back({std::string(name), CoordinatePrior::Type::Flat, 0, 0, "flat over the real line"});
    }
    return p;
}

PriorSpec weakly_informative_from_fit(const FitResult& fit, double factor, const std::string& fit_id) {
    if (!(factor >= kMinPriorFactor)) {
        std::ostringstream msg;
        msg << "prior factor " << factor << " reuses data substantively; use a factor of at least " << kMinPriorFactor
            << " (default 20)";
        throw DomainError(msg.str());
    }
    if (!fit.diagnostics.converged) throw EstimabilityError("weakly informative priors need a converged fit");
    const auto se = fit.usp_se();
    PriorSpec p;
    for (std::size_t i = 0; i < fit.k(); ++i) {
        const double s = se[static_cast<Eigen::Index>(i)];
        if (!(s > 0.0) || !std::isfinite(s)) throw EstimabilityError("weakly informative priors need finite standard errors");
        std::ostringstream note;
        note << "Normal(MLE, " << factor << " x SE)";
        if (!fit_id.empty()) note << " from fit " << fit_id;
        p.coordinates.push_back({std::string(fit.usp.names()[i]), CoordinatePrior::Type::Normal, fit.usp[i], factor * s,
                                 note.str()});
    }
    return p;
}

NormalParams range_to_normal(double q005, double q995) {
    if (!(q995 > q005)) throw DomainError("range_to_normal: upper quantile must exceed lower quantile");
    const double z = norm_quantile(0.995);
    return {0.5 * (q005 + q995), (q995 - q005) / (2.0 * z)};
}

std::vector<Eigen::VectorXd> chain_inits(const Eigen::VectorXd& mle, const Eigen::VectorXd& se, std::size_t n_chains,
                                         std::uint64_t seed) {
    const auto k = static_cast<std::size_t>(mle.size());
    if (k == 0 || static_cast<std::size_t>(se.size()) != k) throw DomainError("chain_inits: bad dimensions");
    if (k >= 63 || n_chains > (std::uint64_t{1} << k)) {
        throw DomainError("chain_inits: more chains than vertices of the hyper-rectangle (2^k)");
    }
    if (!se.allFinite()) throw EstimabilityError("chain_inits needs finite standard errors");
    const std::uint64_t n_vertices = std::uint64_t{1} << k;
    // Partial Fisher-Yates over vertex ids, done lazily with a swap map.
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> ids;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> swaps;
    auto lookup = [&](std::uint64_t i) {
        for (auto& [a, b] : swaps) {
            if (a == i) return b;
        }
        return i;
    };
    auto assign = [&](std::uint64_t i, std::uint64_t v) {
        for (auto& [a, b] : swaps) {
            if (a == i) {
                b = v;
                return;
            }
        }
        swaps.push_back({i, v});
    };
    for (std::uint64_t i = 0; i < n_chains; ++i) {
        std::uint64_t j = i + uniform_index(rng, n_vertices - i);
        std::uint64_t vi = lookup(i), vj = lookup(j);
        assign(i, vj);
        assign(j, vi);
        ids.push_back(vj);
    }
    std::vector<Eigen::VectorXd> out;
    for (auto id : ids) {
        Eigen::VectorXd v = mle;
        for (std::size_t c = 0; c < k; ++c) {
            const double sign = (id >> c) & 1u ? 1.0 : -1.0;
            v[static_cast<Eigen::Index>(c)] += sign * kZ975 * se[static_cast<Eigen::Index>(c)];
        }
        out.push_back(v);
    }
    return out;
}

std::vector<UspVector> chain_inits(const FitResult& fit, std::size_t n_chains, std::uint64_t seed) {
    if (!fit.diagnostics.converged) throw EstimabilityError("chain initial values need a converged fit");
    std::vector<UspVector> out;
    for (auto& v : chain_inits(fit.usp.values, fit.usp_se(), n_chains, seed)) out.emplace_back(fit.spec.relationship, v);
    return out;
}

}  // namespace snfit
