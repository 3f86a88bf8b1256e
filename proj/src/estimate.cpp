#include "snfit/estimate.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "snfit/optimize.hpp"
#include "snfit/relationships.hpp"
#include "snfit/special.hpp"

namespace snfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFlatEigen = 1e-6;
constexpr std::string_view kFlatConcentrated = "flat likelihood direction concentrated on this coordinate";

using optim::Objective;

Objective usp_objective(const ModelSpec& spec, const SNDataset& data, const AnchorContext& ctx) {
    return [&spec, &data, ctx](const Eigen::VectorXd& u) {
        return loglik(spec, UspVector(spec.relationship, u), data, ctx).value;
    };
}

// Simplex search followed by a quasi-Newton polish; a second round when the
// polish stalls away from a stationary point.
optim::Result maximize(const Objective& f, const Eigen::VectorXd& x0, double step = 0.5) {
    optim::SimplexOptions so;
    so.initial_step = step;
    auto r = optim::nelder_mead(f, x0, so);
    std::size_t evals = r.evaluations;
    for (int round = 0; round < 2; ++round) {
        optim::QuasiNewtonOptions qo;
        qo.gradient_tolerance = 1e-7 * (1.0 + std::fabs(r.f));
        auto q = optim::quasi_newton(f, r.x, qo);
        evals += q.evaluations;
        if (std::isfinite(q.f) && q.f >= r.f) r = q;
        if (r.converged) break;
        so.initial_step = 0.05;
        auto again = optim::nelder_mead(f, r.x, so);
        evals += again.evaluations;
        if (again.f > r.f) r = again;
    }
    r.evaluations = evals;
    return r;
}

// Row r of the order-8 Sylvester-Hadamard matrix, columns 1..k, as +/-1 offsets.
Eigen::VectorXd restart_offset(int r, Eigen::Index k) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        unsigned col = static_cast<unsigned>(i % 7) + 1u;
        v[i] = std::popcount(static_cast<unsigned>(r) & col) % 2 ? -2.0 : 2.0;
    }
    if (r >= 8) v *= 0.5;
    return v;
}

Eigen::MatrixXd nan_matrix(Eigen::Index n) { return Eigen::MatrixXd::Constant(n, n, kNaN); }

struct Curvature {
    double f = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    ConvergenceDiag diag;
};

Curvature curvature(const Objective& f, const Eigen::VectorXd& x, std::span<const std::string_view> names) {
    Curvature c;
    c.f = f(x);
    c.g = optim::gradient(f, x);
    c.h = optim::hessian(f, x);
    auto& d = c.diag;
    const auto n = x.size();
    d.grad_tolerance = 1e-6 * (1.0 + std::fabs(c.f));
    bool finite = std::isfinite(c.f) && c.g.allFinite() && c.h.allFinite();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(c.g[i]) || !c.h.row(i).allFinite()) {
            d.limit_flags.push_back({std::string(names[static_cast<std::size_t>(i)]), 0,
                                     "non-finite log-likelihood in the difference stencil"});
        }
    }
    d.grad_norm = finite ? c.g.norm() : kInf;
    if (finite) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c.h + c.h.transpose()));
        for (Eigen::Index i = 0; i < n; ++i) d.hessian_eigenvalues.push_back(es.eigenvalues()[i]);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (es.eigenvalues()[i] < -kFlatEigen) continue;
            Eigen::VectorXd v = es.eigenvectors().col(i).cwiseAbs2();
            Eigen::Index j;
            double mass = v.maxCoeff(&j);
            std::ostringstream msg;
            msg << (mass > 0.9 ? kFlatConcentrated : "flat likelihood direction spread over several coordinates")
                << " (Hessian eigenvalue " << es.eigenvalues()[i] << ", "
                << static_cast<int>(std::round(100.0 * mass)) << "% of the eigenvector on this coordinate)";
            d.limit_flags.push_back({std::string(names[static_cast<std::size_t>(j)]), 0, msg.str()});
        }
    }
    // Eigenvalues within kFlatEigen of zero are numerically flat, not negative.
    d.converged = finite && d.grad_norm < d.grad_tolerance && !d.hessian_eigenvalues.empty() &&
                  d.hessian_eigenvalues.back() < -kFlatEigen;
    return c;
}

Eigen::MatrixXd propagate(const optim::VectorMap& g, const Eigen::VectorXd& x, const Eigen::MatrixXd& cov,
                          Eigen::Index out_dim) {
    if (!cov.allFinite()) return nan_matrix(out_dim);
    try {
        Eigen::MatrixXd j = optim::jacobian(g, x);
        if (!j.allFinite()) return nan_matrix(out_dim);
        Eigen::MatrixXd c = j * cov * j.transpose();
        return 0.5 * (c + c.transpose());
    } catch (const Error&) {
        return nan_matrix(out_dim);
    }
}

Eigen::VectorXd sqrt_diag(const Eigen::MatrixXd& m) {
    Eigen::VectorXd out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m(i, i) >= 0.0 ? std::sqrt(m(i, i)) : kNaN;
    return out;
}

std::optional<std::size_t> find_coordinate(RelationshipKind kind, std::string_view name) {
    auto names = coordinate_names(kind, View::Usp);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

double uniform01(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

double aic(std::size_t k, double loglik) noexcept { return 2.0 * static_cast<double>(k) - 2.0 * loglik; }

Eigen::VectorXd FitResult::usp_se() const { return sqrt_diag(cov_usp); }
Eigen::VectorXd FitResult::tp_se() const { return sqrt_diag(cov_tp); }
Eigen::VectorXd FitResult::tpns_se() const { return sqrt_diag(cov_tpns); }

unsigned worker_threads() {
    if (const char* env = std::getenv("SNFIT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ConvergenceDiag diagnostics_for(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                std::span<const std::string_view> names) {
    return curvature(f, x, names).diag;
}

ConvergenceDiag diagnostics_at(const ModelSpec& spec, const UspVector& usp, const SNDataset& data) {
    const auto ctx = AnchorContext::from(data);
    return curvature(usp_objective(spec, data, ctx), usp.values, usp.names()).diag;
}

FitResult fit_at(const ModelSpec& spec, std::shared_ptr<const SNDataset> data, const UspVector& usp,
                 std::size_t evaluations) {
    spec.validate();
    FitResult fr;
    fr.spec = spec;
    fr.data = std::move(data);
    fr.ctx = AnchorContext::from(*fr.data);
    fr.usp = usp;
    const auto kind = spec.relationship;
    const auto family = spec.family;
    const auto ctx = fr.ctx;
    const auto meta = fr.data->scaling();
    fr.tp = usp_to_tp(usp, ctx, family);
    fr.sp = usp_to_sp(usp, ctx, family);
    fr.tpns = unscale_tp(fr.tp, meta);

    auto cv = curvature(usp_objective(spec, *fr.data, ctx), usp.values, usp.names());
    fr.loglik = cv.f;
    fr.aic = aic(fr.k(), fr.loglik);
    fr.diagnostics = std::move(cv.diag);
    fr.diagnostics.evaluations = evaluations;

    const auto n = static_cast<Eigen::Index>(fr.k());
    fr.cov_usp = nan_matrix(n);
    if (cv.h.allFinite() && !fr.diagnostics.hessian_eigenvalues.empty() &&
        fr.diagnostics.hessian_eigenvalues.back() < 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-0.5 * (cv.h + cv.h.transpose()));
        Eigen::VectorXd inv = es.eigenvalues().cwiseInverse();
        fr.cov_usp = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
        fr.cov_usp = 0.5 * (fr.cov_usp + fr.cov_usp.transpose()).eval();
    }
    auto to_tp = [kind, family, ctx](const Eigen::VectorXd& u) {
        return usp_to_tp(UspVector(kind, u), ctx, family).values;
    };
    auto to_tpns = [kind, family, ctx, meta](const Eigen::VectorXd& u) {
        return unscale_tp(usp_to_tp(UspVector(kind, u), ctx, family), meta).values;
    };
    fr.cov_tp = propagate(to_tp, usp.values, fr.cov_usp, n);
    fr.cov_tpns = propagate(to_tpns, usp.values, fr.cov_usp, n);

    for (const char* q : {"qlogisp"}) {
        if (auto i = find_coordinate(kind, q); i && std::fabs(usp[*i]) > 20.0) {
            fr.diagnostics.limit_flags.push_back(
                {q, usp[*i] > 0 ? +1 : -1, "beyond |20|, where numerical problems are expected"});
        }
    }
    return fr;
}

FitResult fit_ml(const ModelSpec& spec, std::shared_ptr<const SNDataset> data, const FitOptions& options) {
    spec.validate();
    if (!data) throw DomainError("fit_ml: no dataset");
    const auto ctx = AnchorContext::from(*data);
    const UspVector init = initial_usp(spec.relationship, *data, spec.family);
    auto f = usp_objective(spec, *data, ctx);
    if (!std::isfinite(f(init.values))) {
        throw EstimabilityError("initial values give a zero likelihood; the model cannot be started on these data");
    }

    auto best = maximize(f, init.values);
    std::size_t evals = best.evaluations;
    for (int r = 0; r < options.restarts; ++r) {
        Eigen::VectorXd start = init.values + restart_offset(r, init.values.size());
        if (!std::isfinite(f(start))) continue;
        auto cand = maximize(f, start);
        evals += cand.evaluations;
        if (cand.f > best.f) best = cand;
    }

    auto fr = fit_at(spec, std::move(data), UspVector(spec.relationship, best.x), evals);
    fr.advisories = options.check_limits ? detect_limiting(fr) : std::vector<std::string>{};
    return fr;
}

FitResult fit_ml(const ModelSpec& spec, const SNDataset& data, const FitOptions& options) {
    return fit_ml(spec, std::make_shared<const SNDataset>(data), options);
}

// ------------------------------- profiles ----------------------------------

ConstrainedFit fit_constrained(const FitResult& fit, const std::vector<std::size_t>& fixed,
                               const std::vector<double>& values, const UspVector& start) {
    const auto kind = fit.spec.relationship;
    const auto k = fit.k();
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < k; ++i) {
        if (std::find(fixed.begin(), fixed.end(), i) == fixed.end()) free.push_back(i);
    }
    auto full = [&](const Eigen::VectorXd& r) {
        Eigen::VectorXd u = start.values;
        for (std::size_t i = 0; i < fixed.size(); ++i) u[static_cast<Eigen::Index>(fixed[i])] = values[i];
        for (std::size_t i = 0; i < free.size(); ++i) u[static_cast<Eigen::Index>(free[i])] = r[static_cast<Eigen::Index>(i)];
        return u;
    };
    auto base = usp_objective(fit.spec, *fit.data, fit.ctx);
    Objective f = [&](const Eigen::VectorXd& r) { return base(full(r)); };
    Eigen::VectorXd r0(static_cast<Eigen::Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) r0[static_cast<Eigen::Index>(i)] = start[free[i]];

    ConstrainedFit out;
    if (free.empty()) {
        out.usp = UspVector(kind, full(r0));
        out.loglik = base(out.usp.values);
        out.ok = std::isfinite(out.loglik);
        return out;
    }
    if (!std::isfinite(f(r0))) {
        // Fall back to the MLE's free coordinates when the warm start is infeasible.
        for (std::size_t i = 0; i < free.size(); ++i) r0[static_cast<Eigen::Index>(i)] = fit.usp[free[i]];
        if (!std::isfinite(f(r0))) return out;
    }
    auto r = maximize(f, r0, 0.1);
    out.usp = UspVector(kind, full(r.x));
    out.loglik = r.f;
    out.ok = std::isfinite(r.f);
    return out;
}

std::vector<double> default_profile_grid(const FitResult& fit, std::size_t coord, std::size_t points, double span) {
    if (coord >= fit.k()) throw DomainError("profile coordinate out of range");
    if (points < 2) throw DomainError("profile grid needs at least 2 points");
    double se = fit.usp_se()[static_cast<Eigen::Index>(coord)];
    if (!std::isfinite(se) || !(se > 0.0)) se = 1.0;  // no curvature: a unit-scale window
    const double center = fit.usp[coord];
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = center - span * se + 2.0 * span * se * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    if (points % 2 == 1) grid[points / 2] = center;
    return grid;
}

namespace {

std::size_t nearest_index(const std::vector<double>& grid, double x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (std::fabs(grid[i] - x) < std::fabs(grid[best] - x)) best = i;
    }
    return best;
}

// Visit order: the centre, then alternately outward; each entry names its warm-start neighbour.
std::vector<std::pair<std::size_t, std::optional<std::size_t>>> outward(std::size_t n, std::size_t center) {
    std::vector<std::pair<std::size_t, std::optional<std::size_t>>> order{{center, std::nullopt}};
    for (std::size_t i = center + 1; i < n; ++i) order.push_back({i, i - 1});
    for (std::size_t i = center; i-- > 0;) order.push_back({i, i + 1});
    return order;
}

double rel(double ll, double ll_max) { return std::clamp(std::exp(ll - ll_max), 0.0, 1.0); }

}  // namespace

ProfileTrace profile_1d(const FitResult& fit, std::size_t coord, const std::vector<double>& grid) {
    if (coord >= fit.k()) throw DomainError("profile coordinate out of range");
    ProfileTrace tr;
    tr.coordinates = {std::string(fit.usp.names()[coord])};
    tr.grid = grid;
    tr.loglik_max = fit.loglik;
    tr.rel_lik.assign(grid.size(), std::nullopt);
    tr.refit_usp.assign(grid.size(), std::nullopt);
    if (grid.empty()) return tr;
    for (auto [i, from] : outward(grid.size(), nearest_index(grid, fit.usp[coord]))) {
        UspVector start = fit.usp;
        if (from && tr.refit_usp[*from]) start = *tr.refit_usp[*from];
        auto c = fit_constrained(fit, {coord}, {grid[i]}, start);
        if (!c.ok) continue;
        tr.rel_lik[i] = rel(c.loglik, fit.loglik);
        tr.refit_usp[i] = c.usp;
    }
    return tr;
}

ProfileTrace profile_2d(const FitResult& fit, std::size_t coord1, std::size_t coord2, const std::vector<double>& grid1,
                        const std::vector<double>& grid2) {
    if (coord1 >= fit.k() || coord2 >= fit.k() || coord1 == coord2) {
        throw DomainError("profile_2d needs two distinct coordinates");
    }
    ProfileTrace tr;
    tr.coordinates = {std::string(fit.usp.names()[coord1]), std::string(fit.usp.names()[coord2])};
    tr.grid = grid1;
    tr.grid2 = grid2;
    tr.loglik_max = fit.loglik;
    const std::size_t n1 = grid1.size(), n2 = grid2.size();
    tr.rel_lik.assign(n1 * n2, std::nullopt);
    tr.refit_usp.assign(n1 * n2, std::nullopt);
    if (n1 == 0 || n2 == 0) return tr;
    const std::size_t c1 = nearest_index(grid1, fit.usp[coord1]);
    const std::size_t c2 = nearest_index(grid2, fit.usp[coord2]);
    auto cell = [&](std::size_t i, std::size_t j, const UspVector& start) {
        auto c = fit_constrained(fit, {coord1, coord2}, {grid1[i], grid2[j]}, start);
        if (!c.ok) return;
        tr.rel_lik[i * n2 + j] = rel(c.loglik, fit.loglik);
        tr.refit_usp[i * n2 + j] = c.usp;
    };
    // Centre row first, then each row outward warm-started from its neighbour row.
    for (auto [j, from] : outward(n2, c2)) {
        UspVector start = fit.usp;
        if (from && tr.refit_usp[c1 * n2 + *from]) start = *tr.refit_usp[c1 * n2 + *from];
        cell(c1, j, start);
    }
    for (auto [i, from] : outward(n1, c1)) {
        if (!from) continue;
        for (std::size_t j = 0; j < n2; ++j) {
            UspVector start = fit.usp;
            if (tr.refit_usp[*from * n2 + j]) start = *tr.refit_usp[*from * n2 + j];
            cell(i, j, start);
        }
    }
    return tr;
}

// ---------------------------- quantile bands -------------------------------

namespace {

// Maps (other coordinates, target log quantile) to a full USP vector whose
// p quantile at s_e equals the target.
class QuantileSubstitution {
public:
    QuantileSubstitution(const FitResult& fit, double s_e, double p) : fit_(fit), s_e_(s_e), p_(p) {
        zp_ = std_quantile(fit.spec.family, p);
        switch (fit.spec.relationship) {
            case RelationshipKind::Basquin: index_ = 0; break;
            case RelationshipKind::BoxCoxLoglinearSigma: {
                double w = weight(fit.usp[2]);
                index_ = std::fabs(1.0 - w) >= std::fabs(w) ? 3 : 4;
                break;
            }
            default: index_ = 0; break;  // logSLow shifts log h vertically
        }
    }

    std::size_t index() const { return index_; }

    double log_quantile(const UspVector& u) const {
        return std::log(quantile_life(fit_.spec, u, fit_.ctx, s_e_, p_));
    }

    // nullopt when no valid point reproduces the target with these other coordinates.
    std::optional<UspVector> complete(UspVector u, double y) const {
        const auto& ctx = fit_.ctx;
        try {
            switch (fit_.spec.relationship) {
                case RelationshipKind::Basquin: {
                    const double beta1 = -std::exp(u[1]);
                    u[0] = y - std::exp(u[2]) * zp_ - beta1 * (std::log(s_e_) - ctx.log_s_center);
                    return u;
                }
                case RelationshipKind::BoxCoxLoglinearSigma: {
                    u[index_] = fit_.usp[index_];
                    double w = weight(u[2]);
                    double coef = index_ == 3 ? 1.0 - w : w;
                    if (!(std::fabs(coef) > 1e-12)) return std::nullopt;
                    u[index_] += (y - log_quantile(u)) / coef;
                    return u;
                }
                default: {
                    u[0] = fit_.usp[0];
                    auto tp = usp_to_tp(u, ctx, fit_.spec.family);
                    const double t = std::exp(y);
                    if (tp.kind == RelationshipKind::RectangularHyperbola && !(y > tp[0])) return std::nullopt;
                    const double sigma = tp[tp.size() - 1];
                    u[0] += std::log(s_e_) - sigma * zp_ - log_h(tp, t);
                    return u;
                }
            }
        } catch (const Error&) {
            return std::nullopt;
        }
    }

private:
    double weight(double lambda) const {
        const auto& ctx = fit_.ctx;
        const double nu_low = boxcox_nu(ctx.s_low_fail, lambda), nu_high = boxcox_nu(ctx.s_high_all, lambda);
        return (boxcox_nu(s_e_, lambda) - nu_high) / (nu_low - nu_high);
    }

    const FitResult& fit_;
    double s_e_, p_, zp_ = 0.0;
    std::size_t index_ = 0;
};

struct ProfilePoint {
    double loglik = -kInf;
    UspVector usp;
};

class QuantileProfile {
public:
    QuantileProfile(const FitResult& fit, const QuantileSubstitution& sub) : fit_(fit), sub_(sub) {
        for (std::size_t i = 0; i < fit.k(); ++i) {
            if (i != sub.index()) free_.push_back(i);
        }
        base_ = usp_objective(fit.spec, *fit.data, fit.ctx);
    }

    ProfilePoint at(double y, const UspVector& start) const {
        auto full = [&](const Eigen::VectorXd& r) -> std::optional<UspVector> {
            UspVector u = start;
            for (std::size_t i = 0; i < free_.size(); ++i) u[free_[i]] = r[static_cast<Eigen::Index>(i)];
            return sub_.complete(u, y);
        };
        Objective f = [&](const Eigen::VectorXd& r) {
            auto u = full(r);
            return u ? base_(u->values) : -kInf;
        };
        Eigen::VectorXd r0(static_cast<Eigen::Index>(free_.size()));
        for (std::size_t i = 0; i < free_.size(); ++i) r0[static_cast<Eigen::Index>(i)] = start[free_[i]];
        if (!std::isfinite(f(r0))) {
            for (std::size_t i = 0; i < free_.size(); ++i) r0[static_cast<Eigen::Index>(i)] = fit_.usp[free_[i]];
        }
        ProfilePoint pt;
        if (!std::isfinite(f(r0))) return pt;
        auto r = maximize(f, r0, 0.1);
        auto u = full(r.x);
        if (!u || !std::isfinite(r.f)) return pt;
        pt.loglik = r.f;
        pt.usp = *u;
        return pt;
    }

private:
    const FitResult& fit_;
    const QuantileSubstitution& sub_;
    std::vector<std::size_t> free_;
    Objective base_;
};

struct Endpoint {
    double value = kNaN;
    bool one_sided = false;
};

// Walk outward from the estimate until the deviance crosses `crit`, then refine.
Endpoint find_endpoint(const QuantileProfile& prof, const FitResult& fit, double y_hat, double direction,
                       double scale, double crit) {
    auto deviance = [&](const ProfilePoint& pt) { return 2.0 * (fit.loglik - pt.loglik) - crit; };
    UspVector warm = fit.usp;
    double y_in = y_hat, d_in = -crit;
    double step = std::max(scale, 1e-3);
    double y_out = y_hat;
    double d_out = kNaN;
    while (true) {
        y_out = y_hat + direction * step;
        if (step > 40.0) return {kNaN, true};
        auto pt = prof.at(y_out, warm);
        d_out = std::isfinite(pt.loglik) ? deviance(pt) : kInf;
        if (d_out > 0.0) break;
        y_in = y_out;
        d_in = d_out;
        warm = pt.usp;
        step *= 2.0;
    }
    if (!std::isfinite(d_out)) {
        // Infeasible beyond this point: bisect for the feasibility edge first.
        for (int i = 0; i < 40 && !std::isfinite(d_out); ++i) {
            double mid = 0.5 * (y_in + y_out);
            auto pt = prof.at(mid, warm);
            double dm = std::isfinite(pt.loglik) ? deviance(pt) : kInf;
            if (!std::isfinite(dm)) {
                y_out = mid;
            } else if (dm > 0.0) {
                y_out = mid;
                d_out = dm;
            } else {
                y_in = mid;
                d_in = dm;
                warm = pt.usp;
            }
        }
        if (!std::isfinite(d_out)) return {y_in, true};
    }
    auto g = [&](double y) {
        auto pt = prof.at(y, warm);
        return std::isfinite(pt.loglik) ? deviance(pt) : 1e6;
    };
    std::uintmax_t iters = 40;
    double lo = std::min(y_in, y_out), hi = std::max(y_in, y_out);
    double flo = y_in < y_out ? d_in : d_out, fhi = y_in < y_out ? d_out : d_in;
    auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, flo, fhi,
                                                     boost::math::tools::eps_tolerance<double>(30), iters);
    return {0.5 * (a + b), false};
}

}  // namespace

std::vector<QuantileBandRow> quantile_band(const FitResult& fit, double p, const std::vector<double>& stresses,
                                           double level) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0,1)");
    if (!(level >= 0.0 && level < 1.0)) throw DomainError("confidence level must lie in [0,1)");
    const auto meta = fit.data->scaling();
    const double log_n_max = std::log(meta.n_max);
    const double crit = chi2_quantile(level, 1.0);
    const double z_wald = level > 0.0 ? norm_quantile(0.5 + 0.5 * level) : 0.0;
    std::vector<QuantileBandRow> rows;
    for (double s : stresses) {
        QuantileBandRow row;
        row.stress = s;
        const double s_e = s / meta.s_max;
        QuantileSubstitution sub(fit, s_e, p);
        double y_hat;
        try {
            y_hat = sub.log_quantile(fit.usp);
        } catch (const NoSolutionError&) {
            row.estimate = row.lower = row.upper = row.wald_lower = row.wald_upper = kNaN;
            row.note = "stress at or below the fitted asymptote: quantile undefined";
            rows.push_back(row);
            continue;
        }
        row.estimate = std::exp(y_hat + log_n_max);

        // Wald interval on the log quantile.
        double se = kNaN;
        if (fit.cov_usp.allFinite()) {
            try {
                auto y_of = [&](const Eigen::VectorXd& u) {
                    Eigen::VectorXd out(1);
                    out[0] = sub.log_quantile(UspVector(fit.spec.relationship, u));
                    return out;
                };
                Eigen::MatrixXd j = optim::jacobian(y_of, fit.usp.values);
                se = std::sqrt((j * fit.cov_usp * j.transpose())(0, 0));
            } catch (const Error&) {
            }
        }
        row.wald_lower = std::exp(y_hat - z_wald * se + log_n_max);
        row.wald_upper = std::exp(y_hat + z_wald * se + log_n_max);

        if (level == 0.0) {
            row.lower = row.upper = row.estimate;
            rows.push_back(row);
            continue;
        }
        QuantileProfile prof(fit, sub);
        const double scale = std::isfinite(se) && se > 0.0 ? se : 0.1;
        auto lo = find_endpoint(prof, fit, y_hat, -1.0, scale, crit);
        auto hi = find_endpoint(prof, fit, y_hat, +1.0, scale, crit);
        row.lower = std::isfinite(lo.value) && !lo.one_sided ? std::exp(lo.value + log_n_max) : 0.0;
        row.upper = std::isfinite(hi.value) && !hi.one_sided ? std::exp(hi.value + log_n_max) : kInf;
        row.lower_one_sided = lo.one_sided;
        row.upper_one_sided = hi.one_sided;
        if (lo.one_sided || hi.one_sided) row.note = "profile not bracketed within +/-40 on the log scale: one-sided";
        rows.push_back(row);
    }
    return rows;
}

// ------------------------------ comparison ---------------------------------

std::vector<LeaderboardRow> compare_grid(std::shared_ptr<const SNDataset> data,
                                         const std::vector<RelationshipKind>& relationships,
                                         const std::vector<Family>& families, const FitOptions& options) {
    std::vector<ModelSpec> cells;
    for (auto r : relationships) {
        for (auto f : families) cells.push_back(ModelSpec::of(r, f));
    }
    std::vector<LeaderboardRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            auto& row = rows[i];
            row.mode = cells[i].mode;
            row.relationship = cells[i].relationship;
            row.family = cells[i].family;
            row.k = dimension(cells[i].relationship);
            try {
                auto fr = std::make_shared<FitResult>(fit_ml(cells[i], data, options));
                row.neg_loglik = -fr->loglik;
                row.aic = fr->aic;
                row.converged = fr->diagnostics.converged;
                row.fit = std::move(fr);
            } catch (const std::exception& e) {
                row.error = e.what();
                row.neg_loglik = row.aic = kNaN;
            }
        }
    };
    const unsigned n_threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const bool fa = !rows[a].error.empty() || !std::isfinite(rows[a].aic);
        const bool fb = !rows[b].error.empty() || !std::isfinite(rows[b].aic);
        if (fa != fb) return fb;
        if (fa) return false;
        return rows[a].aic < rows[b].aic;
    });
    std::vector<LeaderboardRow> sorted;
    for (auto i : idx) sorted.push_back(std::move(rows[i]));
    return sorted;
}

LrTest lr_test(const FitResult& full, const FitResult& nested) {
    if (!(nested.k() < full.k())) throw DomainError("lr_test: the nested model must have fewer parameters than the full model");
    if (full.spec.family != nested.spec.family) throw DomainError("lr_test: models use different distribution families");
    if (full.data != nested.data &&
        !std::equal(full.data->observations().begin(), full.data->observations().end(),
                    nested.data->observations().begin(), nested.data->observations().end())) {
        throw DomainError("lr_test: models were fitted to different datasets");
    }
    LrTest t;
    t.statistic = std::max(0.0, 2.0 * (full.loglik - nested.loglik));
    t.df = full.k() - nested.k();
    t.p_value = chi2_sf(t.statistic, static_cast<double>(t.df));
    return t;
}

std::vector<Residual> residuals(const FitResult& fit) {
    std::vector<Residual> out;
    for (const auto& o : fit.data->observations()) {
        out.push_back({standardized(fit.spec, fit.tp, o.stress, o.cycles), !o.failed()});
    }
    return out;
}

std::vector<Observation> simulate(const ModelSpec& spec, const TpVector& tp, const std::vector<double>& stresses,
                                  double runout_time, std::uint64_t seed) {
    spec.validate();
    if (tp.kind != spec.relationship) throw DomainError("simulate: parameters do not match the relationship");
    if (!satisfies_invariants(tp)) throw DomainError("simulate: parameters violate the relationship's constraints");
    if (!(runout_time > 0.0)) throw DomainError("simulate: runout time must be positive");
    std::mt19937_64 rng(seed);
    std::vector<Observation> out;
    out.reserve(stresses.size());
    for (double s : stresses) {
        if (!(s > 0.0)) throw DomainError("simulate: stresses must be positive");
        const double eps = std_quantile(spec.family, uniform01(rng));
        double t;
        if (spec.mode == Mode::Life) {
            t = std::exp(life_location(tp, s) + life_scale(tp, s) * eps);
        } else {
            const double target = s * std::exp(-tp[tp.size() - 1] * eps);
            try {
                t = target > h_infimum(tp) ? invert_h(tp, target, LogBracket{-200.0, 200.0}) : kInf;
            } catch (const NoSolutionError&) {
                t = kInf;
            }
        }
        if (t > runout_time) {
            out.push_back({s, runout_time, Status::Runout});
        } else {
            out.push_back({s, t, Status::Failure});
        }
    }
    return out;
}

// ------------------------------- limits ------------------------------------

std::vector<std::string> detect_limiting(const FitResult& fit) {
    std::vector<std::string> adv;
    auto add = [&](const std::string& s) {
        if (std::find(adv.begin(), adv.end(), s) == adv.end()) adv.push_back(s);
    };
    const auto kind = fit.spec.relationship;
    const bool cm = kind == RelationshipKind::CoffinManson;
    const bool nish = kind == RelationshipKind::Nishijima;

    auto advise_q = [&](int direction) {
        if (cm) {
            add(direction < 0 ? "zero-elastic-slope limit: b -> 0 (qlogisp -> -inf); consider coffin-manson-zes"
                              : "Basquin limit: plastic term vanishes (qlogisp -> +inf); consider basquin");
        } else if (nish) {
            add(direction > 0 ? "rectangular-hyperbola limit (qlogisp -> +inf); consider rect-hyperbola"
                              : "piecewise-linear limit: C -> 0 (qlogisp -> -inf)");
        }
    };
    const auto q = find_coordinate(kind, "qlogisp");
    if (q && std::fabs(fit.usp[*q]) > 10.0) advise_q(fit.usp[*q] > 0 ? +1 : -1);
    for (const auto& f : fit.diagnostics.limit_flags) {
        if (f.coordinate == "qlogisp" && f.direction != 0) advise_q(f.direction);
    }
    if (auto d = find_coordinate(kind, "logDeltaSlopes"); d && fit.usp[*d] < -10.0) {
        add("Basquin limit: c -> b (logDeltaSlopes -> -inf); consider basquin");
    }
    const auto& ev = fit.diagnostics.hessian_eigenvalues;
    for (const auto& f : fit.diagnostics.limit_flags) {
        if (f.message.starts_with(kFlatConcentrated) && !ev.empty() && ev.back() >= -kFlatEigen) {
            add("flat likelihood along " + f.coordinate);
        }
    }

    // Likelihood-ratio check of each limiting model, approximated by fixing the
    // limiting coordinate far out on its ridge.
    struct Probe {
        const char* coordinate;
        double value;
        int direction;
    };
    std::vector<Probe> probes;
    if (cm) probes = {{"qlogisp", -30.0, -1}, {"logDeltaSlopes", -30.0, -1}};
    if (nish) probes = {{"qlogisp", 30.0, +1}, {"qlogisp", -30.0, -1}};
    const double crit = chi2_quantile(0.95, 1.0);
    for (const auto& pr : probes) {
        auto idx = find_coordinate(kind, pr.coordinate);
        if (!idx) continue;
        auto c = fit_constrained(fit, {*idx}, {pr.value}, fit.usp);
        if (!c.ok || 2.0 * (fit.loglik - c.loglik) >= crit) continue;
        if (std::string(pr.coordinate) == "qlogisp") {
            advise_q(pr.direction);
        } else {
            add("Basquin limit: c -> b (logDeltaSlopes -> -inf); consider basquin");
        }
    }
    return adv;
}

}  // namespace snfit
