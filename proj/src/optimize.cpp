#include "snfit/optimize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace snfit::optim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cost to minimize: -f, with invalid points mapped to +inf.
double cost(const Objective& f, const Eigen::VectorXd& x, std::size_t& evals) {
    ++evals;
    double v = f(x);
    return std::isfinite(v) ? -v : kInf;
}

struct Simplex {
    std::vector<Eigen::VectorXd> x;
    std::vector<double> c;

    void sort() {
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
        std::vector<Eigen::VectorXd> xs;
        std::vector<double> cs;
        for (auto i : idx) {
            xs.push_back(x[i]);
            cs.push_back(c[i]);
        }
        x = std::move(xs);
        c = std::move(cs);
    }

    double spread() const {
        double s = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i) s = std::max(s, (x[i] - x[0]).cwiseAbs().maxCoeff());
        return s;
    }
};

// One Nelder-Mead run from x0; returns when the simplex collapses or the budget is spent.
bool simplex_run(const Objective& f, const Eigen::VectorXd& x0, double step, std::size_t budget, double xtol,
                 std::size_t& evals, Eigen::VectorXd& best_x, double& best_c) {
    const auto n = x0.size();
    Simplex s;
    s.x.push_back(x0);
    s.c.push_back(cost(f, x0, evals));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd v = x0;
        v[i] += step * std::max(1.0, std::fabs(x0[i])) * (x0[i] < 0 ? -1.0 : 1.0);
        double cv = cost(f, v, evals);
        if (!std::isfinite(cv)) {
            v = x0;
            v[i] -= step * std::max(1.0, std::fabs(x0[i])) * (x0[i] < 0 ? -1.0 : 1.0);
            cv = cost(f, v, evals);
        }
        s.x.push_back(v);
        s.c.push_back(cv);
    }

    bool collapsed = false;
    while (evals < budget) {
        s.sort();
        if (s.spread() < xtol) {
            collapsed = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) centroid += s.x[static_cast<std::size_t>(i)];
        centroid /= static_cast<double>(n);
        auto& worst = s.x.back();
        double& worst_c = s.c.back();
        const double second_worst_c = s.c[s.c.size() - 2];

        Eigen::VectorXd xr = centroid + (centroid - worst);
        double cr = cost(f, xr, evals);
        if (cr < s.c.front()) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst);
            double ce = cost(f, xe, evals);
            if (ce < cr) {
                worst = xe;
                worst_c = ce;
            } else {
                worst = xr;
                worst_c = cr;
            }
            continue;
        }
        if (cr < second_worst_c) {
            worst = xr;
            worst_c = cr;
            continue;
        }
        bool outside = cr < worst_c;
        Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                     : Eigen::VectorXd(centroid + 0.5 * (worst - centroid));
        double cc = cost(f, xc, evals);
        if (cc < (outside ? cr : worst_c)) {
            worst = xc;
            worst_c = cc;
            continue;
        }
        for (std::size_t i = 1; i < s.x.size(); ++i) {
            s.x[i] = s.x[0] + 0.5 * (s.x[i] - s.x[0]);
            s.c[i] = cost(f, s.x[i], evals);
        }
    }
    s.sort();
    best_x = s.x.front();
    best_c = s.c.front();
    return collapsed;
}

}  // namespace

double gradient_step(double x) {
    static const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());
    return kCbrtEps * std::max(std::fabs(x), 1.0);
}

Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const SimplexOptions& options) {
    const auto n = static_cast<std::size_t>(x0.size());
    const std::size_t budget = options.max_evaluations ? options.max_evaluations : 500 * std::max<std::size_t>(n, 1);
    Result r;
    std::size_t evals = 0;
    double best_c = kInf;
    Eigen::VectorXd best_x = x0;
    bool converged = simplex_run(f, x0, options.initial_step, budget, options.x_tolerance, evals, best_x, best_c);
    // Restarting around the best vertex guards against premature collapse.
    for (int k = 0; k < options.restarts && evals < budget; ++k) {
        Eigen::VectorXd x;
        double c = kInf;
        double step = std::max(options.initial_step * 0.1, 1e-4);
        bool ok = simplex_run(f, best_x, step, budget, options.x_tolerance, evals, x, c);
        bool improved = c < best_c;
        if (improved) {
            best_c = c;
            best_x = x;
        }
        converged = ok;
        if (!improved && ok) break;
    }
    r.x = best_x;
    r.f = std::isfinite(best_c) ? -best_c : -kInf;
    r.evaluations = evals;
    r.converged = converged;
    return r;
}

Eigen::VectorXd gradient(const Objective& f, const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double h = gradient_step(x[i]);
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double hh = xp[i] - xm[i];
        g[i] = (f(xp) - f(xm)) / hh;
    }
    return g;
}

Eigen::MatrixXd hessian(const Objective& f, const Eigen::VectorXd& x) {
    const auto n = x.size();
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) h[i] = std::sqrt(gradient_step(x[i]));
    const double f0 = f(x);
    Eigen::MatrixXd H(n, n);
    auto at = [&](Eigen::Index i, double di, Eigen::Index j, double dj) {
        Eigen::VectorXd y = x;
        y[i] += di;
        y[j] += dj;
        return f(y);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        H(i, i) = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

Eigen::MatrixXd jacobian(const VectorMap& g, const Eigen::VectorXd& x) {
    Eigen::MatrixXd J;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double h = gradient_step(x[i]);
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        Eigen::VectorXd gp = g(xp), gm = g(xm);
        if (J.size() == 0) J.resize(gp.size(), x.size());
        J.col(i) = (gp - gm) / (xp[i] - xm[i]);
    }
    return J;
}

Result quasi_newton(const Objective& f, const Eigen::VectorXd& x0, const QuasiNewtonOptions& options) {
    const auto n = x0.size();
    Result r;
    r.x = x0;
    r.f = f(x0);
    r.evaluations = 1;
    if (!std::isfinite(r.f)) return r;

    // Work on the cost -f; B approximates the inverse Hessian of the cost.
    Eigen::VectorXd g = -gradient(f, r.x);
    r.evaluations += 2 * static_cast<std::size_t>(n);
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
    {
        Eigen::MatrixXd H = -hessian(f, r.x);
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (H.allFinite() && llt.info() == Eigen::Success) B = llt.solve(Eigen::MatrixXd::Identity(n, n));
    }

    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        if (!g.allFinite()) break;
        if (g.norm() < options.gradient_tolerance) {
            r.converged = true;
            break;
        }
        Eigen::VectorXd d = -B * g;
        if (g.dot(d) >= 0.0) {
            B.setIdentity();
            d = -g;
        }
        double alpha = 1.0;
        Eigen::VectorXd x_new;
        double f_new = -kInf;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = r.x + alpha * d;
            f_new = f(x_new);
            ++r.evaluations;
            // Armijo condition on the cost.
            if (std::isfinite(f_new) && -f_new <= -r.f + 1e-4 * alpha * g.dot(d)) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        Eigen::VectorXd g_new = -gradient(f, x_new);
        r.evaluations += 2 * static_cast<std::size_t>(n);
        Eigen::VectorXd s = x_new - r.x;
        Eigen::VectorXd y = g_new - g;
        r.x = x_new;
        r.f = f_new;
        g = g_new;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            double rho = 1.0 / sy;
            B = (I - rho * s * y.transpose()) * B * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (s.cwiseAbs().maxCoeff() < 1e-15) break;
    }
    if (g.allFinite() && g.norm() < options.gradient_tolerance) r.converged = true;
    return r;
}

}  // namespace snfit::optim
