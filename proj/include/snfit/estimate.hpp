#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snfit/dataset.hpp"
#include "snfit/likelihood.hpp"
#include "snfit/reparam.hpp"

namespace snfit {

struct ConvergenceDiag {
    double grad_norm = 0.0;
    double grad_tolerance = 0.0;
    std::vector<double> hessian_eigenvalues;  // ascending
    bool converged = false;
    std::vector<LimitFlag> limit_flags;
    std::size_t evaluations = 0;
};

struct FitOptions {
    int restarts = 0;  // extra starts from perturbed initial values (8 when enabled from the CLI)
    bool check_limits = true;  // refit at limiting models for detect_limiting
};

struct FitResult {
    ModelSpec spec;
    std::shared_ptr<const SNDataset> data;
    AnchorContext ctx;
    UspVector usp;
    SpVector sp;
    TpVector tp;
    TpnsVector tpns;
    double loglik = 0.0;
    double aic = 0.0;
    Eigen::MatrixXd cov_usp;  // NaN-filled when the Hessian is not negative definite
    Eigen::MatrixXd cov_tp;
    Eigen::MatrixXd cov_tpns;
    ConvergenceDiag diagnostics;
    std::vector<std::string> advisories;

    std::size_t k() const noexcept { return usp.size(); }
    Eigen::VectorXd usp_se() const;
    Eigen::VectorXd tp_se() const;
    Eigen::VectorXd tpns_se() const;
};

/// AIC = 2k - 2 loglik.
double aic(std::size_t k, double loglik) noexcept;

/// Maximize the likelihood over USPs: simplex search, then quasi-Newton polish.
/// Throws EstimabilityError when initial values cannot be formed.
FitResult fit_ml(const ModelSpec& spec, std::shared_ptr<const SNDataset> data, const FitOptions& options = {});
FitResult fit_ml(const ModelSpec& spec, const SNDataset& data, const FitOptions& options = {});

/// Build a FitResult (diagnostics, covariances, all views) at a given USP point.
FitResult fit_at(const ModelSpec& spec, std::shared_ptr<const SNDataset> data, const UspVector& usp,
                 std::size_t evaluations = 0);

ConvergenceDiag diagnostics_at(const ModelSpec& spec, const UspVector& usp, const SNDataset& data);
/// Same, for an arbitrary objective (used by tests on toy surfaces).
ConvergenceDiag diagnostics_for(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                std::span<const std::string_view> names);

/// Profile relative likelihood over one or two fixed USP coordinates.
struct ProfileTrace {
    std::vector<std::string> coordinates;
    std::vector<double> grid;   // first coordinate
    std::vector<double> grid2;  // second coordinate (2-D only)
    std::vector<std::optional<double>> rel_lik;  // row-major over grid x grid2; nullopt where the refit failed
    std::vector<std::optional<UspVector>> refit_usp;
    double loglik_max = 0.0;
};

/// MLE +/- span standard errors, `points` values (MLE included when points is odd).
std::vector<double> default_profile_grid(const FitResult& fit, std::size_t coord, std::size_t points = 41,
                                         double span = 6.0);
ProfileTrace profile_1d(const FitResult& fit, std::size_t coord, const std::vector<double>& grid);
ProfileTrace profile_2d(const FitResult& fit, std::size_t coord1, std::size_t coord2, const std::vector<double>& grid1,
                        const std::vector<double>& grid2);

/// Maximized log-likelihood with some USP coordinates held fixed.
struct ConstrainedFit {
    UspVector usp;
    double loglik = 0.0;
    bool ok = false;
};
ConstrainedFit fit_constrained(const FitResult& fit, const std::vector<std::size_t>& fixed,
                               const std::vector<double>& values, const UspVector& start);

struct QuantileBandRow {
    double stress = 0.0;    // original units
    double estimate = 0.0;  // original units; NaN when undefined at this stress
    double lower = 0.0;
    double upper = 0.0;
    double wald_lower = 0.0;
    double wald_upper = 0.0;
    bool lower_one_sided = false;
    bool upper_one_sided = false;
    std::string note;
};

/// Likelihood-based (chi-square, 1 df) and Wald intervals for the p quantile of life
/// at each stress of `stresses` (original units).
std::vector<QuantileBandRow> quantile_band(const FitResult& fit, double p, const std::vector<double>& stresses,
                                           double level);

struct LeaderboardRow {
    Mode mode = Mode::Life;
    RelationshipKind relationship = RelationshipKind::Basquin;
    Family family = Family::Lognormal;
    std::size_t k = 0;
    double neg_loglik = 0.0;  // -loglik, as printed in the leaderboard
    double aic = 0.0;
    bool converged = false;
    std::string error;  // non-empty when the fit failed
    std::shared_ptr<const FitResult> fit;
};

/// Fit every relationship x family pair; rows by ascending AIC, failures last.
/// Cells run on up to SNFIT_THREADS threads; output is identical to a serial run.
std::vector<LeaderboardRow> compare_grid(std::shared_ptr<const SNDataset> data,
                                         const std::vector<RelationshipKind>& relationships,
                                         const std::vector<Family>& families, const FitOptions& options = {});

struct LrTest {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
};
LrTest lr_test(const FitResult& full, const FitResult& nested);

struct Residual {
    double z = 0.0;
    bool censored = false;
};
std::vector<Residual> residuals(const FitResult& fit);

/// Draw lives at the given stresses; lives beyond runout_time are censored there.
std::vector<Observation> simulate(const ModelSpec& spec, const TpVector& tp, const std::vector<double>& stresses,
                                  double runout_time, std::uint64_t seed);

/// Advisory messages about limiting models near the fit.
std::vector<std::string> detect_limiting(const FitResult& fit);

/// Number of worker threads for parallel cells (SNFIT_THREADS, else hardware).
unsigned worker_threads();

}  // namespace snfit
