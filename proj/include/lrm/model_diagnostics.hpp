#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrm/lrm_engine.hpp"

namespace lrm {

/// Worst case of one condition over all (k, bin, asset) it was evaluated on.
struct ConditionCheck {
    std::string name;
    bool pass = true;
    /// Worst observed value; max for upper bounds, min for lower bounds.
    double worst = 0.0;
    double threshold = 0.0;
    std::size_t evaluated = 0;
    /// Bins excluded because a variance was zero.
    std::size_t degenerate = 0;
    std::size_t worst_k = 0;
    std::size_t worst_bin = 0;
    /// Worst value per step (NaN where nothing was evaluated).
    std::vector<double> per_step;
    std::string note;
};

struct ConditionReport {
    std::vector<ConditionCheck> checks;
    bool all_pass() const;
    const ConditionCheck& get(const std::string& name) const;
};

/// (E[dS])^2 / Var(dS) against `bound`; also the modified ratios
/// (E[S_{k+1}])^2 / Var(S_{k+1}), whose maximum and minimum are reported
/// against `bound` and `lower_bound`.
std::vector<ConditionCheck> check_mean_variance_tradeoff(std::span<const StepMoments> moments,
                                                         double bound, double lower_bound);

/// Both F-diagonal sums; pass iff their minima are >= c_lower and c_tilde.
std::vector<ConditionCheck> check_f_diagonal(std::span<const StepMoments> moments, double c_lower,
                                             double c_tilde);

enum class FPropertyMode { Direct, PrincipalMinors };

/// Reports the smallest delta that makes every bin pass (`worst`); passes iff
/// that value is <= `delta` and < 1. Steps with one active asset pass vacuously.
ConditionCheck check_f_property(std::span<const StepMoments> moments, double alpha, double delta,
                                FPropertyMode mode);

struct PdResult {
    bool pass = false;
    /// Leading principal minors of the matrix as given.
    std::vector<double> minors;
    /// Leading principal minors of the unit-diagonal rescaling; these decide `pass`.
    std::vector<double> scaled_minors;
};

/// Throws ParameterError on asymmetry beyond 1e-10 relative to the largest entry.
PdResult check_positive_definite(std::span<const double> matrix, std::size_t d, double tol);
ConditionCheck check_positive_definite(std::span<const StepMoments> moments, double tol);

struct BoundednessReport {
    double max_alpha = 0.0;
    double max_beta = 0.0;
    double max_alpha_eps = 0.0;
    double max_beta_eps = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped_singular = 0;
};

/// alpha_{k;i,j} = F0_jj F0_ii |Finv_ji|^2, beta = F0_ii |Finv_ji|^2,
/// alpha_eps = F0_jj |Feps_ii|^2 |Finv_ji|^2, beta_eps = |Feps_ii|^2 |Finv_ji|^2,
/// maximized over (k, bin, i, j).
BoundednessReport report_boundedness_terms(std::span<const StepMoments> moments, double alpha);

/// Moments at every step with zero gains target and zero next holdings,
/// i.e. only the price moments; used when checking without solving.
std::vector<StepMoments> estimate_price_moments(const ExtendedPriceSet& prices,
                                                const PartitionBuilder& builder,
                                                std::size_t threads = 1);

/// Removes every active asset whose increment variance is at most
/// `tolerance` * E[S_{k+1}^2] in all occupied bins, i.e. whose increment is
/// known at t_k. Such an asset carries no risk at that step and the solver
/// drops it the same way.
StepMoments drop_predictable_assets(const StepMoments& moments, double tolerance);

/// Covariance of the increments at step k over the given active assets.
using CovarianceModel =
    std::function<std::vector<double>(std::size_t k, std::span<const std::size_t> active)>;

/// Copy of `moments` with every bin's increment covariance, and with it
/// Var(S_{k+1}), replaced by `model`.
std::vector<StepMoments> with_model_covariance(std::span<const StepMoments> moments,
                                               const CovarianceModel& model);

struct ConditionThresholds {
    double tradeoff_bound = 100.0;
    double tradeoff_lower = 0.0;
    double f_diagonal_c = 1.0;
    double f_diagonal_c_tilde = 1.0;
    /// Unset: the F-property is checked as defined, i.e. passes if any delta
    /// below 1 - pd_tolerance works.
    std::optional<double> delta;
    double pd_tolerance = 1e-10;
    double predictable_tolerance = 1e-10;
};

/// All checks above on one set of moments, after drop_predictable_assets.
ConditionReport run_conditions(std::span<const StepMoments> moments, double alpha,
                               const ConditionThresholds& thresholds);

}  // namespace lrm
