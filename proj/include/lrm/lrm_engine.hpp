#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lrm/conditional_estimation.hpp"
#include "lrm/futures_curve.hpp"
#include "lrm/linear_solve.hpp"

namespace lrm {

struct FixedPointSettings {
    std::size_t max_iters = 200;
    double tolerance = 1e-12;
};

/// How V_k is estimated. Nested: fitted conditional mean of
/// V_{k+1} - X_{k+1} dS_{k+1}, so the cost process has zero mean increment in
/// every bin. Pathwise: fitted conditional mean of the pathwise target
/// H - sum_{m>k} X_m dS_m. Both give the same V_0 and the same holdings.
enum class BookValue { Nested, Pathwise };

struct LrmConfig {
    /// Weight of expected liquidity cost against conditional variance; 0 is classical.
    double alpha = 1.0;
    double pd_tolerance = 1e-10;
    FixedPointSettings fixed_point;
    std::size_t threads = 1;
    /// Keep every step's StepMoments in the StrategySet.
    bool record_moments = false;
    /// Relative increment variance at or below which an asset's increment is
    /// treated as known one step ahead.
    double predictable_tolerance = 1e-10;
    BookValue book_value = BookValue::Nested;

    void validate() const;
};

/// Conditional moments of one bin over the active assets (d of them).
/// Matrices are d x d row-major.
struct BinMoments {
    std::size_t count = 0;
    std::vector<double> mean_ds;      // E[dS^j]
    std::vector<double> cov_ds;       // Cov(dS^j, dS^i)
    std::vector<double> mean_s_next;  // E[S^j_{k+1}]
    std::vector<double> var_s_next;   // Var(S^j_{k+1})
    std::vector<double> a_eps;        // E[eps^j_{k+1} S^j_{k+1}]
    std::vector<double> b0;           // Cov(W_{k+1}, dS^j)
    std::vector<double> b_eps;        // E[eps^j_{k+1} S^j_{k+1} X^j_{k+2}]
};

struct StepMoments {
    std::size_t k = 0;
    std::vector<std::size_t> active;
    std::vector<BinMoments> bins;
};

/// Moments over the paths of each bin at step k (increment from t_k to
/// t_{k+1}). `w_next` is the pathwise gains target W_{k+1}; `x_next` holds
/// X_{k+2}, path-major with one value per asset (all assets, not just the
/// active ones).
StepMoments estimate_step_moments(std::size_t k, const ExtendedPriceSet& prices,
                                  std::span<const double> w_next, std::span<const double> x_next,
                                  const BinPartition& partition, std::size_t threads = 1);

/// Per-bin linear system F c = b over the active assets.
struct StepSystem {
    std::size_t k = 0;
    std::vector<std::size_t> active;
    std::size_t d = 0;
    std::vector<double> f;  // per bin d*d, bin-major
    std::vector<double> b;  // per bin d
    std::vector<double> c;  // filled by solve_step
    std::vector<std::size_t> counts;

    std::size_t n_bins() const { return counts.size(); }
};

StepSystem assemble_step_system(const StepMoments& moments, double alpha);
StepSystem assemble_step_system(std::size_t k, const ExtendedPriceSet& prices,
                                std::span<const double> w_next, std::span<const double> x_next,
                                const BinPartition& partition, const LrmConfig& cfg);

struct SolverEvent {
    std::size_t k = 0;
    std::size_t bin = 0;
    std::string kind;
    double value = 0.0;
};

/// Zeroes the covariance row and gains entry of every active asset whose
/// in-bin increment variance is at most `tolerance` * E[S_{k+1}^2], i.e. whose
/// increment is numerically known at t_k (the last step before maturity under
/// left-point delivery averaging). Appends a "predictable_increment" event per
/// (bin, asset) with the ratio as value; returns their number.
std::size_t suppress_predictable_increments(StepMoments& moments, double tolerance,
                                            std::vector<SolverEvent>* events = nullptr);

/// Fills system.c. Empty bins get c = 0 silently; ridge and zero-matrix
/// fallbacks are appended to `events`.
void solve_step(StepSystem& system, const LrmConfig& cfg, std::vector<SolverEvent>* events = nullptr);

/// Output of the backward induction.
///
/// x(p, k, j) is X_{k+1}^j, the holding over (t_k, t_{k+1}]; row k = T holds
/// the liquidation target X_{T+1} = 0. v and y are indexed by grid point.
struct StrategySet {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::size_t n_assets = 0;
    std::vector<double> x_values;
    std::vector<double> v_values;
    std::vector<double> y_values;
    /// Bin of each path at step k, k = 0..T-1, and the number of bins.
    std::vector<std::vector<std::uint32_t>> bins;
    std::vector<std::size_t> n_bins;
    std::vector<SolverEvent> events;
    std::vector<StepMoments> moments;

    double x(std::size_t p, std::size_t k, std::size_t j) const {
        return x_values[(k * n_paths + p) * n_assets + j];
    }
    double v(std::size_t p, std::size_t k) const { return v_values[k * n_paths + p]; }
    double y(std::size_t p, std::size_t k) const { return y_values[k * n_paths + p]; }
    /// X_{k+1} over all assets for path p, as a span into x_values.
    std::span<const double> holdings(std::size_t k) const {
        return {x_values.data() + k * n_paths * n_assets, n_paths * n_assets};
    }
};

using PartitionBuilder = std::function<BinPartition(std::size_t k)>;

/// Bins on the factor values at t_k.
PartitionBuilder factor_partition_builder(const PathSet& paths, std::size_t bins_per_dim,
                                          std::size_t min_bin_count);
/// Bins on the prices of the assets active at step k.
PartitionBuilder price_partition_builder(const ExtendedPriceSet& prices, std::size_t bins_per_dim,
                                         std::size_t min_bin_count);

/// Backward induction from the cash-settled terminal condition V_T = H,
/// X_{T+1} = 0. Errors from estimation or solving are rethrown with the step
/// index attached.
StrategySet backward_induction(const ExtendedPriceSet& prices, std::span<const double> payoff,
                               const PartitionBuilder& partition_builder, const LrmConfig& cfg);

/// Samples of one bin for the single-asset floored supply curve.
struct TruncatedInputs {
    std::span<const double> w_next;  // W_{k+1}
    std::span<const double> ds;      // S_{k+1} - S_k
    std::span<const double> eps_s;   // eps_{k+1} S_{k+1}
    std::span<const double> x_next;  // X_{k+2}
    double floor_fraction = 0.0;     // z
    double alpha = 1.0;
};

struct TruncatedSolution {
    double c = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// |c - g(c)| for the implicit map g.
    double residual = 0.0;
    /// Another starting point reached a fixed point farther than tolerance away.
    bool multiple = false;
    std::vector<double> fixed_points;
};

/// Right-hand side of the implicit relation c = g(c).
double truncated_map(const TruncatedInputs& in, double c);
/// Var(W - c dS) + alpha E[liquidity cost of the trade X_{k+2} - c].
double truncated_objective(const TruncatedInputs& in, double c);

/// Iterates c <- g(c) from the linear-curve solution and from a few other
/// starting points; returns the fixed point with the lowest objective.
TruncatedSolution solve_truncated_1d(const TruncatedInputs& in, const FixedPointSettings& settings);

}  // namespace lrm
