#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lrm/lrm_engine.hpp"

namespace lrm {

/// Sample mean with its standard error.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

Estimate estimate(std::span<const double> samples);
/// m4 / m2^2 with central sample moments; NaN for a constant sample.
double sample_kurtosis(std::span<const double> samples);

/// Estimate of mean(a - b) from paired samples.
Estimate paired_difference(std::span<const double> a, std::span<const double> b);

enum class CostMode { Classical, Illiquid };

/// C_k = V_k - sum_{m<=k} X_m dS_m, plus, in illiquid mode, the liquidity cost
/// of every trade dX_{m+1} = X_{m+1} - X_m made at t_m, m = 1..k. Returned
/// [k][path] for k = 0..T.
std::vector<double> cost_process(const StrategySet& strategy, const ExtendedPriceSet& prices,
                                 CostMode mode);

/// Liquidity cost of the trade made at t_m (m = 1..T) on one path.
double liquidity_increment(const StrategySet& strategy, const ExtendedPriceSet& prices,
                           std::size_t path, std::size_t m);

/// Per-path quantities whose means are the criteria.
struct CriteriaSamples {
    std::vector<double> quadratic;    // (C_T - C_0)^2
    std::vector<double> liquidity;    // total liquidity cost
    std::vector<double> initial;      // H - sum X dS
    std::vector<double> linear;       // |C^_T - C^_0|
    std::vector<double> variability;  // sum over m = 1..T and assets of |dX_{m+1}|
};

struct CriteriaReport {
    Estimate t0;
    Estimate t0_tilde;
    Estimate l0;
    Estimate c0;
    Estimate l0_bar;
    /// t0_tilde + alpha * l0.
    Estimate t0_alpha;
    Estimate strategy_variability;
    std::vector<Estimate> variability_per_asset;
    double v0 = 0.0;
    CriteriaSamples samples;
};

/// Criteria of `strategy` under the liquidity structures stored in `prices`.
/// Throws ParameterError if inputs are misaligned or V_T differs from H.
CriteriaReport evaluate_criteria(const StrategySet& strategy, const ExtendedPriceSet& prices,
                                 std::span<const double> payoff, double alpha);

/// "1.32E-3": two decimals, unpadded exponent.
std::string format_sci(double value);

std::string criteria_csv_header();
/// One table row comparing the illiquid (L) and classical (C) strategies.
std::string criteria_csv_row(const std::string& instruments, const CriteriaReport& liquid,
                             const CriteriaReport& classical);

}  // namespace lrm
