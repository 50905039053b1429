#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrm/liquidity.hpp"
#include "lrm/market_model.hpp"

namespace lrm {

/// Electricity futures delivering the average spot over [t1f, t2f].
struct FuturesSpec {
    std::string label;
    double t1f = 0.0;
    double t2f = 0.0;
    LiquidityStructure liquidity;
    /// z of the floored supply curve; absent for the pure linear curve.
    std::optional<double> floor_fraction;

    void validate(const TimeGrid& grid) const;
};

/// (1/(t2f - t1f)) * integral over [max(t, t1f), t2f] of Lambda(u) e^{-lambda (u - t)} du.
double futures_factor_weight(const OUFactorSpec& factor, double t, double t1f, double t2f);

/// (1/(t2f - t1f)) * m * integral over u in [max(t, t1f), t2f] and s in [t, u] of
/// sigma(s) Lambda(u) e^{-lambda (u - s)}, with m the driver's first moment.
double futures_factor_drift(const OUFactorSpec& factor, double t, double t1f, double t2f);

/// F(t; t1f, t2f) given the factor state Y(t) and, inside the delivery period,
/// the realized integral of the spot over [t1f, t]. Throws for t > t2f.
double futures_price(std::span<const double> factor_state, double realized_integral,
                     const FuturesSpec& spec, double t, std::span<const OUFactorSpec> factors);

/// Discrete futures prices on the grid, each asset frozen after its maturity.
///
/// Storage is [k][path][asset]; assets are kept in nondecreasing maturity order.
class ExtendedPriceSet {
public:
    ExtendedPriceSet(std::vector<FuturesSpec> assets, std::vector<std::size_t> maturity_index,
                     std::vector<double> times, std::size_t n_paths);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_points() const { return n_points_; }
    std::size_t n_assets() const { return assets_.size(); }
    const std::vector<FuturesSpec>& assets() const { return assets_; }
    /// Grid index of t2f for asset j.
    std::size_t maturity_index(std::size_t j) const { return maturity_index_[j]; }
    double time(std::size_t k) const { return times_[k]; }
    std::size_t n_steps() const { return n_points_ - 1; }
    /// Liquidity level of asset j at t_k, held at its delivery value after maturity.
    double epsilon(std::size_t k, std::size_t j) const { return epsilon_[k * assets_.size() + j]; }
    /// Replaces the supply-curve structure of every asset (prices unchanged).
    void set_liquidity(const std::vector<LiquidityStructure>& structures);

    double price(std::size_t path, std::size_t k, std::size_t j) const {
        return prices_[(k * n_paths_ + path) * assets_.size() + j];
    }
    double& price(std::size_t path, std::size_t k, std::size_t j) {
        return prices_[(k * n_paths_ + path) * assets_.size() + j];
    }

private:
    std::vector<FuturesSpec> assets_;
    std::vector<std::size_t> maturity_index_;
    std::vector<double> times_;
    std::vector<double> epsilon_;
    std::size_t n_paths_;
    std::size_t n_points_;
    std::vector<double> prices_;
};

/// Evaluates futures_price at the simulated factor states. Throws
/// ParameterError if maturities are not sorted nondecreasingly or any date is
/// off the grid.
ExtendedPriceSet build_extended_prices(const PathSet& paths, const TimeGrid& grid,
                                       std::span<const OUFactorSpec> factors,
                                       std::vector<FuturesSpec> assets, std::size_t threads = 1);

/// Assets whose holdings over (t_k, t_{k+1}] may be nonzero: t_{k+1} <= t2f.
std::vector<std::size_t> active_assets(std::size_t k, const ExtendedPriceSet& prices);
std::vector<std::size_t> active_assets(std::size_t k, const TimeGrid& grid,
                                       std::span<const FuturesSpec> assets);

/// Covariance of the price increments over (t_k, t_{k+1}] given the state at
/// t_k under the Euler factor scheme (clamping ignored); d x d row-major over
/// `active`. It does not depend on the state because prices are affine in
/// the factors and the realized part of the delivery average is known at t_k.
std::vector<double> model_increment_covariance(std::size_t k, const TimeGrid& grid,
                                               std::span<const OUFactorSpec> factors,
                                               std::span<const FuturesSpec> assets,
                                               std::span<const std::size_t> active);

}  // namespace lrm
