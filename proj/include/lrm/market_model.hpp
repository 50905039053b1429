#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lrm/levy_driver.hpp"
#include "lrm/time_grid.hpp"

namespace lrm {

/// One Levy-driven Ornstein-Uhlenbeck factor
///   dY = -lambda Y dt + sigma(t) dL,  Y(0) = y0,
/// entering the spot as seasonality(t) * Y(t).
struct OUFactorSpec {
    double lambda = 0.01;
    StepFunction sigma = StepFunction::constant(0.0);
    double y0 = 0.0;
    LevyDriverSpec driver;
    StepFunction seasonality = StepFunction::constant(1.0);

    void validate() const;
};

/// Simulated factor and spot paths on a TimeGrid.
///
/// Storage is time-major ([k][path][factor]) because the backward induction
/// and the binning both sweep all paths at a fixed grid index.
class PathSet {
public:
    PathSet(std::size_t n_paths, std::size_t n_points, std::size_t n_factors, std::uint64_t seed);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_points() const { return n_points_; }
    std::size_t n_factors() const { return n_factors_; }
    std::uint64_t seed() const { return seed_; }

    double factor(std::size_t path, std::size_t k, std::size_t i) const {
        return factors_[(k * n_paths_ + path) * n_factors_ + i];
    }
    double& factor(std::size_t path, std::size_t k, std::size_t i) {
        return factors_[(k * n_paths_ + path) * n_factors_ + i];
    }
    double spot(std::size_t path, std::size_t k) const { return spot_[k * n_paths_ + path]; }
    double& spot(std::size_t path, std::size_t k) { return spot_[k * n_paths_ + path]; }

    /// All factor values at grid index k, path-major within the slice.
    std::span<const double> factor_slice(std::size_t k) const {
        return {factors_.data() + k * n_paths_ * n_factors_, n_paths_ * n_factors_};
    }

    /// FNV-1a digest of all stored values; used to assert that two
    /// strategies were computed on the same simulation.
    std::uint64_t checksum() const;

private:
    std::size_t n_paths_;
    std::size_t n_points_;
    std::size_t n_factors_;
    std::uint64_t seed_;
    std::vector<double> factors_;
    std::vector<double> spot_;
};

/// Euler scheme Y_{k+1} = Y_k - lambda Y_k h + sigma(t_k) dL_k, clamped at 0,
/// with one RngStream per path (stream id = path index). Results do not depend
/// on `threads`.
PathSet simulate_paths(std::span<const OUFactorSpec> factors, const TimeGrid& grid,
                       std::size_t n_paths, std::uint64_t seed, std::size_t threads = 1);

/// Left-endpoint Riemann average of the spot over [t_start, t_end_avg).
std::vector<double> average_spot(const PathSet& paths, const TimeGrid& grid, double t_start,
                                 double t_end_avg);

/// Left-endpoint partial sums of the spot over the window known at each grid
/// point: entry [k][path] = sum of E(t_m) for window cells m < k, scaled to an
/// average over the full window. Zero before the window opens.
std::vector<std::vector<double>> running_window_average(const PathSet& paths, const TimeGrid& grid,
                                                        double t_start, double t_end_avg);

/// max(average_spot - strike, 0) per path.
std::vector<double> asian_call_payoff(const PathSet& paths, const TimeGrid& grid, double t1c,
                                      double t2c, double strike);

/// Payoff of a call on an already computed average.
inline double call_payoff(double average, double strike) {
    return average > strike ? average - strike : 0.0;
}

}  // namespace lrm
