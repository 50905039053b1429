#include "lrm/market_model.hpp"

#include <cmath>
#include <cstring>

#include "lrm/parallel.hpp"

namespace lrm {

void OUFactorSpec::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("factor: lambda must be positive");
    }
    sigma.validate("factor sigma");
    seasonality.validate("factor seasonality");
    if (sigma.min_value() < 0.0) {
        throw ParameterError("factor: sigma must be nonnegative");
    }
    if (!(seasonality.min_value() > 0.0)) {
        throw ParameterError("factor: seasonality must be positive");
    }
    if (!(y0 >= 0.0) || !std::isfinite(y0)) {
        throw ParameterError("factor: y0 must be nonnegative");
    }
    driver.validate();
}

PathSet::PathSet(std::size_t n_paths, std::size_t n_points, std::size_t n_factors,
                 std::uint64_t seed)
    : n_paths_(n_paths),
      n_points_(n_points),
      n_factors_(n_factors),
      seed_(seed),
      factors_(n_paths * n_points * n_factors, 0.0),
      spot_(n_paths * n_points, 0.0) {}

std::uint64_t PathSet::checksum() const {
    std::uint64_t hash = 1469598103934665603ull;
    auto mix = [&hash](const std::vector<double>& values) {
        for (double v : values) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                hash ^= (bits >> (8 * b)) & 0xffu;
                hash *= 1099511628211ull;
            }
        }
    };
    mix(factors_);
    mix(spot_);
    return hash;
}

PathSet simulate_paths(std::span<const OUFactorSpec> factors, const TimeGrid& grid,
                       std::size_t n_paths, std::uint64_t seed, std::size_t threads) {
    if (n_paths == 0) {
        throw ParameterError("simulate_paths: need at least one path");
    }
    if (factors.empty()) {
        throw ParameterError("simulate_paths: need at least one factor");
    }
    for (const auto& f : factors) {
        f.validate();
    }
    const std::size_t n_f = factors.size();
    const std::size_t n_pts = grid.n_points();
    const double h = grid.h();
    PathSet paths(n_paths, n_pts, n_f, seed);

    std::vector<double> season(n_pts * n_f);
    std::vector<double> vol(n_pts * n_f);
    for (std::size_t k = 0; k < n_pts; ++k) {
        for (std::size_t i = 0; i < n_f; ++i) {
            season[k * n_f + i] = factors[i].seasonality(grid.time(k));
            vol[k * n_f + i] = factors[i].sigma(grid.time(k));
        }
    }

    parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> y(n_f);
        for (std::size_t p = begin; p < end; ++p) {
            RngStream rng(seed, p);
            for (std::size_t i = 0; i < n_f; ++i) {
                y[i] = factors[i].y0;
            }
            for (std::size_t k = 0;; ++k) {
                double e = 0.0;
                for (std::size_t i = 0; i < n_f; ++i) {
                    paths.factor(p, k, i) = y[i];
                    e += season[k * n_f + i] * y[i];
                }
                paths.spot(p, k) = e;
                if (k + 1 == n_pts) {
                    break;
                }
                for (std::size_t i = 0; i < n_f; ++i) {
                    // Drivers are sampled in factor order so each stream is consumed identically.
                    const double dl = sample_increment(factors[i].driver, h, rng);
                    const double next = y[i] - factors[i].lambda * y[i] * h + vol[k * n_f + i] * dl;
                    y[i] = next > 0.0 ? next : 0.0;
                }
            }
        }
    });
    return paths;
}

std::vector<double> average_spot(const PathSet& paths, const TimeGrid& grid, double t_start,
                                 double t_end_avg) {
    const std::size_t k1 = grid.index_of(t_start);
    const std::size_t k2 = grid.index_of(t_end_avg);
    if (k1 >= k2) {
        throw ParameterError("average_spot: window start must precede its end");
    }
    if (k2 >= paths.n_points()) {
        throw ParameterError("average_spot: window exceeds simulated horizon");
    }
    std::vector<double> avg(paths.n_paths(), 0.0);
    for (std::size_t k = k1; k < k2; ++k) {
        for (std::size_t p = 0; p < paths.n_paths(); ++p) {
            avg[p] += paths.spot(p, k);
        }
    }
    const double cells = static_cast<double>(k2 - k1);
    for (double& a : avg) {
        a /= cells;
    }
    return avg;
}

std::vector<std::vector<double>> running_window_average(const PathSet& paths, const TimeGrid& grid,
                                                        double t_start, double t_end_avg) {
    const std::size_t k1 = grid.index_of(t_start);
    const std::size_t k2 = grid.index_of(t_end_avg);
    if (k1 >= k2 || k2 >= paths.n_points()) {
        throw ParameterError("running_window_average: invalid window");
    }
    const double cells = static_cast<double>(k2 - k1);
    std::vector<std::vector<double>> out(paths.n_points(), std::vector<double>(paths.n_paths(), 0.0));
    for (std::size_t k = k1 + 1; k < paths.n_points(); ++k) {
        out[k] = out[k - 1];
        if (k - 1 < k2) {
            for (std::size_t p = 0; p < paths.n_paths(); ++p) {
                out[k][p] += paths.spot(p, k - 1) / cells;
            }
        }
    }
    return out;
}

std::vector<double> asian_call_payoff(const PathSet& paths, const TimeGrid& grid, double t1c,
                                      double t2c, double strike) {
    if (!std::isfinite(strike)) {
        throw ParameterError("asian_call_payoff: strike must be finite");
    }
    auto payoff = average_spot(paths, grid, t1c, t2c);
    for (double& v : payoff) {
        v = call_payoff(v, strike);
    }
    return payoff;
}

}  // namespace lrm
