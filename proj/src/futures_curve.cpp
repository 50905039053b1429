#include "lrm/futures_curve.hpp"

#include <algorithm>
#include <cmath>

#include "lrm/parallel.hpp"

namespace lrm {

namespace {

// (1 - e^{-lambda x}) / lambda, stable for small lambda x.
double phi(double lambda, double x) {
    const double z = lambda * x;
    if (std::abs(z) < 1e-8) {
        return x * (1.0 - 0.5 * z);
    }
    return -std::expm1(-z) / lambda;
}

// Integral of phi(lambda, y) over y in [0, x] = (x - phi(lambda, x)) / lambda.
double phi_integral(double lambda, double x) {
    const double z = lambda * x;
    if (std::abs(z) < 1e-3) {
        return x * x * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0);
    }
    return (x - phi(lambda, x)) / lambda;
}

// Breakpoints of f strictly inside (a, b), with a and b at the ends.
std::vector<double> split_points(double a, double b, const StepFunction& f, const StepFunction& g) {
    std::vector<double> pts{a, b};
    for (const auto* fn : {&f, &g}) {
        for (double x : fn->breaks) {
            if (x > a && x < b) {
                pts.push_back(x);
            }
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// Integral over s in [t, u] of sigma(s) e^{-lambda (u - s)}, exact for step sigma.
double inner_integral(const OUFactorSpec& f, double t, double u) {
    const auto pts = split_points(t, u, f.sigma, f.sigma);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        const double s = f.sigma(0.5 * (a + b));
        total += s * std::exp(-f.lambda * (u - b)) * phi(f.lambda, b - a);
    }
    return total;
}

void check_window(double t, double t1f, double t2f) {
    if (!(t2f > t1f) || !(t1f >= 0.0)) {
        throw ParameterError("futures: need 0 <= t1f < t2f");
    }
    if (t < 0.0 || t > t2f * (1.0 + 1e-12)) {
        throw ParameterError("futures: evaluation time outside [0, t2f]");
    }
}

}  // namespace

void FuturesSpec::validate(const TimeGrid& grid) const {
    if (!(t1f > 0.0) || !(t2f > t1f)) {
        throw ParameterError("futures " + label + ": need 0 < t1f < t2f");
    }
    if (!grid.on_grid(t1f) || !grid.on_grid(t2f)) {
        throw ParameterError("futures " + label + ": delivery dates must lie on the grid");
    }
    if (floor_fraction && !(*floor_fraction > 0.0)) {
        throw ParameterError("futures " + label + ": floor fraction must be positive");
    }
    liquidity.validate();
}

double futures_factor_weight(const OUFactorSpec& f, double t, double t1f, double t2f) {
    check_window(t, t1f, t2f);
    const double lower = std::max(t, t1f);
    if (lower >= t2f) {
        return 0.0;
    }
    const auto pts = split_points(lower, t2f, f.seasonality, f.seasonality);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        total += f.seasonality(0.5 * (a + b)) * std::exp(-f.lambda * (a - t)) * phi(f.lambda, b - a);
    }
    return total / (t2f - t1f);
}

double futures_factor_drift(const OUFactorSpec& f, double t, double t1f, double t2f) {
    check_window(t, t1f, t2f);
    const double lower = std::max(t, t1f);
    if (lower >= t2f) {
        return 0.0;
    }
    const double m = first_moment(f.driver);
    const double dt = t2f - t1f;
    if (f.sigma.is_constant() && f.seasonality.is_constant()) {
        const double scale = f.sigma.values[0] * f.seasonality.values[0] * m / dt;
        return scale * (phi_integral(f.lambda, t2f - t) - phi_integral(f.lambda, lower - t));
    }
    // Integrand is smooth between breakpoints of sigma and Lambda; composite Simpson there.
    auto pts = split_points(lower, t2f, f.sigma, f.seasonality);
    constexpr int panels = 64;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        const double lam = f.seasonality(0.5 * (a + b));
        const double step = (b - a) / panels;
        double acc = inner_integral(f, t, a) + inner_integral(f, t, b);
        for (int q = 1; q < panels; ++q) {
            acc += (q % 2 ? 4.0 : 2.0) * inner_integral(f, t, a + q * step);
        }
        total += lam * acc * step / 3.0;
    }
    return m * total / dt;
}

double futures_price(std::span<const double> factor_state, double realized_integral,
                     const FuturesSpec& spec, double t, std::span<const OUFactorSpec> factors) {
    if (factor_state.size() != factors.size()) {
        throw ParameterError("futures_price: factor state size mismatch");
    }
    check_window(t, spec.t1f, spec.t2f);
    const double dt = spec.t2f - spec.t1f;
    double price = t > spec.t1f ? realized_integral / dt : 0.0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        price += factor_state[i] * futures_factor_weight(factors[i], t, spec.t1f, spec.t2f) +
                 futures_factor_drift(factors[i], t, spec.t1f, spec.t2f);
    }
    return price;
}

ExtendedPriceSet::ExtendedPriceSet(std::vector<FuturesSpec> assets,
                                   std::vector<std::size_t> maturity_index,
                                   std::vector<double> times, std::size_t n_paths)
    : assets_(std::move(assets)),
      maturity_index_(std::move(maturity_index)),
      times_(std::move(times)),
      n_paths_(n_paths),
      n_points_(times_.size()),
      prices_(n_paths * n_points_ * assets_.size(), 0.0) {
    if (maturity_index_.size() != assets_.size()) {
        throw ParameterError("ExtendedPriceSet: one maturity index per asset");
    }
    for (auto k2 : maturity_index_) {
        if (k2 >= n_points_) {
            throw ParameterError("ExtendedPriceSet: maturity beyond the grid");
        }
    }
    std::vector<LiquidityStructure> s;
    for (const auto& a : assets_) {
        s.push_back(a.liquidity);
    }
    set_liquidity(s);
}

void ExtendedPriceSet::set_liquidity(const std::vector<LiquidityStructure>& structures) {
    if (structures.size() != assets_.size()) {
        throw ParameterError("set_liquidity: one structure per asset");
    }
    epsilon_.assign(n_points_ * assets_.size(), 0.0);
    for (std::size_t j = 0; j < assets_.size(); ++j) {
        structures[j].validate();
        assets_[j].liquidity = structures[j];
        for (std::size_t k = 0; k < n_points_; ++k) {
            epsilon_[k * assets_.size() + j] = epsilon_extended(structures[j], times_[k]);
        }
    }
}

ExtendedPriceSet build_extended_prices(const PathSet& paths, const TimeGrid& grid,
                                       std::span<const OUFactorSpec> factors,
                                       std::vector<FuturesSpec> assets, std::size_t threads) {
    if (assets.empty()) {
        throw ParameterError("build_extended_prices: need at least one asset");
    }
    if (paths.n_points() != grid.n_points() || paths.n_factors() != factors.size()) {
        throw ParameterError("build_extended_prices: paths do not match grid or factors");
    }
    for (std::size_t j = 0; j < assets.size(); ++j) {
        assets[j].validate(grid);
        if (j > 0 && assets[j].t2f < assets[j - 1].t2f) {
            throw ParameterError("build_extended_prices: assets must be sorted by maturity");
        }
    }
    const std::size_t n_a = assets.size();
    const std::size_t n_f = factors.size();
    const std::size_t n_pts = grid.n_points();
    const double h = grid.h();

    std::vector<std::size_t> k1(n_a);
    std::vector<std::size_t> k2(n_a);
    // Per (asset, k, factor) weight and per (asset, k) drift.
    std::vector<double> w(n_a * n_pts * n_f, 0.0);
    std::vector<double> drift(n_a * n_pts, 0.0);
    for (std::size_t j = 0; j < n_a; ++j) {
        k1[j] = grid.index_of(assets[j].t1f);
        k2[j] = grid.index_of(assets[j].t2f);
        for (std::size_t k = 0; k <= k2[j]; ++k) {
            const double t = grid.time(k);
            for (std::size_t i = 0; i < n_f; ++i) {
                w[(j * n_pts + k) * n_f + i] =
                    futures_factor_weight(factors[i], t, assets[j].t1f, assets[j].t2f);
                drift[j * n_pts + k] +=
                    futures_factor_drift(factors[i], t, assets[j].t1f, assets[j].t2f);
            }
        }
    }

    std::vector<double> times(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k) {
        times[k] = grid.time(k);
    }
    ExtendedPriceSet out(assets, k2, std::move(times), paths.n_paths());
    parallel_for(paths.n_paths(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            for (std::size_t j = 0; j < n_a; ++j) {
                const double dt = assets[j].t2f - assets[j].t1f;
                double realized = 0.0;
                for (std::size_t k = 0; k <= k2[j]; ++k) {
                    if (k > k1[j]) {
                        realized += h * paths.spot(p, k - 1);
                    }
                    double f = realized / dt + drift[j * n_pts + k];
                    for (std::size_t i = 0; i < n_f; ++i) {
                        f += paths.factor(p, k, i) * w[(j * n_pts + k) * n_f + i];
                    }
                    out.price(p, k, j) = f;
                }
                const double frozen = out.price(p, k2[j], j);
                for (std::size_t k = k2[j] + 1; k < n_pts; ++k) {
                    out.price(p, k, j) = frozen;
                }
            }
        }
    });
    return out;
}

std::vector<std::size_t> active_assets(std::size_t k, const ExtendedPriceSet& prices) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < prices.n_assets(); ++j) {
        if (k + 1 <= prices.maturity_index(j)) {
            active.push_back(j);
        }
    }
    return active;
}

std::vector<std::size_t> active_assets(std::size_t k, const TimeGrid& grid,
                                       std::span<const FuturesSpec> assets) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < assets.size(); ++j) {
        if (k + 1 <= grid.index_of(assets[j].t2f)) {
            active.push_back(j);
        }
    }
    return active;
}

std::vector<double> model_increment_covariance(std::size_t k, const TimeGrid& grid,
                                               std::span<const OUFactorSpec> factors,
                                               std::span<const FuturesSpec> assets,
                                               std::span<const std::size_t> active) {
    if (k + 1 >= grid.n_points()) {
        throw ParameterError("model_increment_covariance: step beyond the grid");
    }
    const std::size_t d = active.size();
    const double t0 = grid.time(k);
    const double t1 = grid.time(k + 1);
    std::vector<double> w(d * factors.size(), 0.0);
    for (std::size_t a = 0; a < d; ++a) {
        if (active[a] >= assets.size()) {
            throw ParameterError("model_increment_covariance: asset index out of range");
        }
        const auto& spec = assets[active[a]];
        if (t1 > spec.t2f) {
            continue;
        }
        for (std::size_t i = 0; i < factors.size(); ++i) {
            w[a * factors.size() + i] = futures_factor_weight(factors[i], t1, spec.t1f, spec.t2f);
        }
    }
    std::vector<double> var(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const double s = factors[i].sigma(t0);
        var[i] = s * s * second_moment(factors[i].driver) * grid.h();
    }
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < factors.size(); ++i) {
                acc += w[a * factors.size() + i] * w[b * factors.size() + i] * var[i];
            }
            cov[a * d + b] = acc;
        }
    }
    return cov;
}

}  // namespace lrm
