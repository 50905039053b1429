#include <doctest.h>

#include <cmath>
#include <vector>

#include "lrm/futures_curve.hpp"

using namespace lrm;

namespace {

OUFactorSpec factor(double lambda, double sigma, double y0, LevyDriverSpec driver) {
    OUFactorSpec f;
    f.lambda = lambda;
    f.sigma = StepFunction::constant(sigma);
    f.y0 = y0;
    f.driver = driver;
    return f;
}

FuturesSpec futures(const char* label, double t1f, double t2f) {
    FuturesSpec s;
    s.label = label;
    s.t1f = t1f;
    s.t2f = t2f;
    s.liquidity = {LiquidityKind::Constant, 0.01, 0.01, 0.0, t1f, t2f, 1.0};
    return s;
}

const LevyDriverSpec kGamma{DriverKind::GammaProcess, 1.0, 1.0, JumpConvention::Rate};
const LevyDriverSpec kJumps{DriverKind::CompoundPoisson, 1.0, 0.1, JumpConvention::Rate};

std::vector<OUFactorSpec> preset_factors() {
    return {factor(0.01, 0.34, 0.5, kGamma), factor(0.1, 0.01, 0.5, kJumps)};
}

}  // namespace

TEST_SUITE("futures_curve") {
    TEST_CASE("factor weight closed form") {
        const auto f = factor(0.01, 0.34, 0.5, kGamma);
        const double expect = (std::exp(-0.01 * 0.05) - std::exp(-0.01 * 0.1)) / (0.01 * 0.05);
        CHECK(futures_factor_weight(f, 0.0, 0.05, 0.1) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(futures_factor_weight(f, 0.0, 0.05, 0.1) == doctest::Approx(0.99925).epsilon(1e-5));
    }

    TEST_CASE("weights lie in (0, 1] before maturity") {
        for (double lambda : {0.0, 0.01, 0.1, 5.0}) {
            const auto f = factor(lambda, 0.1, 0.5, kGamma);
            for (double t : {0.0, 0.02, 0.05, 0.09}) {
                const double w = futures_factor_weight(f, t, 0.0125, 0.1);
                CHECK(w > 0.0);
                CHECK(w <= 1.0 + 1e-15);
            }
        }
    }

    TEST_CASE("no mean reversion and no volatility gives the factor sum") {
        const std::vector<OUFactorSpec> fs{factor(1e-14, 0.0, 0.5, kGamma), factor(0.0, 0.0, 0.5, kJumps)};
        const FuturesSpec spec = futures("F", 0.05, 0.1);
        const std::vector<double> y{0.7, 0.4};
        CHECK(futures_price(y, 0.0, spec, 0.0, fs) == doctest::Approx(1.1).epsilon(1e-12));
    }

    TEST_CASE("at maturity the price is the realized delivery average") {
        const auto fs = preset_factors();
        const FuturesSpec spec = futures("F", 0.05, 0.1);
        const std::vector<double> y{0.9, 3.0};
        CHECK(futures_price(y, 0.05 * 1.3, spec, 0.1, fs) == doctest::Approx(1.3).epsilon(1e-12));
        CHECK_THROWS_AS(futures_price(y, 0.0, spec, 0.11, fs), ParameterError);
    }

    TEST_CASE("extended prices freeze after maturity") {
        const TimeGrid grid(0.1, 80);
        const auto fs = preset_factors();
        const auto paths = simulate_paths(fs, grid, 50, 3);
        const auto prices = build_extended_prices(paths, grid, fs, {futures("F1", 0.0125, 0.05), futures("F2", 0.0125, 0.1)});
        const std::size_t m = prices.maturity_index(0);
        CHECK(m == 40);
        std::size_t moved = 0;
        for (std::size_t p = 0; p < 50; ++p) {
            for (std::size_t k = m; k <= 80; ++k) {
                CHECK(prices.price(p, k, 0) == prices.price(p, m, 0));
            }
            moved += prices.price(p, 80, 1) != prices.price(p, m, 1);
        }
        CHECK(moved == 50);
    }

    TEST_CASE("single asset on the claim window ends at the claim underlying") {
        const TimeGrid grid(0.1, 80);
        const auto fs = preset_factors();
        const auto paths = simulate_paths(fs, grid, 20, 4);
        const auto prices = build_extended_prices(paths, grid, fs, {futures("F2", 0.0125, 0.1)});
        const auto avg = average_spot(paths, grid, 0.0125, 0.1);
        for (std::size_t p = 0; p < 20; ++p) {
            CHECK(prices.price(p, 80, 0) == doctest::Approx(avg[p]).epsilon(1e-12));
        }
    }

    TEST_CASE("unsorted maturities are rejected") {
        const TimeGrid grid(0.1, 80);
        const auto fs = preset_factors();
        const auto paths = simulate_paths(fs, grid, 2, 4);
        CHECK_THROWS_AS(build_extended_prices(paths, grid, fs, {futures("F2", 0.0125, 0.1), futures("F1", 0.0125, 0.05)}),
                        ParameterError);
    }

    TEST_CASE("active assets") {
        const TimeGrid grid(0.1, 80);
        const std::vector<FuturesSpec> assets{futures("F1", 0.0125, 0.05), futures("F2", 0.0125, 0.1)};
        CHECK(active_assets(0, grid, assets) == std::vector<std::size_t>{0, 1});
        CHECK(active_assets(39, grid, assets) == std::vector<std::size_t>{0, 1});
        CHECK(active_assets(40, grid, assets) == std::vector<std::size_t>{1});
        CHECK(active_assets(79, grid, assets) == std::vector<std::size_t>{1});
        const std::vector<FuturesSpec> early{futures("F1", 0.0125, 0.05)};
        CHECK(active_assets(60, grid, early).empty());
    }

    TEST_CASE("model increment covariance matches sampled increments") {
        const TimeGrid grid(0.1, 80);
        const auto fs = preset_factors();
        const std::size_t n = 200000;
        const auto paths = simulate_paths(fs, grid, n, 11);
        const std::vector<FuturesSpec> assets{futures("F1", 0.0125, 0.05), futures("F2", 0.0125, 0.1)};
        const auto prices = build_extended_prices(paths, grid, fs, assets);
        const std::vector<std::size_t> active{0, 1};
        for (std::size_t k : {std::size_t{0}, std::size_t{20}}) {
            const auto model = model_increment_covariance(k, grid, fs, assets, active);
            for (std::size_t a = 0; a < 2; ++a) {
                for (std::size_t b = 0; b < 2; ++b) {
                    std::vector<double> da(n);
                    std::vector<double> db(n);
                    double ma = 0.0;
                    double mb = 0.0;
                    for (std::size_t p = 0; p < n; ++p) {
                        da[p] = prices.price(p, k + 1, a) - prices.price(p, k, a);
                        db[p] = prices.price(p, k + 1, b) - prices.price(p, k, b);
                        ma += da[p];
                        mb += db[p];
                    }
                    ma /= n;
                    mb /= n;
                    double s = 0.0;
                    double s2 = 0.0;
                    for (std::size_t p = 0; p < n; ++p) {
                        const double u = (da[p] - ma) * (db[p] - mb);
                        s += u;
                        s2 += u * u;
                    }
                    const double cov = s / n;
                    const double se = std::sqrt((s2 / n - cov * cov) / n);
                    CHECK(std::abs(cov - model[a * 2 + b]) <= 4.0 * se);
                }
            }
        }
    }

    TEST_CASE("model increment covariance vanishes on the last step before maturity") {
        const TimeGrid grid(0.1, 80);
        const auto fs = preset_factors();
        const std::vector<FuturesSpec> assets{futures("F1", 0.0125, 0.05), futures("F2", 0.0125, 0.1)};
        const std::vector<std::size_t> active{0, 1};
        const auto cov = model_increment_covariance(39, grid, fs, assets, active);
        CHECK(cov[0] == 0.0);
        CHECK(cov[1] == 0.0);
        CHECK(cov[2] == 0.0);
        CHECK(cov[3] > 0.0);
    }
}
