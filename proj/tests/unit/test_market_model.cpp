#include <doctest.h>

#include <cmath>
#include <vector>

#include "lrm/market_model.hpp"

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

const LevyDriverSpec kGamma{DriverKind::GammaProcess, 1.0, 1.0, JumpConvention::Rate};
const LevyDriverSpec kJumps{DriverKind::CompoundPoisson, 1.0, 0.1, JumpConvention::Rate};

}  // namespace

TEST_SUITE("market_model") {
    TEST_CASE("driverless factor follows the linear recursion") {
        const TimeGrid grid(0.1, 80);
        const std::vector<OUFactorSpec> f{factor(0.01, 0.0, 0.5, kGamma)};
        const auto paths = simulate_paths(f, grid, 5, 1);
        for (std::size_t p = 0; p < 5; ++p) {
            for (std::size_t k = 0; k <= 80; ++k) {
                CHECK(paths.factor(p, k, 0) ==
                      doctest::Approx(0.5 * std::pow(1.0 - 0.01 * grid.h(), static_cast<double>(k)))
                          .epsilon(1e-14));
            }
        }
    }

    TEST_CASE("zero start without driver stays at zero") {
        const TimeGrid grid(0.1, 10);
        const std::vector<OUFactorSpec> f{factor(0.01, 0.0, 0.0, kGamma), factor(0.1, 0.0, 0.0, kJumps)};
        const auto paths = simulate_paths(f, grid, 3, 1);
        for (std::size_t k = 0; k <= 10; ++k) {
            CHECK(paths.spot(2, k) == 0.0);
        }
    }

    TEST_CASE("factor mean matches the Euler recursion of the Levy-OU mean") {
        const TimeGrid grid(0.1, 80);
        const std::vector<OUFactorSpec> f{factor(0.01, 0.34, 0.5, kGamma), factor(0.1, 0.01, 0.5, kJumps)};
        const std::size_t n = 20000;
        const auto paths = simulate_paths(f, grid, n, 20240601);
        // Closed-form mean y0 e^{-lt} + sigma m (1 - e^{-lt}) / l; the Euler
        // bias is O(l h) and far below the Monte Carlo error here.
        const double t = 0.1;
        const double expect = 0.5 * std::exp(-0.01 * t) + 0.34 * 1.0 * (1.0 - std::exp(-0.01 * t)) / 0.01;
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double y = paths.factor(p, 80, 0);
            s += y;
            s2 += y * y;
        }
        const double mean = s / n;
        const double se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - expect) <= 4.0 * se + 1e-5);
    }

    TEST_CASE("results do not depend on the thread count") {
        const TimeGrid grid(0.1, 20);
        const std::vector<OUFactorSpec> f{factor(0.01, 0.34, 0.5, kGamma), factor(0.1, 0.01, 0.5, kJumps)};
        CHECK(simulate_paths(f, grid, 500, 9, 1).checksum() == simulate_paths(f, grid, 500, 9, 3).checksum());
    }

    TEST_CASE("average spot by the left Riemann rule") {
        const TimeGrid grid(8.0, 8);
        PathSet paths(1, 9, 1, 0);
        for (std::size_t k = 0; k <= 8; ++k) {
            paths.spot(0, k) = static_cast<double>(k);
        }
        CHECK(average_spot(paths, grid, 0.0, 4.0)[0] == doctest::Approx(1.5));
        CHECK(average_spot(paths, grid, 3.0, 4.0)[0] == doctest::Approx(3.0));
        for (std::size_t k = 0; k <= 8; ++k) {
            paths.spot(0, k) = 2.5;
        }
        CHECK(average_spot(paths, grid, 2.0, 7.0)[0] == doctest::Approx(2.5));
    }

    TEST_CASE("running window average ends at the full average") {
        const TimeGrid grid(8.0, 8);
        PathSet paths(1, 9, 1, 0);
        for (std::size_t k = 0; k <= 8; ++k) {
            paths.spot(0, k) = static_cast<double>(k * k);
        }
        const auto r = running_window_average(paths, grid, 2.0, 6.0);
        CHECK(r[2][0] == 0.0);
        CHECK(r[3][0] == doctest::Approx(4.0 / 4.0));
        CHECK(r[6][0] == doctest::Approx(average_spot(paths, grid, 2.0, 6.0)[0]));
    }

    TEST_CASE("call payoff") {
        CHECK(call_payoff(1.2, 1.05) == doctest::Approx(0.15));
        CHECK(call_payoff(0.9, 1.05) == 0.0);
        CHECK(call_payoff(1.05, 1.05) == 0.0);
    }

    TEST_CASE("off-grid window is rejected") {
        const TimeGrid grid(0.1, 80);
        PathSet paths(1, 81, 1, 0);
        CHECK_THROWS_AS(average_spot(paths, grid, 0.0123, 0.1), ParameterError);
    }
}
