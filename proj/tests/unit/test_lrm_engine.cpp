#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

#include "lrm/experiment.hpp"
#include "lrm/lrm_engine.hpp"

using namespace lrm;

namespace {

BinMoments scalar_bin(double var_ds, double a_eps, double b0, double b_eps) {
    BinMoments m;
    m.count = 10;
    m.mean_ds = {0.0};
    m.cov_ds = {var_ds};
    m.mean_s_next = {1.0};
    m.var_s_next = {var_ds};
    m.a_eps = {a_eps};
    m.b0 = {b0};
    m.b_eps = {b_eps};
    return m;
}

// Exact solution of an integer system by rational Gaussian elimination.
std::vector<mpq_class> rational_solve(std::vector<mpq_class> a, std::vector<mpq_class> b, std::size_t d) {
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        while (a[piv * d + col] == 0) {
            ++piv;
        }
        for (std::size_t j = 0; j < d; ++j) {
            std::swap(a[col * d + j], a[piv * d + j]);
        }
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < d; ++r) {
            const mpq_class f = a[r * d + col] / a[col * d + col];
            for (std::size_t j = col; j < d; ++j) {
                a[r * d + j] -= f * a[col * d + j];
            }
            b[r] -= f * b[col];
        }
    }
    std::vector<mpq_class> x(d);
    for (std::size_t i = d; i-- > 0;) {
        mpq_class s = b[i];
        for (std::size_t j = i + 1; j < d; ++j) {
            s -= a[i * d + j] * x[j];
        }
        x[i] = s / a[i * d + i];
    }
    return x;
}

FuturesSpec futures(const char* label) {
    FuturesSpec s;
    s.label = label;
    s.t1f = 0.5;
    s.t2f = 1.0;
    s.liquidity = {LiquidityKind::Constant, 0.01, 0.01, 0.0, 0.5, 1.0, 1.0};
    return s;
}

// One-step market with two correlated assets and a claim linear in the
// increments plus noise; prices at t_0 are 1.
struct OneStep {
    std::size_t n;
    ExtendedPriceSet prices;
    std::vector<double> payoff;
    std::vector<double> state;
    std::vector<double> control;

    explicit OneStep(std::size_t n_paths)
        : n(n_paths), prices({futures("A"), futures("B")}, {1, 1}, {0.0, 1.0}, n_paths) {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g;
        for (std::size_t p = 0; p < n; ++p) {
            const double z = g(rng);
            const double u = g(rng);
            const double v = g(rng);
            const double e = g(rng);
            const double d1 = 0.1 * u + 0.02 * z;
            const double d2 = 0.05 * u + 0.08 * v;
            prices.price(p, 0, 0) = 1.0;
            prices.price(p, 0, 1) = 1.0;
            prices.price(p, 1, 0) = 1.0 + d1;
            prices.price(p, 1, 1) = 1.0 + d2;
            state.push_back(g(rng));
            control.push_back(z + 0.3 * e);
            payoff.push_back(std::max(0.0, 0.7 * d1 - 0.4 * d2 * d1 + 0.2 * z + 0.05 * e));
        }
    }
};

// Slopes on the two increments of the per-bin least-squares fit of the
// payoff on (1, [control,] dS1, dS2).
std::vector<double> eigen_regression(const OneStep& m, const BinPartition& part, bool with_control) {
    std::vector<double> out;
    const int q = with_control ? 4 : 3;
    for (std::size_t bin = 0; bin < part.n_bins; ++bin) {
        const auto members = part.members(bin);
        Eigen::MatrixXd x(members.size(), q);
        Eigen::VectorXd y(members.size());
        for (std::size_t r = 0; r < members.size(); ++r) {
            const std::size_t p = members[r];
            int c = 0;
            x(r, c++) = 1.0;
            if (with_control) {
                x(r, c++) = m.control[p];
            }
            x(r, c++) = m.prices.price(p, 1, 0) - 1.0;
            x(r, c++) = m.prices.price(p, 1, 1) - 1.0;
            y(r) = m.payoff[p];
        }
        const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
        out.push_back(beta(q - 2));
        out.push_back(beta(q - 1));
    }
    return out;
}

struct PresetMarket {
    ExperimentConfig cfg;
    TimeGrid grid;
    PathSet paths;
    ExtendedPriceSet prices;
    std::vector<double> payoff;
    PartitionBuilder builder;

    PresetMarket(std::vector<std::string> hedge, std::size_t n_paths)
        : cfg(load(n_paths)),
          grid(cfg.t_end, cfg.n_steps),
          paths(simulate_paths(cfg.factors, grid, n_paths, cfg.simulation.seed)),
          prices(build_extended_prices(paths, grid, cfg.factors, select_assets(cfg, hedge))),
          payoff(asian_call_payoff(paths, grid, cfg.claim.t1c, cfg.claim.t2c, cfg.claim.strike)),
          builder(make_partition_builder(cfg, paths, prices)) {}

    static ExperimentConfig load(std::size_t n_paths) {
        auto c = load_config(std::string(LRM_SOURCE_DIR) + "/configs/setting1_constant.json");
        c.simulation.n_paths = n_paths;
        c.solver.min_bin_count = 100;
        return c;
    }

    LrmConfig solver(double alpha, BookValue book) const {
        LrmConfig l;
        l.alpha = alpha;
        l.pd_tolerance = cfg.solver.pd_tolerance;
        l.predictable_tolerance = cfg.solver.predictable_tolerance;
        l.book_value = book;
        return l;
    }
};

}  // namespace

TEST_SUITE("lrm_engine") {
    TEST_CASE("scalar system matches the one-asset closed form") {
        StepMoments sm;
        sm.active = {0};
        sm.bins = {scalar_bin(0.04, 0.02, 0.01, 0.005)};
        const auto sys = assemble_step_system(sm, 1.0);
        CHECK(sys.f[0] == doctest::Approx(0.06));
        CHECK(sys.b[0] == doctest::Approx(0.015));
        StepSystem s = sys;
        solve_step(s, LrmConfig{});
        CHECK(s.c[0] == doctest::Approx((0.01 + 0.005) / (0.04 + 0.02)));
    }

    TEST_CASE("without liquidity terms the system is the classical one") {
        StepMoments sm;
        sm.active = {0};
        sm.bins = {scalar_bin(0.04, 0.0, 0.01, 0.0), scalar_bin(0.04, 0.02, 0.01, 0.0)};
        const auto eps0 = assemble_step_system(sm, 3.0);
        CHECK(eps0.f[0] == 0.04);
        CHECK(eps0.b[0] == 0.01);
        const auto alpha0 = assemble_step_system(sm, 0.0);
        CHECK(alpha0.f[1] == 0.04);
        CHECK(alpha0.b[1] == 0.01);
    }

    TEST_CASE("two by two closed form") {
        StepSystem s;
        s.d = 2;
        s.active = {0, 1};
        s.f = {2.0, 1.0, 1.0, 3.0};
        s.b = {1.0, 1.0};
        s.counts = {5};
        solve_step(s, LrmConfig{});
        CHECK(s.c[0] == doctest::Approx(0.4).epsilon(1e-14));
        CHECK(s.c[1] == doctest::Approx(0.2).epsilon(1e-14));
        s.b = {0.0, 0.0};
        solve_step(s, LrmConfig{});
        CHECK(s.c[0] == 0.0);
        CHECK(s.c[1] == 0.0);
    }

    TEST_CASE("random positive definite systems have small residuals") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g;
        for (int t = 0; t < 200; ++t) {
            Eigen::Matrix4d m;
            for (int i = 0; i < 16; ++i) {
                m.data()[i] = g(rng);
            }
            const Eigen::Matrix4d f = m * m.transpose() + 0.1 * Eigen::Matrix4d::Identity();
            Eigen::Vector4d b;
            for (int i = 0; i < 4; ++i) {
                b(i) = g(rng);
            }
            const std::vector<double> fv(f.data(), f.data() + 16);
            const std::vector<double> bv(b.data(), b.data() + 4);
            const auto r = solve_symmetric(fv, bv, 1e-12);
            const Eigen::Vector4d x(r.x.data());
            CHECK((f * x - b).norm() <= 1e-10 * b.norm());
            CHECK(r.ridge == 0.0);
        }
    }

    TEST_CASE("integer systems agree with exact rational elimination") {
        std::mt19937_64 rng(8);
        std::uniform_int_distribution<int> u(-5, 5);
        for (std::size_t d : {3u, 4u, 5u}) {
            for (int t = 0; t < 50; ++t) {
                std::vector<long> m(d * d);
                for (auto& v : m) {
                    v = u(rng);
                }
                std::vector<double> f(d * d);
                std::vector<mpq_class> fq(d * d);
                for (std::size_t i = 0; i < d; ++i) {
                    for (std::size_t j = 0; j < d; ++j) {
                        long s = i == j ? 1 : 0;
                        for (std::size_t r = 0; r < d; ++r) {
                            s += m[i * d + r] * m[j * d + r];
                        }
                        f[i * d + j] = static_cast<double>(s);
                        fq[i * d + j] = s;
                    }
                }
                std::vector<double> b(d);
                std::vector<mpq_class> bq(d);
                for (std::size_t i = 0; i < d; ++i) {
                    b[i] = u(rng);
                    bq[i] = static_cast<long>(b[i]);
                }
                const auto exact = rational_solve(fq, bq, d);
                const auto r = solve_symmetric(f, b, 1e-14);
                double scale = 0.0;
                for (const auto& x : exact) {
                    scale = std::max(scale, std::abs(x.get_d()));
                }
                for (std::size_t i = 0; i < d; ++i) {
                    CHECK(std::abs(r.x[i] - exact[i].get_d()) <= 1e-10 * std::max(scale, 1.0));
                }
            }
        }
    }

    TEST_CASE("gradient of the quadratic objective matches finite differences") {
        const std::vector<double> f{2.0, 0.3, -0.2, 0.3, 1.5, 0.1, -0.2, 0.1, 1.0};
        const std::vector<double> b{0.4, -0.7, 0.2};
        const std::vector<double> c{0.3, 0.1, -0.5};
        auto q = [&](std::vector<double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 3; ++j) {
                    s += x[i] * f[i * 3 + j] * x[j];
                }
                s -= 2.0 * b[i] * x[i];
            }
            return s;
        };
        for (std::size_t i = 0; i < 3; ++i) {
            double g = -2.0 * b[i];
            for (std::size_t j = 0; j < 3; ++j) {
                g += 2.0 * f[i * 3 + j] * c[j];
            }
            auto up = c;
            auto dn = c;
            up[i] += 1e-5;
            dn[i] -= 1e-5;
            CHECK((q(up) - q(dn)) / 2e-5 == doctest::Approx(g).epsilon(1e-6));
        }
    }

    TEST_CASE("classical step equals per-bin least squares") {
        const OneStep m(6000);
        const std::vector<double> x_next(m.n * 2, 0.0);
        LrmConfig cfg;
        cfg.alpha = 0.0;
        cfg.pd_tolerance = 1e-14;
        for (bool with_control : {false, true}) {
            auto part = build_partition(m.state, 1, 3);
            if (with_control) {
                part.control = m.control;
            }
            auto sys = assemble_step_system(0, m.prices, m.payoff, x_next, part, cfg);
            solve_step(sys, cfg);
            const auto oracle = eigen_regression(m, part, with_control);
            REQUIRE(sys.c.size() == oracle.size());
            for (std::size_t i = 0; i < oracle.size(); ++i) {
                CHECK(sys.c[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("truncated curve out of reach reproduces the linear solution") {
        const std::vector<double> w{0.5, -0.5};
        const std::vector<double> ds{1.0, -1.0};
        const std::vector<double> es{0.5, 0.5};
        const std::vector<double> xn{2.0, 0.0};
        const TruncatedInputs in{w, ds, es, xn, 1e9, 1.0};
        const auto sol = solve_truncated_1d(in, FixedPointSettings{});
        CHECK(sol.converged);
        CHECK(sol.iterations == 1);
        CHECK(sol.c == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }

    TEST_CASE("truncated fixed point satisfies the first-order condition") {
        const std::vector<double> w{0.5, -0.5};
        const std::vector<double> ds{1.0, -1.0};
        const std::vector<double> es{0.5, 0.5};
        const std::vector<double> xn{2.0, 0.0};
        const TruncatedInputs in{w, ds, es, xn, 0.3, 1.0};
        const auto sol = solve_truncated_1d(in, FixedPointSettings{});
        CHECK(sol.converged);
        CHECK(sol.residual < 1e-10);
        const double h = 1e-6;
        const double deriv = (truncated_objective(in, sol.c + h) - truncated_objective(in, sol.c - h)) / (2 * h);
        CHECK(std::abs(deriv) < 1e-8);
    }

    TEST_CASE("nested and pathwise book values share holdings and initial value") {
        const PresetMarket m({"F1", "F2"}, 3000);
        const auto nested = backward_induction(m.prices, m.payoff, m.builder, m.solver(1.0, BookValue::Nested));
        const auto pathwise = backward_induction(m.prices, m.payoff, m.builder, m.solver(1.0, BookValue::Pathwise));
        CHECK(nested.x_values == pathwise.x_values);
        // Equal in exact arithmetic; rounding accumulates over the steps.
        CHECK(std::abs(nested.v(0, 0) - pathwise.v(0, 0)) <= 1e-10);
        const std::size_t T = nested.n_steps;
        for (std::size_t p = 0; p < nested.n_paths; ++p) {
            CHECK(nested.v(p, T) == m.payoff[p]);
            CHECK(nested.x(p, T, 0) == 0.0);
            CHECK(nested.x(p, T, 1) == 0.0);
        }
    }

    TEST_CASE("zero alpha equals the frictionless market bitwise") {
        PresetMarket m({"F2"}, 2000);
        const auto a0 = backward_induction(m.prices, m.payoff, m.builder, m.solver(0.0, BookValue::Nested));
        auto frictionless = m.prices;
        LiquidityStructure zero = frictionless.assets()[0].liquidity;
        zero.kind = LiquidityKind::Zero;
        frictionless.set_liquidity({zero});
        const auto e0 = backward_induction(frictionless, m.payoff, m.builder, m.solver(1.0, BookValue::Nested));
        CHECK(a0.x_values == e0.x_values);
        CHECK(a0.v_values == e0.v_values);
    }

    TEST_CASE("matured assets are never held") {
        const PresetMarket m({"F1", "F2"}, 2000);
        const auto s = backward_induction(m.prices, m.payoff, m.builder, m.solver(1.0, BookValue::Nested));
        const std::size_t mat = m.prices.maturity_index(0);
        for (std::size_t k = mat; k <= s.n_steps; ++k) {
            for (std::size_t p = 0; p < s.n_paths; ++p) {
                CHECK(s.x(p, k, 0) == 0.0);
            }
        }
    }

    TEST_CASE("invalid solver settings are rejected") {
        LrmConfig c;
        c.alpha = -1.0;
        CHECK_THROWS_AS(c.validate(), ParameterError);
        CHECK_THROWS_AS(solve_symmetric(std::vector<double>{1.0, NAN, NAN, 1.0}, std::vector<double>{1.0, 1.0}, 1e-10),
                        ParameterError);
    }
}
