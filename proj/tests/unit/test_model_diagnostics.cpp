#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lrm/model_diagnostics.hpp"

using namespace lrm;

namespace {

BinMoments bin(std::vector<double> mean_ds, std::vector<double> cov, std::vector<double> mean_s,
               std::vector<double> var_s, std::vector<double> a_eps) {
    BinMoments m;
    m.count = 100;
    const std::size_t d = mean_ds.size();
    m.mean_ds = std::move(mean_ds);
    m.cov_ds = std::move(cov);
    m.mean_s_next = std::move(mean_s);
    m.var_s_next = std::move(var_s);
    m.a_eps = std::move(a_eps);
    m.b0.assign(d, 0.0);
    m.b_eps.assign(d, 0.0);
    return m;
}

std::vector<StepMoments> one_step(BinMoments b, std::vector<std::size_t> active) {
    StepMoments s;
    s.k = 0;
    s.active = std::move(active);
    s.bins = {std::move(b)};
    return {s};
}

}  // namespace

TEST_SUITE("model_diagnostics") {
    TEST_CASE("mean-variance tradeoff ratio") {
        const auto zero = one_step(bin({0.0}, {0.5}, {1.0}, {0.5}, {0.0}), {0});
        CHECK(check_mean_variance_tradeoff(zero, 100.0, 0.0)[0].worst == 0.0);
        const auto nine = one_step(bin({1.5}, {0.25}, {1.0}, {0.25}, {0.0}), {0});
        const auto c = check_mean_variance_tradeoff(nine, 100.0, 0.0)[0];
        CHECK(c.name == "mean_variance_tradeoff");
        CHECK(c.worst == doctest::Approx(9.0));
        CHECK(c.pass);
        CHECK_FALSE(check_mean_variance_tradeoff(nine, 8.0, 0.0)[0].pass);
    }

    TEST_CASE("F-diagonal sums") {
        const auto degenerate = one_step(bin({0.0}, {0.0}, {2.0}, {0.0}, {0.0}), {0});
        const auto d = check_f_diagonal(degenerate, 1.0, 1.0);
        CHECK(d[0].degenerate == 1);
        CHECK(d[0].evaluated == 0);
        const auto unit = one_step(bin({0.0}, {1.0}, {2.0}, {1.0}, {0.0}), {0});
        const auto u = check_f_diagonal(unit, 1.0, 1.0);
        CHECK(u[0].worst == doctest::Approx(3.0));
        CHECK(u[1].worst == doctest::Approx(1.5));
        CHECK(u[0].pass);
        CHECK(u[1].pass);
    }

    TEST_CASE("F-property on a hand-computed 2x2") {
        const auto m = one_step(bin({0, 0}, {1.0, 0.5, 0.5, 1.0}, {1, 1}, {1, 1}, {0, 0}), {0, 1});
        for (auto mode : {FPropertyMode::Direct, FPropertyMode::PrincipalMinors}) {
            const auto pass = check_f_property(m, 1.0, 0.3, mode);
            CHECK(pass.worst == doctest::Approx(0.25));
            CHECK(pass.pass);
            CHECK_FALSE(check_f_property(m, 1.0, 0.2, mode).pass);
        }
        CHECK_THROWS_AS(check_f_property(m, 1.0, 1.0, FPropertyMode::Direct), ParameterError);
    }

    TEST_CASE("diagonal F passes for every delta; one asset is vacuous") {
        const auto diag = one_step(bin({0, 0}, {2.0, 0.0, 0.0, 0.5}, {1, 1}, {1, 1}, {0.1, 0.1}), {0, 1});
        CHECK(check_f_property(diag, 1.0, 1e-6, FPropertyMode::Direct).pass);
        CHECK(check_f_property(diag, 1.0, 1e-6, FPropertyMode::PrincipalMinors).pass);
        const auto single = one_step(bin({0}, {1.0}, {1}, {1}, {0}), {0});
        CHECK(check_f_property(single, 1.0, 0.01, FPropertyMode::Direct).pass);
    }

    TEST_CASE("principal minors pass implies direct pass on random instances") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 500; ++t) {
            std::vector<double> m(9);
            for (auto& v : m) {
                v = g(rng);
            }
            std::vector<double> cov(9, 0.0);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    for (int r = 0; r < 3; ++r) {
                        cov[i * 3 + j] += m[i * 3 + r] * m[j * 3 + r];
                    }
                }
            }
            const auto sm = one_step(bin({0, 0, 0}, cov, {1, 1, 1}, {1, 1, 1}, {u(rng), u(rng), u(rng)}), {0, 1, 2});
            const double delta = 0.05 + 0.9 * u(rng);
            if (check_f_property(sm, 1.0, delta, FPropertyMode::PrincipalMinors).pass) {
                CHECK(check_f_property(sm, 1.0, delta, FPropertyMode::Direct).pass);
            }
        }
    }

    TEST_CASE("positive definiteness by leading minors") {
        const std::vector<double> id{1, 0, 0, 1};
        const std::vector<double> ones{1, 1, 1, 1};
        const std::vector<double> two{2, 1, 1, 2};
        CHECK(check_positive_definite(id, 2, 1e-10).pass);
        CHECK_FALSE(check_positive_definite(ones, 2, 1e-10).pass);
        const auto r = check_positive_definite(two, 2, 1e-10);
        CHECK(r.pass);
        CHECK(r.minors[0] == doctest::Approx(2.0));
        CHECK(r.minors[1] == doctest::Approx(3.0));
        const std::vector<double> asym{1, 0.5, 0.4, 1};
        CHECK_THROWS_AS(check_positive_definite(asym, 2, 1e-10), ParameterError);
    }

    TEST_CASE("one-asset boundedness terms are at most one") {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<StepMoments> ms;
        for (int t = 0; t < 100; ++t) {
            auto s = one_step(bin({0}, {u(rng)}, {1}, {1}, {u(rng)}), {0});
            s[0].k = t;
            ms.push_back(s[0]);
        }
        const auto r = report_boundedness_terms(ms, 1.0);
        CHECK(r.evaluated == 100);
        CHECK(r.max_alpha <= 1.0);
        CHECK(r.max_beta_eps <= 1.0);
    }

    TEST_CASE("predictable assets are dropped") {
        auto b = bin({0, 0.1}, {1.0, 0.0, 0.0, 0.0}, {1, 1}, {1, 0}, {0.01, 0.01});
        b.var_s_next = {1.0, 0.0};
        const auto s = one_step(b, {3, 5})[0];
        const auto kept = drop_predictable_assets(s, 1e-10);
        CHECK(kept.active == std::vector<std::size_t>{3});
        CHECK(kept.bins[0].cov_ds == std::vector<double>{1.0});
        CHECK(kept.bins[0].a_eps == std::vector<double>{0.01});
    }

    TEST_CASE("model covariance replaces the sampled one") {
        const auto s = one_step(bin({0, 0}, {1.0, 1.0, 1.0, 1.0}, {1, 1}, {1, 1}, {0, 0}), {0, 1});
        CHECK_FALSE(check_positive_definite(s, 1e-10).pass);
        const auto m = with_model_covariance(s, [](std::size_t, std::span<const std::size_t>) {
            return std::vector<double>{1.0, 0.5, 0.5, 2.0};
        });
        CHECK(m[0].bins[0].cov_ds == std::vector<double>{1.0, 0.5, 0.5, 2.0});
        CHECK(m[0].bins[0].var_s_next == std::vector<double>{1.0, 2.0});
        CHECK(check_positive_definite(m, 1e-10).pass);
    }

    TEST_CASE("condition suite with an unset delta uses the existential form") {
        const auto m = one_step(bin({0, 0}, {1.0, 0.999, 0.999, 1.0}, {1, 1}, {1, 1}, {0, 0}), {0, 1});
        ConditionThresholds th;
        const auto rep = run_conditions(m, 1.0, th);
        CHECK(rep.get("f_property_direct").pass);
        th.delta = 0.01;
        CHECK_FALSE(run_conditions(m, 1.0, th).get("f_property_direct").pass);
    }
}
