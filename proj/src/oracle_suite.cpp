#include <cmath>
#include <cstring>
#include <sstream>

#include "lrm/experiment.hpp"
#include "toy_oracle.hpp"

namespace lrm {

namespace {

using oracle::ToyMarket;

ExtendedPriceSet toy_prices(const ToyMarket& m, bool zero_liquidity, bool duplicate = false) {
    std::vector<FuturesSpec> assets;
    std::vector<std::size_t> maturity;
    std::vector<std::size_t> source;
    for (std::size_t j = 0; j < m.n_assets(); ++j) {
        const auto& a = m.assets()[j];
        FuturesSpec f;
        f.label = "toy" + std::to_string(j);
        f.t1f = static_cast<double>(a.start);
        f.t2f = static_cast<double>(a.maturity);
        f.liquidity = {zero_liquidity ? LiquidityKind::Zero : LiquidityKind::Constant,
                       a.eps_before, a.eps_after, 0.0, f.t1f, f.t2f, 1.0};
        assets.push_back(f);
        maturity.push_back(a.maturity);
        source.push_back(j);
    }
    if (duplicate) {
        // Second copy of the long-dated asset: perfectly collinear increments.
        assets.push_back(assets.back());
        assets.back().label += "b";
        maturity.push_back(maturity.back());
        source.push_back(source.back());
    }
    std::vector<double> times(ToyMarket::steps + 1);
    for (std::size_t k = 0; k <= ToyMarket::steps; ++k) {
        times[k] = static_cast<double>(k);
    }
    ExtendedPriceSet prices(assets, maturity, times, m.n_paths());
    for (std::size_t p = 0; p < m.n_paths(); ++p) {
        for (std::size_t k = 0; k <= ToyMarket::steps; ++k) {
            for (std::size_t j = 0; j < assets.size(); ++j) {
                prices.price(p, k, j) = m.price(p, k, source[j]);
            }
        }
    }
    return prices;
}

PartitionBuilder toy_builder(const ToyMarket& m) {
    return [n = m.n_paths()](std::size_t k) {
        std::vector<std::uint32_t> labels(n);
        for (std::size_t p = 0; p < n; ++p) {
            labels[p] = ToyMarket::node(p, k);
        }
        return partition_from_labels(std::move(labels), ToyMarket::nodes_at(k));
    };
}

std::vector<double> toy_payoff(const ToyMarket& m) {
    std::vector<double> h(m.n_paths());
    for (std::size_t p = 0; p < m.n_paths(); ++p) {
        h[p] = m.payoff(p);
    }
    return h;
}

OracleCase compare_with_oracle(double alpha) {
    const ToyMarket m;
    const auto prices = toy_prices(m, false);
    LrmConfig cfg;
    cfg.alpha = alpha;
    const auto payoff = toy_payoff(m);
    const auto s = backward_induction(prices, payoff, toy_builder(m), cfg);
    const auto o = oracle::solve_by_enumeration(m, alpha);
    double err = 0.0;
    for (std::size_t p = 0; p < m.n_paths(); ++p) {
        for (std::size_t k = 0; k <= ToyMarket::steps; ++k) {
            const auto nd = ToyMarket::node(p, k);
            for (std::size_t j = 0; j < m.n_assets(); ++j) {
                err = std::max(err, std::abs(s.x(p, k, j) - o.holdings[k][nd * m.n_assets() + j]));
            }
            err = std::max(err, std::abs(s.v(p, k) - o.book_value[k][nd]));
        }
    }
    std::ostringstream name;
    name << "toy_market_alpha_" << alpha;
    return {name.str(), err <= 1e-8, err, "max |engine - enumeration| over holdings and book values"};
}

OracleCase check(const std::string& name, double got, double want, double tol) {
    const double err = std::abs(got - want);
    std::ostringstream d;
    d.precision(17);
    d << "got " << got << ", expected " << want;
    return {name, err <= tol, err, d.str()};
}

}  // namespace

OracleSuiteReport run_oracle_suite() {
    OracleSuiteReport rep;
    for (double a : {0.0, 0.5, 1.0, 2.0}) {
        rep.cases.push_back(compare_with_oracle(a));
    }

    {
        const std::vector<double> f{2.0, 1.0, 1.0, 3.0};
        const std::vector<double> b{1.0, 1.0};
        const auto r = solve_symmetric(f, b, 1e-10);
        rep.cases.push_back(check("solve_2x2_first", r.x[0], 0.4, 1e-15));
        rep.cases.push_back(check("solve_2x2_second", r.x[1], 0.2, 1e-15));
        const auto z = solve_symmetric(f, std::vector<double>{0.0, 0.0}, 1e-10);
        rep.cases.push_back(check("solve_zero_rhs", std::abs(z.x[0]) + std::abs(z.x[1]), 0.0, 0.0));
    }
    {
        SupplyCurve lin{2.0, 0.01, std::nullopt};
        rep.cases.push_back(check("price_per_share_linear", price_per_share(lin, 5.0), 2.1, 1e-15));
        rep.cases.push_back(check("liquidity_cost_linear", transaction_liquidity_cost(lin, 5.0), 0.5, 1e-15));
        SupplyCurve tr{1.0, 0.01, 50.0};
        rep.cases.push_back(check("price_per_share_floor", price_per_share(tr, -60.0), 0.5, 1e-15));
        rep.cases.push_back(check("liquidity_cost_floor", transaction_liquidity_cost(tr, -60.0), 30.0, 1e-12));
    }
    {
        LiquidityStructure tv{LiquidityKind::TimeVarying, 0.005, 0.01, 1e-6, 0.05, 0.1, 1.0};
        rep.cases.push_back(check("epsilon_at_start", epsilon_at(tv, 0.0), 0.005 + 1e-6, 1e-15));
        rep.cases.push_back(check("epsilon_at_delivery_start", epsilon_at(tv, 0.05), 1e-6, 1e-15));
    }
    {
        const ToyMarket m;
        const auto payoff = toy_payoff(m);
        const auto prices = toy_prices(m, true);
        LrmConfig one;
        one.alpha = 1.0;
        LrmConfig zero;
        zero.alpha = 0.0;
        const auto a = backward_induction(prices, payoff, toy_builder(m), one);
        const auto b = backward_induction(prices, payoff, toy_builder(m), zero);
        const bool same = a.x_values.size() == b.x_values.size() &&
                          std::memcmp(a.x_values.data(), b.x_values.data(),
                                      a.x_values.size() * sizeof(double)) == 0 &&
                          std::memcmp(a.v_values.data(), b.v_values.data(),
                                      a.v_values.size() * sizeof(double)) == 0;
        rep.cases.push_back({"zero_liquidity_equals_classical", same, same ? 0.0 : 1.0,
                             "alpha = 1 with eps = 0 against alpha = 0, bitwise"});
    }
    {
        const ToyMarket m;
        const auto prices = toy_prices(m, true, true);
        LrmConfig cfg;
        const auto s = backward_induction(prices, toy_payoff(m), toy_builder(m), cfg);
        std::size_t ridge = 0;
        for (const auto& e : s.events) {
            ridge += e.kind == "ridge";
        }
        bool finite = true;
        for (double x : s.x_values) {
            finite = finite && std::isfinite(x);
        }
        rep.cases.push_back({"singular_system_ridge_reported", ridge > 0 && finite,
                             static_cast<double>(ridge),
                             "duplicate asset: ridge events recorded, holdings finite"});
    }
    {
        const std::vector<double> w{1.0, 2.0, 0.5, 3.0};
        const std::vector<double> ds{0.5, -0.5, 0.2, -0.1};
        const std::vector<double> es{0.3, 0.2, 0.25, 0.4};
        const std::vector<double> xn{1.0, 0.5, 0.8, 1.2};
        TruncatedInputs in{w, ds, es, xn, 1e9, 1.0};
        const auto t = solve_truncated_1d(in, {});
        TruncatedInputs lin = in;
        lin.floor_fraction = std::numeric_limits<double>::infinity();
        rep.cases.push_back(check("truncated_unreachable_equals_linear", t.c, truncated_map(lin, 0.0), 1e-14));
    }
    return rep;
}

}  // namespace lrm
