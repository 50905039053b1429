#include "lrm/risk_metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace lrm {

Estimate estimate(std::span<const double> s) {
    Estimate e;
    if (s.empty()) {
        return e;
    }
    const double n = static_cast<double>(s.size());
    for (double v : s) {
        e.mean += v;
    }
    e.mean /= n;
    if (s.size() > 1) {
        double ss = 0.0;
        for (double v : s) {
            ss += (v - e.mean) * (v - e.mean);
        }
        e.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return e;
}

double sample_kurtosis(std::span<const double> s) {
    if (s.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double n = static_cast<double>(s.size());
    double mean = 0.0;
    for (double v : s) {
        mean += v;
    }
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : s) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return m4 / (m2 * m2);
}

Estimate paired_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ParameterError("paired_difference: sample sizes differ");
    }
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - b[i];
    }
    return estimate(d);
}

namespace {

void check_aligned(const StrategySet& s, const ExtendedPriceSet& prices) {
    if (s.n_paths != prices.n_paths() || s.n_steps != prices.n_steps() ||
        s.n_assets != prices.n_assets()) {
        throw ParameterError("strategy and prices are not aligned");
    }
}

}  // namespace

double liquidity_increment(const StrategySet& s, const ExtendedPriceSet& prices, std::size_t p,
                           std::size_t m) {
    double total = 0.0;
    for (std::size_t j = 0; j < s.n_assets; ++j) {
        const double trade = s.x(p, m, j) - s.x(p, m - 1, j);
        if (trade == 0.0) {
            continue;
        }
        SupplyCurve curve{prices.price(p, m, j), prices.epsilon(m, j),
                          prices.assets()[j].floor_fraction};
        total += transaction_liquidity_cost(curve, trade);
    }
    return total;
}

std::vector<double> cost_process(const StrategySet& s, const ExtendedPriceSet& prices,
                                 CostMode mode) {
    check_aligned(s, prices);
    const std::size_t n = s.n_paths;
    const std::size_t T = s.n_steps;
    std::vector<double> c((T + 1) * n);
    for (std::size_t p = 0; p < n; ++p) {
        double gains = 0.0;
        double liq = 0.0;
        c[p] = s.v(p, 0);
        for (std::size_t k = 1; k <= T; ++k) {
            for (std::size_t j = 0; j < s.n_assets; ++j) {
                gains += s.x(p, k - 1, j) * (prices.price(p, k, j) - prices.price(p, k - 1, j));
            }
            if (mode == CostMode::Illiquid) {
                liq += liquidity_increment(s, prices, p, k);
            }
            c[k * n + p] = s.v(p, k) - gains + liq;
        }
    }
    return c;
}

CriteriaReport evaluate_criteria(const StrategySet& s, const ExtendedPriceSet& prices,
                                 std::span<const double> payoff, double alpha) {
    check_aligned(s, prices);
    const std::size_t n = s.n_paths;
    const std::size_t T = s.n_steps;
    if (payoff.size() != n) {
        throw ParameterError("evaluate_criteria: payoff not aligned");
    }
    CriteriaReport r;
    auto& smp = r.samples;
    smp.quadratic.resize(n);
    smp.liquidity.resize(n);
    smp.initial.resize(n);
    smp.linear.resize(n);
    smp.variability.resize(n);
    std::vector<std::vector<double>> var_asset(s.n_assets, std::vector<double>(n));
    r.v0 = s.v(0, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (std::abs(s.v(p, T) - payoff[p]) > 1e-12 * std::max(1.0, std::abs(payoff[p]))) {
            throw ParameterError("evaluate_criteria: terminal book value differs from payoff");
        }
        double gains = 0.0;
        double liq = 0.0;
        double tv = 0.0;
        for (std::size_t k = 1; k <= T; ++k) {
            for (std::size_t j = 0; j < s.n_assets; ++j) {
                gains += s.x(p, k - 1, j) * (prices.price(p, k, j) - prices.price(p, k - 1, j));
                const double dx = std::abs(s.x(p, k, j) - s.x(p, k - 1, j));
                tv += dx;
                var_asset[j][p] += dx;
            }
            liq += liquidity_increment(s, prices, p, k);
        }
        const double c_t = payoff[p] - gains;
        const double c_0 = s.v(p, 0);
        smp.quadratic[p] = (c_t - c_0) * (c_t - c_0);
        smp.liquidity[p] = liq;
        smp.initial[p] = c_t;
        smp.linear[p] = std::abs(c_t + liq - c_0);
        smp.variability[p] = tv;
    }
    r.t0_tilde = estimate(smp.quadratic);
    r.l0 = estimate(smp.liquidity);
    r.c0 = estimate(smp.initial);
    r.l0_bar = estimate(smp.linear);
    r.strategy_variability = estimate(smp.variability);
    for (const auto& v : var_asset) {
        r.variability_per_asset.push_back(estimate(v));
    }
    std::vector<double> comb(n);
    std::vector<double> comb_a(n);
    for (std::size_t p = 0; p < n; ++p) {
        comb[p] = smp.quadratic[p] + smp.liquidity[p];
        comb_a[p] = smp.quadratic[p] + alpha * smp.liquidity[p];
    }
    r.t0 = estimate(comb);
    // Keep the identity t0 = t0_tilde + l0 exact rather than re-summed.
    r.t0.mean = r.t0_tilde.mean + r.l0.mean;
    r.t0_alpha = estimate(comb_a);
    r.t0_alpha.mean = r.t0_tilde.mean + alpha * r.l0.mean;
    return r;
}

std::string format_sci(double value) {
    if (!std::isfinite(value)) {
        return std::isnan(value) ? "NaN" : (value > 0 ? "Inf" : "-Inf");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2E", value);
    std::string s(buf);
    const auto e = s.find('E');
    std::string mant = s.substr(0, e);
    const char sign = s[e + 1];
    std::string digits = s.substr(e + 2);
    const auto nz = digits.find_first_not_of('0');
    digits = nz == std::string::npos ? "0" : digits.substr(nz);
    return mant + "E" + (sign == '-' ? "-" : "") + digits;
}

std::string criteria_csv_header() {
    return "instruments,T0_L,T0_C,T0tilde_L,T0tilde_C,L0_L,L0_C,C0_L,C0_C,"
           "se_T0_L,se_T0_C,se_T0tilde_L,se_T0tilde_C,se_L0_L,se_L0_C,se_C0_L,se_C0_C,"
           "L0bar_L,L0bar_C,TV_L,TV_C";
}

std::string criteria_csv_row(const std::string& instruments, const CriteriaReport& l,
                             const CriteriaReport& c) {
    std::string row = "\"" + instruments + "\"";
    for (double v : {l.t0.mean, c.t0.mean, l.t0_tilde.mean, c.t0_tilde.mean, l.l0.mean, c.l0.mean,
                     l.c0.mean, c.c0.mean, l.t0.se, c.t0.se, l.t0_tilde.se, c.t0_tilde.se, l.l0.se,
                     c.l0.se, l.c0.se, c.c0.se, l.l0_bar.mean, c.l0_bar.mean,
                     l.strategy_variability.mean, c.strategy_variability.mean}) {
        row += "," + format_sci(v);
    }
    return row;
}

}  // namespace lrm
