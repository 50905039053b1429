#include "toy_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lrm::oracle {

namespace {

using real = __float128;

std::size_t pow4(std::size_t e) {
    std::size_t r = 1;
    while (e-- > 0) {
        r *= 4;
    }
    return r;
}

}  // namespace

ToyMarket::ToyMarket()
    : assets_{{10.0, 1.0, 0.3, -0.6, 0.05, 2, 1, 0.05, 0.08},
              {12.0, 0.4, 1.2, -0.7, -0.03, 3, 2, 0.04, 0.1}},
      paths_(pow4(steps)) {
    const std::size_t d = assets_.size();
    prices_.assign(paths_ * (steps + 1) * d, 0.0);
    payoff_.assign(paths_, 0.0);
    for (std::size_t p = 0; p < paths_; ++p) {
        for (std::size_t j = 0; j < d; ++j) {
            prices_[(p * (steps + 1)) * d + j] = assets_[j].s0;
        }
        for (std::size_t k = 0; k < steps; ++k) {
            const std::size_t o = (p / pow4(steps - k - 1)) % outcomes;
            const double u1 = static_cast<double>(o & 1u);
            const double u2 = static_cast<double>(o >> 1);
            for (std::size_t j = 0; j < d; ++j) {
                const ToyAsset& a = assets_[j];
                const double s = prices_[(p * (steps + 1) + k) * d + j];
                const double next = k + 1 <= a.maturity ? s + a.a * u1 + a.b * u2 + a.c + a.g * s : s;
                prices_[(p * (steps + 1) + k + 1) * d + j] = next;
            }
        }
        const double avg = 0.5 * (price(p, 2, 0) + price(p, 3, 1));
        payoff_[p] = std::max(avg - 10.5, 0.0) + 0.1 * price(p, 1, 1);
    }
}

double ToyMarket::epsilon(std::size_t k, std::size_t j) const {
    const ToyAsset& a = assets_[j];
    return k <= a.start ? a.eps_before : a.eps_after;
}

std::uint32_t ToyMarket::node(std::size_t path, std::size_t k) {
    return static_cast<std::uint32_t>(path / pow4(steps - k));
}

std::size_t ToyMarket::nodes_at(std::size_t k) { return pow4(k); }

OracleSolution solve_by_enumeration(const ToyMarket& m, double alpha, double resolution) {
    const std::size_t d = m.n_assets();
    const std::size_t T = ToyMarket::steps;
    OracleSolution sol;
    sol.holdings.resize(T + 1);
    sol.book_value.resize(T + 1);
    sol.holdings[T].assign(ToyMarket::nodes_at(T) * d, 0.0);
    sol.book_value[T].resize(ToyMarket::nodes_at(T));
    for (std::size_t p = 0; p < m.n_paths(); ++p) {
        sol.book_value[T][ToyMarket::node(p, T)] = m.payoff(p);
    }

    for (std::size_t k = T; k-- > 0;) {
        const std::size_t nodes = ToyMarket::nodes_at(k);
        sol.holdings[k].assign(nodes * d, 0.0);
        sol.book_value[k].assign(nodes, 0.0);
        std::vector<std::size_t> act;
        for (std::size_t j = 0; j < d; ++j) {
            if (k + 1 <= m.assets()[j].maturity) {
                act.push_back(j);
            }
        }
        for (std::size_t nd = 0; nd < nodes; ++nd) {
            // A representative path for each child: the first leaf below it.
            std::array<std::size_t, ToyMarket::outcomes> rep{};
            for (std::size_t o = 0; o < ToyMarket::outcomes; ++o) {
                rep[o] = (nd * ToyMarket::outcomes + o) * pow4(T - k - 1);
            }
            std::array<real, 4> v_next{};
            std::vector<std::array<real, 4>> ds(d), es(d), xn(d);
            for (std::size_t o = 0; o < 4; ++o) {
                const std::size_t child = nd * 4 + o;
                v_next[o] = sol.book_value[k + 1][child];
                for (std::size_t j = 0; j < d; ++j) {
                    const double s1 = m.price(rep[o], k + 1, j);
                    ds[j][o] = static_cast<real>(s1) - static_cast<real>(m.price(rep[o], k, j));
                    es[j][o] = static_cast<real>(m.epsilon(k + 1, j)) * static_cast<real>(s1);
                    xn[j][o] = sol.holdings[k + 1][child * d + j];
                }
            }
            auto objective = [&](const std::vector<real>& c) {
                std::array<real, 4> r{};
                real mean = 0;
                for (std::size_t o = 0; o < 4; ++o) {
                    r[o] = v_next[o];
                    for (std::size_t a = 0; a < act.size(); ++a) {
                        r[o] -= c[a] * ds[act[a]][o];
                    }
                    mean += r[o];
                }
                mean /= 4;
                real var = 0;
                real liq = 0;
                for (std::size_t o = 0; o < 4; ++o) {
                    var += (r[o] - mean) * (r[o] - mean);
                    for (std::size_t a = 0; a < act.size(); ++a) {
                        const real t = xn[act[a]][o] - c[a];
                        liq += es[act[a]][o] * t * t;
                    }
                }
                return var / 4 + static_cast<real>(alpha) * liq / 4;
            };

            const std::size_t n = act.size();
            std::vector<real> center(n, 0);
            real spacing = 8;
            constexpr int half = 2;  // (2 * half + 1)^n grid points per sweep
            const std::size_t side = 2 * half + 1;
            std::size_t total = 1;
            for (std::size_t a = 0; a < n; ++a) {
                total *= side;
            }
            std::vector<real> trial(n);
            while (spacing > static_cast<real>(resolution)) {
                std::vector<real> best = center;
                real best_val = objective(center);
                bool on_edge = false;
                for (std::size_t idx = 0; idx < total; ++idx) {
                    std::size_t rest = idx;
                    bool edge = false;
                    for (std::size_t a = 0; a < n; ++a) {
                        const int off = static_cast<int>(rest % side) - half;
                        rest /= side;
                        edge = edge || off == -half || off == half;
                        trial[a] = center[a] + spacing * off;
                    }
                    const real val = objective(trial);
                    if (val < best_val) {
                        best_val = val;
                        best = trial;
                        on_edge = edge;
                    }
                }
                center = best;
                if (!on_edge) {
                    spacing /= 2;
                }
            }
            real v = 0;
            for (std::size_t o = 0; o < 4; ++o) {
                real r = v_next[o];
                for (std::size_t a = 0; a < n; ++a) {
                    r -= center[a] * ds[act[a]][o];
                }
                v += r;
            }
            sol.book_value[k][nd] = static_cast<double>(v / 4);
            for (std::size_t a = 0; a < n; ++a) {
                sol.holdings[k][nd * d + act[a]] = static_cast<double>(center[a]);
            }
        }
    }
    return sol;
}

}  // namespace lrm::oracle
