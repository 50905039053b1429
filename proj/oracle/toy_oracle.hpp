#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Finite three-step market used to check the hedging engine against brute
// force. Deliberately shares no code with the engine.
namespace lrm::oracle {

struct ToyAsset {
    double s0;
    // Increment a*u1 + b*u2 + c + g*S_k, with u1, u2 in {0, 1} equally likely.
    double a;
    double b;
    double c;
    double g;
    std::size_t maturity;  // grid index of t2f
    std::size_t start;     // grid index of t1f
    double eps_before;     // liquidity on [0, t1f]
    double eps_after;      // liquidity on (t1f, t2f]
};

class ToyMarket {
public:
    static constexpr std::size_t steps = 3;
    static constexpr std::size_t outcomes = 4;

    ToyMarket();

    std::size_t n_paths() const { return paths_; }
    std::size_t n_assets() const { return assets_.size(); }
    const std::vector<ToyAsset>& assets() const { return assets_; }
    double price(std::size_t path, std::size_t k, std::size_t j) const {
        return prices_[(path * (steps + 1) + k) * assets_.size() + j];
    }
    double payoff(std::size_t path) const { return payoff_[path]; }
    /// Liquidity at grid index k, held at its last value after maturity.
    double epsilon(std::size_t k, std::size_t j) const;
    /// Index of the node at time k that path passes through, in [0, 4^k).
    static std::uint32_t node(std::size_t path, std::size_t k);
    static std::size_t nodes_at(std::size_t k);

private:
    std::vector<ToyAsset> assets_;
    std::size_t paths_;
    std::vector<double> prices_;
    std::vector<double> payoff_;
};

struct OracleSolution {
    // holdings[k][node * n_assets + j] is X_{k+1}^j at the node; 0 when inactive.
    std::vector<std::vector<double>> holdings;
    std::vector<std::vector<double>> book_value;  // V_k per node, k = 0..steps
};

/// Minimizes, node by node and backwards in time,
///   Var(V_{k+1} - c . dS_{k+1}) + alpha * E[sum_j eps^j S^j_{k+1} (X^j_{k+2} - c_j)^2]
/// over the four children by an extended-precision grid search, shrinking the
/// grid around the best point until its spacing falls below `resolution`.
OracleSolution solve_by_enumeration(const ToyMarket& market, double alpha,
                                    double resolution = 1e-12);

}  // namespace lrm::oracle
