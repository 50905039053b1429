#pragma once

#include <optional>
#include <string>

namespace lrm {

enum class LiquidityKind { TimeVarying, Constant, Zero };

/// Deterministic liquidity term structure epsilon(t) of one futures contract.
///
/// TimeVarying: a (1 - exp(-(t1f - t))) + delta on [0, t1f] with
///              a = m / (1 - exp(-t1f)), and n on (t1f, t2f].
/// Constant:    m on [0, t1f], n on (t1f, t2f].
/// Zero:        0 everywhere (frictionless comparison market).
struct LiquidityStructure {
    LiquidityKind kind = LiquidityKind::Zero;
    double m = 0.0;
    double n = 0.0;
    double delta = 0.0;
    double t1f = 0.0;
    double t2f = 0.0;
    /// Multiplies every epsilon value; 1 for the structures above.
    double scale = 1.0;

    void validate() const;
};

/// Throws ParameterError for t outside [0, t2f].
double epsilon_at(const LiquidityStructure& structure, double t);

/// epsilon_at continued past maturity with the delivery-period level, which is
/// what a matured position is liquidated at.
double epsilon_extended(const LiquidityStructure& structure, double t);

/// Linear supply curve S (1 + x eps), optionally floored at S (1 - z eps)
/// for sales larger than z shares.
struct SupplyCurve {
    double marginal_price = 0.0;
    double epsilon = 0.0;
    std::optional<double> floor_fraction;
};

double price_per_share(const SupplyCurve& curve, double x);

/// x (S(x) - S(0)) >= 0, the cash paid in excess of the marginal price.
double transaction_liquidity_cost(const SupplyCurve& curve, double x);

std::string to_string(LiquidityKind kind);

}  // namespace lrm
