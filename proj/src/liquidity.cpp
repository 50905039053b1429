#include "lrm/liquidity.hpp"

#include <cmath>

#include "lrm/levy_driver.hpp"

namespace lrm {

void LiquidityStructure::validate() const {
    if (!(t1f > 0.0) || !(t2f > t1f)) {
        throw ParameterError("liquidity: need 0 < t1f < t2f");
    }
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
        throw ParameterError("liquidity: scale must be nonnegative");
    }
    if (kind == LiquidityKind::Zero) {
        return;
    }
    if (!(m > 0.0) || !(n > 0.0)) {
        throw ParameterError("liquidity: levels m and n must be positive");
    }
    if (kind == LiquidityKind::TimeVarying && !(delta > 0.0)) {
        throw ParameterError("liquidity: time-varying structure needs delta > 0");
    }
}

double epsilon_at(const LiquidityStructure& s, double t) {
    constexpr double slack = 1e-12;
    if (t < -slack || t > s.t2f * (1.0 + slack) + slack) {
        throw ParameterError("epsilon_at: time outside [0, t2f]");
    }
    switch (s.kind) {
        case LiquidityKind::Zero:
            return 0.0;
        case LiquidityKind::Constant:
            return s.scale * (t <= s.t1f ? s.m : s.n);
        case LiquidityKind::TimeVarying: {
            if (t > s.t1f) {
                return s.scale * s.n;
            }
            const double a = s.m / -std::expm1(-s.t1f);
            return s.scale * (a * -std::expm1(-(s.t1f - t)) + s.delta);
        }
    }
    throw ParameterError("liquidity: unknown kind");
}

double epsilon_extended(const LiquidityStructure& s, double t) {
    return epsilon_at(s, t < s.t2f ? t : s.t2f);
}

double price_per_share(const SupplyCurve& curve, double x) {
    const double s = curve.marginal_price;
    const double eps = curve.epsilon;
    if (curve.floor_fraction && x < -*curve.floor_fraction) {
        return s * (1.0 - *curve.floor_fraction * eps);
    }
    return s * (1.0 + x * eps);
}

double transaction_liquidity_cost(const SupplyCurve& curve, double x) {
    const double s = curve.marginal_price;
    const double eps = curve.epsilon;
    if (curve.floor_fraction && x < -*curve.floor_fraction) {
        return -*curve.floor_fraction * eps * s * x;
    }
    return eps * s * x * x;
}

std::string to_string(LiquidityKind kind) {
    switch (kind) {
        case LiquidityKind::TimeVarying:
            return "time_varying";
        case LiquidityKind::Constant:
            return "constant";
        case LiquidityKind::Zero:
            return "zero";
    }
    return "unknown";
}

}  // namespace lrm
