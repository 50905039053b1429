#include "lrm/model_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lrm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Tracks the worst value of one condition across (k, bin).
struct Tracker {
    ConditionCheck check;
    bool upper;  // true: worst is the max

    Tracker(std::string name, double threshold, bool is_upper, std::size_t n_steps) : upper(is_upper) {
        check.name = std::move(name);
        check.threshold = threshold;
        check.worst = is_upper ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
        check.per_step.assign(n_steps, kNaN);
    }

    void add(std::size_t step_pos, std::size_t k, std::size_t bin, double value) {
        ++check.evaluated;
        double& ps = check.per_step[step_pos];
        if (std::isnan(ps) || (upper ? value > ps : value < ps)) {
            ps = value;
        }
        if (upper ? value > check.worst : value < check.worst) {
            check.worst = value;
            check.worst_k = k;
            check.worst_bin = bin;
        }
    }

    ConditionCheck finish() {
        if (check.evaluated == 0) {
            check.worst = kNaN;
            check.pass = true;
            check.note = "no evaluable bins";
        } else {
            check.pass = upper ? check.worst <= check.threshold : check.worst >= check.threshold;
        }
        return check;
    }
};

std::size_t max_step(std::span<const StepMoments> moments) {
    return moments.size();
}

std::vector<double> submatrix(const std::vector<double>& m, std::size_t d,
                              const std::vector<std::size_t>& idx) {
    std::vector<double> s(idx.size() * idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t c = 0; c < idx.size(); ++c) {
            s[a * idx.size() + c] = m[idx[a] * d + idx[c]];
        }
    }
    return s;
}

}  // namespace

bool ConditionReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const ConditionCheck& ConditionReport::get(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return c;
        }
    }
    throw std::out_of_range("no condition named " + name);
}

std::vector<ConditionCheck> check_mean_variance_tradeoff(std::span<const StepMoments> moments,
                                                         double bound, double lower_bound) {
    const std::size_t ns = max_step(moments);
    Tracker ratio("mean_variance_tradeoff", bound, true, ns);
    Tracker above("modified_tradeoff_above", bound, true, ns);
    Tracker below("modified_tradeoff_below", lower_bound, false, ns);
    for (std::size_t s = 0; s < ns; ++s) {
        const auto& sm = moments[s];
        const std::size_t d = sm.active.size();
        for (std::size_t bin = 0; bin < sm.bins.size(); ++bin) {
            const auto& m = sm.bins[bin];
            if (m.count == 0) {
                continue;
            }
            for (std::size_t a = 0; a < d; ++a) {
                const double var_ds = m.cov_ds[a * d + a];
                if (var_ds > 0.0) {
                    ratio.add(s, sm.k, bin, m.mean_ds[a] * m.mean_ds[a] / var_ds);
                } else {
                    ++ratio.check.degenerate;
                }
                if (m.var_s_next[a] > 0.0) {
                    const double r = m.mean_s_next[a] * m.mean_s_next[a] / m.var_s_next[a];
                    above.add(s, sm.k, bin, r);
                    below.add(s, sm.k, bin, r);
                } else {
                    ++above.check.degenerate;
                    ++below.check.degenerate;
                }
            }
        }
    }
    return {ratio.finish(), above.finish(), below.finish()};
}

std::vector<ConditionCheck> check_f_diagonal(std::span<const StepMoments> moments, double c_lower,
                                             double c_tilde) {
    const std::size_t ns = max_step(moments);
    Tracker first("f_diagonal_1", c_lower, false, ns);
    Tracker second("f_diagonal_2", c_tilde, false, ns);
    for (std::size_t s = 0; s < ns; ++s) {
        const auto& sm = moments[s];
        const std::size_t d = sm.active.size();
        for (std::size_t bin = 0; bin < sm.bins.size(); ++bin) {
            const auto& m = sm.bins[bin];
            if (m.count == 0) {
                continue;
            }
            for (std::size_t a = 0; a < d; ++a) {
                const double var_ds = m.cov_ds[a * d + a];
                const double var_s = m.var_s_next[a];
                const double mean_s = m.mean_s_next[a];
                if (!(var_ds > 0.0) || !(var_s > 0.0) || !(mean_s > 0.0)) {
                    ++first.check.degenerate;
                    ++second.check.degenerate;
                    continue;
                }
                first.add(s, sm.k, bin, std::sqrt(var_ds) + mean_s / std::sqrt(var_s));
                second.add(s, sm.k, bin, std::sqrt(var_s) / mean_s + 1.0 / std::sqrt(var_ds));
            }
        }
    }
    return {first.finish(), second.finish()};
}

ConditionCheck check_f_property(std::span<const StepMoments> moments, double alpha, double delta,
                                FPropertyMode mode) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw ParameterError("check_f_property: delta must lie in (0, 1)");
    }
    const std::size_t ns = max_step(moments);
    Tracker t(mode == FPropertyMode::Direct ? "f_property_direct" : "f_property_principal_minors",
              delta, true, ns);
    for (std::size_t s = 0; s < ns; ++s) {
        const auto& sm = moments[s];
        const std::size_t d = sm.active.size();
        if (d < 2) {
            continue;
        }
        for (std::size_t bin = 0; bin < sm.bins.size(); ++bin) {
            const auto& m = sm.bins[bin];
            if (m.count == 0) {
                continue;
            }
            std::vector<double> f = m.cov_ds;
            if (mode == FPropertyMode::Direct) {
                for (std::size_t a = 0; a < d; ++a) {
                    f[a * d + a] += alpha * m.a_eps[a];
                }
            }
            double required = -std::numeric_limits<double>::infinity();
            bool degenerate = false;
            // Direct mode looks at the full matrix only; the sufficient
            // condition looks at every principal submatrix of size >= 2.
            const std::size_t min_size = mode == FPropertyMode::Direct ? d : 2;
            for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << d); ++mask) {
                std::vector<std::size_t> idx;
                for (std::size_t a = 0; a < d; ++a) {
                    if (mask >> a & 1u) {
                        idx.push_back(a);
                    }
                }
                if (idx.size() < min_size) {
                    continue;
                }
                double diag = 1.0;
                for (auto a : idx) {
                    diag *= f[a * d + a];
                }
                if (!(diag > 0.0)) {
                    degenerate = true;
                    break;
                }
                const auto sub = submatrix(f, d, idx);
                required = std::max(required, 1.0 - determinant(sub, idx.size()) / diag);
            }
            if (degenerate) {
                ++t.check.degenerate;
                continue;
            }
            t.add(s, sm.k, bin, required);
        }
    }
    auto out = t.finish();
    if (t.check.evaluated == 0) {
        out.note = "vacuous: no step with two or more active assets";
    } else {
        out.pass = out.worst <= delta && out.worst < 1.0;
    }
    return out;
}

PdResult check_positive_definite(std::span<const double> a, std::size_t d, double tol) {
    if (a.size() != d * d || d == 0) {
        throw ParameterError("check_positive_definite: size mismatch");
    }
    double scale = 0.0;
    for (double v : a) {
        scale = std::max(scale, std::abs(v));
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(a[i * d + j] - a[j * d + i]) > 1e-10 * std::max(scale, 1e-300)) {
                throw ParameterError("check_positive_definite: matrix is not symmetric");
            }
        }
    }
    PdResult r;
    r.pass = true;
    for (std::size_t i = 0; i < d; ++i) {
        if (!(a[i * d + i] > 0.0)) {
            r.pass = false;
        }
    }
    for (std::size_t l = 1; l <= d; ++l) {
        std::vector<double> sub(l * l);
        std::vector<double> scaled(l * l);
        for (std::size_t i = 0; i < l; ++i) {
            for (std::size_t j = 0; j < l; ++j) {
                sub[i * l + j] = a[i * d + j];
                const double n = std::sqrt(a[i * d + i] * a[j * d + j]);
                scaled[i * l + j] = n > 0.0 ? a[i * d + j] / n : 0.0;
            }
        }
        r.minors.push_back(determinant(sub, l));
        r.scaled_minors.push_back(determinant(scaled, l));
        if (!(r.scaled_minors.back() > tol)) {
            r.pass = false;
        }
    }
    return r;
}

ConditionCheck check_positive_definite(std::span<const StepMoments> moments, double tol) {
    const std::size_t ns = max_step(moments);
    Tracker t("positive_definite", tol, false, ns);
    for (std::size_t s = 0; s < ns; ++s) {
        const auto& sm = moments[s];
        const std::size_t d = sm.active.size();
        if (d == 0) {
            continue;
        }
        for (std::size_t bin = 0; bin < sm.bins.size(); ++bin) {
            const auto& m = sm.bins[bin];
            if (m.count == 0) {
                continue;
            }
            const auto r = check_positive_definite(m.cov_ds, d, tol);
            double worst = *std::min_element(r.scaled_minors.begin(), r.scaled_minors.end());
            for (std::size_t a = 0; a < d; ++a) {
                if (!(m.cov_ds[a * d + a] > 0.0)) {
                    worst = 0.0;
                }
            }
            t.add(s, sm.k, bin, worst);
        }
    }
    auto out = t.finish();
    if (out.evaluated > 0) {
        out.pass = out.worst > tol;
    }
    return out;
}

BoundednessReport report_boundedness_terms(std::span<const StepMoments> moments, double alpha) {
    BoundednessReport r;
    for (const auto& sm : moments) {
        const std::size_t d = sm.active.size();
        if (d == 0) {
            continue;
        }
        for (const auto& m : sm.bins) {
            if (m.count == 0) {
                continue;
            }
            std::vector<double> f = m.cov_ds;
            for (std::size_t a = 0; a < d; ++a) {
                f[a * d + a] += alpha * m.a_eps[a];
            }
            if (!(determinant(f, d) != 0.0)) {
                ++r.skipped_singular;
                continue;
            }
            // Columns of the inverse.
            std::vector<double> inv(d * d);
            for (std::size_t c = 0; c < d; ++c) {
                std::vector<double> a = f;
                std::vector<double> e(d, 0.0);
                e[c] = 1.0;
                gauss_solve(a, e, d);
                for (std::size_t q = 0; q < d; ++q) {
                    inv[q * d + c] = e[q];
                }
            }
            ++r.evaluated;
            for (std::size_t i = 0; i < d; ++i) {
                const double f0_ii = m.cov_ds[i * d + i];
                const double feps_ii = alpha * m.a_eps[i];
                for (std::size_t j = 0; j < d; ++j) {
                    const double f0_jj = m.cov_ds[j * d + j];
                    const double g = inv[j * d + i] * inv[j * d + i];
                    r.max_alpha = std::max(r.max_alpha, f0_jj * f0_ii * g);
                    r.max_beta = std::max(r.max_beta, f0_ii * g);
                    r.max_alpha_eps = std::max(r.max_alpha_eps, f0_jj * feps_ii * feps_ii * g);
                    r.max_beta_eps = std::max(r.max_beta_eps, feps_ii * feps_ii * g);
                }
            }
        }
    }
    return r;
}

std::vector<StepMoments> estimate_price_moments(const ExtendedPriceSet& prices,
                                                const PartitionBuilder& builder,
                                                std::size_t threads) {
    const std::size_t n = prices.n_paths();
    const std::vector<double> w(n, 0.0);
    const std::vector<double> x(n * prices.n_assets(), 0.0);
    std::vector<StepMoments> out;
    for (std::size_t k = 0; k < prices.n_steps(); ++k) {
        const auto part = builder(k);
        out.push_back(estimate_step_moments(k, prices, w, x, part, threads));
    }
    return out;
}

StepMoments drop_predictable_assets(const StepMoments& moments, double tolerance) {
    const std::size_t d = moments.active.size();
    std::vector<std::size_t> keep;
    for (std::size_t a = 0; a < d; ++a) {
        bool predictable = true;
        bool occupied = false;
        for (const auto& m : moments.bins) {
            if (m.count == 0) {
                continue;
            }
            occupied = true;
            const double scale = m.var_s_next[a] + m.mean_s_next[a] * m.mean_s_next[a];
            if (m.cov_ds[a * d + a] > tolerance * scale) {
                predictable = false;
                break;
            }
        }
        if (!occupied || !predictable) {
            keep.push_back(a);
        }
    }
    if (keep.size() == d) {
        return moments;
    }
    const auto pick = [&](const std::vector<double>& v) {
        std::vector<double> out;
        for (auto a : keep) {
            out.push_back(v[a]);
        }
        return out;
    };
    StepMoments out;
    out.k = moments.k;
    for (auto a : keep) {
        out.active.push_back(moments.active[a]);
    }
    for (const auto& m : moments.bins) {
        BinMoments r;
        r.count = m.count;
        if (m.count > 0 || !m.mean_ds.empty()) {
            r.mean_ds = pick(m.mean_ds);
            r.mean_s_next = pick(m.mean_s_next);
            r.var_s_next = pick(m.var_s_next);
            r.a_eps = pick(m.a_eps);
            r.b0 = pick(m.b0);
            r.b_eps = pick(m.b_eps);
            r.cov_ds.resize(keep.size() * keep.size());
            for (std::size_t i = 0; i < keep.size(); ++i) {
                for (std::size_t j = 0; j < keep.size(); ++j) {
                    r.cov_ds[i * keep.size() + j] = m.cov_ds[keep[i] * d + keep[j]];
                }
            }
        }
        out.bins.push_back(std::move(r));
    }
    return out;
}

std::vector<StepMoments> with_model_covariance(std::span<const StepMoments> moments,
                                               const CovarianceModel& model) {
    std::vector<StepMoments> out(moments.begin(), moments.end());
    for (auto& sm : out) {
        const std::size_t d = sm.active.size();
        if (d == 0) {
            continue;
        }
        const auto cov = model(sm.k, sm.active);
        if (cov.size() != d * d) {
            throw ParameterError("with_model_covariance: covariance size mismatch");
        }
        for (auto& m : sm.bins) {
            if (m.count > 0) {
                m.cov_ds = cov;
                // S_k is known at t_k, so Var(S_{k+1}) is the increment variance.
                for (std::size_t a = 0; a < d; ++a) {
                    m.var_s_next[a] = cov[a * d + a];
                }
            }
        }
    }
    return out;
}

ConditionReport run_conditions(std::span<const StepMoments> raw, double alpha,
                               const ConditionThresholds& th) {
    std::vector<StepMoments> moments;
    moments.reserve(raw.size());
    for (const auto& sm : raw) {
        moments.push_back(drop_predictable_assets(sm, th.predictable_tolerance));
    }
    ConditionReport rep;
    for (auto& c : check_mean_variance_tradeoff(moments, th.tradeoff_bound, th.tradeoff_lower)) {
        rep.checks.push_back(std::move(c));
    }
    for (auto& c : check_f_diagonal(moments, th.f_diagonal_c, th.f_diagonal_c_tilde)) {
        rep.checks.push_back(std::move(c));
    }
    const double delta = th.delta.value_or(1.0 - th.pd_tolerance);
    rep.checks.push_back(check_f_property(moments, alpha, delta, FPropertyMode::Direct));
    rep.checks.push_back(check_f_property(moments, alpha, delta, FPropertyMode::PrincipalMinors));
    rep.checks.push_back(check_positive_definite(moments, th.pd_tolerance));
    return rep;
}

}  // namespace lrm
