#include "lrm/lrm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lrm/parallel.hpp"

namespace lrm {

void LrmConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ParameterError("solver: alpha must be nonnegative");
    }
    if (!(pd_tolerance > 0.0)) {
        throw ParameterError("solver: pd_tolerance must be positive");
    }
    if (!(predictable_tolerance >= 0.0)) {
        throw ParameterError("solver: predictable_tolerance must be nonnegative");
    }
    if (fixed_point.max_iters == 0 || !(fixed_point.tolerance > 0.0)) {
        throw ParameterError("solver: fixed point needs max_iters >= 1 and tolerance > 0");
    }
}

namespace {

// Replaces the covariances by those of the residuals after an affine fit on z.
void partial_out_control(std::size_t k, const ExtendedPriceSet& prices,
                         std::span<const double> w_next, std::span<const double> z,
                         std::span<const std::uint32_t> mem, const std::vector<std::size_t>& active,
                         BinMoments& m) {
    const std::size_t d = active.size();
    const double cnt = static_cast<double>(mem.size());
    double mz = 0.0;
    double mw = 0.0;
    for (auto p : mem) {
        mz += z[p];
        mw += w_next[p];
    }
    mz /= cnt;
    mw /= cnt;
    double vz = 0.0;
    double cwz = 0.0;
    std::vector<double> csz(d, 0.0);
    for (auto p : mem) {
        const double dz = z[p] - mz;
        vz += dz * dz;
        cwz += (w_next[p] - mw) * dz;
        for (std::size_t a = 0; a < d; ++a) {
            const std::size_t j = active[a];
            const double ds = prices.price(p, k + 1, j) - prices.price(p, k, j) - m.mean_ds[a];
            csz[a] += ds * dz;
        }
    }
    if (!(vz > 0.0)) {
        return;
    }
    for (std::size_t a = 0; a < d; ++a) {
        m.b0[a] -= cwz * csz[a] / (vz * cnt);
        for (std::size_t c = 0; c < d; ++c) {
            m.cov_ds[a * d + c] -= csz[a] * csz[c] / (vz * cnt);
        }
    }
}

}  // namespace

StepMoments estimate_step_moments(std::size_t k, const ExtendedPriceSet& prices,
                                  std::span<const double> w_next, std::span<const double> x_next,
                                  const BinPartition& partition, std::size_t threads) {
    const std::size_t n = prices.n_paths();
    const std::size_t n_a = prices.n_assets();
    if (k + 1 >= prices.n_points()) {
        throw ParameterError("estimate_step_moments: step beyond the grid");
    }
    if (w_next.size() != n || x_next.size() != n * n_a || partition.n_paths() != n) {
        throw ParameterError("estimate_step_moments: inputs not aligned with prices");
    }
    StepMoments out;
    out.k = k;
    out.active = active_assets(k, prices);
    out.bins.resize(partition.n_bins);
    const std::size_t d = out.active.size();
    std::vector<double> eps(d);
    for (std::size_t a = 0; a < d; ++a) {
        eps[a] = prices.epsilon(k + 1, out.active[a]);
    }

    parallel_for(partition.n_bins, threads, [&](std::size_t b0, std::size_t b1) {
        std::vector<double> ds(d);
        for (std::size_t b = b0; b < b1; ++b) {
            BinMoments& m = out.bins[b];
            const auto mem = partition.members(b);
            m.count = mem.size();
            m.mean_ds.assign(d, 0.0);
            m.cov_ds.assign(d * d, 0.0);
            m.mean_s_next.assign(d, 0.0);
            m.var_s_next.assign(d, 0.0);
            m.a_eps.assign(d, 0.0);
            m.b0.assign(d, 0.0);
            m.b_eps.assign(d, 0.0);
            if (mem.empty()) {
                continue;
            }
            const double cnt = static_cast<double>(mem.size());
            double mean_w = 0.0;
            std::vector<double> mean_sx(d, 0.0);
            for (auto p : mem) {
                mean_w += w_next[p];
                for (std::size_t a = 0; a < d; ++a) {
                    const std::size_t j = out.active[a];
                    const double s1 = prices.price(p, k + 1, j);
                    m.mean_ds[a] += s1 - prices.price(p, k, j);
                    m.mean_s_next[a] += s1;
                    mean_sx[a] += s1 * x_next[p * n_a + j];
                }
            }
            mean_w /= cnt;
            for (std::size_t a = 0; a < d; ++a) {
                m.mean_ds[a] /= cnt;
                m.mean_s_next[a] /= cnt;
                mean_sx[a] /= cnt;
            }
            for (auto p : mem) {
                const double dw = w_next[p] - mean_w;
                for (std::size_t a = 0; a < d; ++a) {
                    const std::size_t j = out.active[a];
                    const double s1 = prices.price(p, k + 1, j);
                    ds[a] = s1 - prices.price(p, k, j) - m.mean_ds[a];
                    const double es = s1 - m.mean_s_next[a];
                    m.var_s_next[a] += es * es;
                    m.b0[a] += dw * ds[a];
                }
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t c = 0; c <= a; ++c) {
                        m.cov_ds[a * d + c] += ds[a] * ds[c];
                    }
                }
            }
            for (std::size_t a = 0; a < d; ++a) {
                m.var_s_next[a] /= cnt;
                m.b0[a] /= cnt;
                for (std::size_t c = 0; c <= a; ++c) {
                    m.cov_ds[a * d + c] /= cnt;
                    m.cov_ds[c * d + a] = m.cov_ds[a * d + c];
                }
                m.a_eps[a] = eps[a] * m.mean_s_next[a];
                m.b_eps[a] = eps[a] * mean_sx[a];
            }
            if (!partition.control.empty()) {
                partial_out_control(k, prices, w_next, partition.control, mem, out.active, m);
            }
        }
    });
    return out;
}

std::size_t suppress_predictable_increments(StepMoments& moments, double tolerance,
                                            std::vector<SolverEvent>* events) {
    const std::size_t d = moments.active.size();
    std::size_t hits = 0;
    for (std::size_t bin = 0; bin < moments.bins.size(); ++bin) {
        BinMoments& m = moments.bins[bin];
        if (m.count == 0) {
            continue;
        }
        for (std::size_t a = 0; a < d; ++a) {
            const double scale = m.var_s_next[a] + m.mean_s_next[a] * m.mean_s_next[a];
            const double var = m.cov_ds[a * d + a];
            if (!(scale > 0.0) || var > tolerance * scale) {
                continue;
            }
            for (std::size_t c = 0; c < d; ++c) {
                m.cov_ds[a * d + c] = 0.0;
                m.cov_ds[c * d + a] = 0.0;
            }
            m.b0[a] = 0.0;
            ++hits;
            if (events) {
                events->push_back({moments.k, bin, "predictable_increment", var / scale});
            }
        }
    }
    return hits;
}

StepSystem assemble_step_system(const StepMoments& moments, double alpha) {
    StepSystem sys;
    sys.k = moments.k;
    sys.active = moments.active;
    const std::size_t d = sys.active.size();
    sys.d = d;
    const std::size_t nb = moments.bins.size();
    sys.f.assign(nb * d * d, 0.0);
    sys.b.assign(nb * d, 0.0);
    sys.c.assign(nb * d, 0.0);
    sys.counts.resize(nb);
    for (std::size_t bin = 0; bin < nb; ++bin) {
        const BinMoments& m = moments.bins[bin];
        sys.counts[bin] = m.count;
        if (m.count == 0) {
            continue;
        }
        double* f = sys.f.data() + bin * d * d;
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t c = 0; c < d; ++c) {
                f[a * d + c] = m.cov_ds[a * d + c];
            }
            f[a * d + a] = std::max(0.0, m.cov_ds[a * d + a]) + alpha * m.a_eps[a];
            sys.b[bin * d + a] = m.b0[a] + alpha * m.b_eps[a];
        }
    }
    return sys;
}

StepSystem assemble_step_system(std::size_t k, const ExtendedPriceSet& prices,
                                std::span<const double> w_next, std::span<const double> x_next,
                                const BinPartition& partition, const LrmConfig& cfg) {
    return assemble_step_system(
        estimate_step_moments(k, prices, w_next, x_next, partition, cfg.threads), cfg.alpha);
}

void solve_step(StepSystem& sys, const LrmConfig& cfg, std::vector<SolverEvent>* events) {
    const std::size_t d = sys.d;
    const std::size_t nb = sys.n_bins();
    sys.c.assign(nb * d, 0.0);
    if (d == 0) {
        return;
    }
    std::vector<SolveResult> results(nb);
    parallel_for(nb, cfg.threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t bin = b0; bin < b1; ++bin) {
            if (sys.counts[bin] == 0) {
                continue;
            }
            results[bin] = solve_symmetric(
                std::span<const double>(sys.f.data() + bin * d * d, d * d),
                std::span<const double>(sys.b.data() + bin * d, d), cfg.pd_tolerance);
        }
    });
    for (std::size_t bin = 0; bin < nb; ++bin) {
        if (sys.counts[bin] == 0) {
            continue;
        }
        const auto& r = results[bin];
        std::copy(r.x.begin(), r.x.end(), sys.c.begin() + static_cast<std::ptrdiff_t>(bin * d));
        if (events) {
            if (r.zero_matrix) {
                events->push_back({sys.k, bin, "zero_matrix", 0.0});
            } else if (r.ridge > 0.0) {
                events->push_back({sys.k, bin, "ridge", r.relative_pivot});
            }
        }
    }
}

PartitionBuilder factor_partition_builder(const PathSet& paths, std::size_t bins_per_dim,
                                          std::size_t min_bin_count) {
    return [&paths, bins_per_dim, min_bin_count](std::size_t k) {
        return build_partition(paths.factor_slice(k), paths.n_factors(), bins_per_dim,
                               min_bin_count);
    };
}

PartitionBuilder price_partition_builder(const ExtendedPriceSet& prices, std::size_t bins_per_dim,
                                         std::size_t min_bin_count) {
    return [&prices, bins_per_dim, min_bin_count](std::size_t k) {
        const auto active = active_assets(k, prices);
        if (active.empty()) {
            return single_bin_partition(prices.n_paths());
        }
        std::vector<double> states(prices.n_paths() * active.size());
        for (std::size_t p = 0; p < prices.n_paths(); ++p) {
            for (std::size_t a = 0; a < active.size(); ++a) {
                states[p * active.size() + a] = prices.price(p, k, active[a]);
            }
        }
        return build_partition(states, active.size(), bins_per_dim, min_bin_count);
    };
}

namespace {

void solve_truncated_bins(const ExtendedPriceSet& prices, std::size_t k, std::size_t j,
                          const BinPartition& part, std::span<const double> w_next,
                          std::span<const double> x_next, const StepMoments& moments,
                          StepSystem& sys, const LrmConfig& cfg, std::vector<SolverEvent>& events) {
    const double z = *prices.assets()[j].floor_fraction;
    const double eps = prices.epsilon(k + 1, j);
    const std::size_t n_a = prices.n_assets();
    std::vector<TruncatedSolution> sol(part.n_bins);
    parallel_for(part.n_bins, cfg.threads, [&](std::size_t b0, std::size_t b1) {
        std::vector<double> w, ds, es, xn;
        for (std::size_t bin = b0; bin < b1; ++bin) {
            const auto mem = part.members(bin);
            if (mem.empty()) {
                continue;
            }
            w.clear();
            ds.clear();
            es.clear();
            xn.clear();
            for (auto p : mem) {
                const double s1 = prices.price(p, k + 1, j);
                w.push_back(w_next[p]);
                ds.push_back(s1 - prices.price(p, k, j));
                es.push_back(eps * s1);
                xn.push_back(x_next[p * n_a + j]);
            }
            if (moments.bins[bin].cov_ds[0] == 0.0) {
                // Flagged predictable: keep only the known mean increment.
                std::fill(ds.begin(), ds.end(), moments.bins[bin].mean_ds[0]);
            }
            sol[bin] = solve_truncated_1d({w, ds, es, xn, z, cfg.alpha}, cfg.fixed_point);
        }
    });
    for (std::size_t bin = 0; bin < part.n_bins; ++bin) {
        if (part.count(bin) == 0) {
            continue;
        }
        sys.c[bin] = sol[bin].c;
        if (!sol[bin].converged) {
            events.push_back({k, bin, "fixed_point_not_converged", sol[bin].residual});
        }
        if (sol[bin].multiple) {
            events.push_back({k, bin, "fixed_point_multiple",
                              static_cast<double>(sol[bin].fixed_points.size())});
        }
    }
}

}  // namespace

StrategySet backward_induction(const ExtendedPriceSet& prices, std::span<const double> payoff,
                               const PartitionBuilder& partition_builder, const LrmConfig& cfg) {
    cfg.validate();
    const std::size_t n = prices.n_paths();
    const std::size_t n_a = prices.n_assets();
    const std::size_t T = prices.n_steps();
    if (payoff.size() != n) {
        throw ParameterError("backward_induction: payoff not aligned with prices");
    }
    double second = 0.0;
    for (double h : payoff) {
        second += h * h;
    }
    if (!std::isfinite(second)) {
        throw ParameterError("backward_induction: payoff has no finite second moment");
    }

    StrategySet out;
    out.n_paths = n;
    out.n_steps = T;
    out.n_assets = n_a;
    out.x_values.assign((T + 1) * n * n_a, 0.0);
    out.v_values.assign((T + 1) * n, 0.0);
    out.y_values.assign((T + 1) * n, 0.0);
    out.bins.resize(T);
    out.n_bins.assign(T, 1);

    // W holds W_{k+1} on entry to step k; v_next holds V_{k+1}.
    std::vector<double> w(payoff.begin(), payoff.end());
    std::vector<double> v_next(payoff.begin(), payoff.end());
    std::copy(payoff.begin(), payoff.end(), out.v_values.begin() + static_cast<std::ptrdiff_t>(T * n));
    std::copy(payoff.begin(), payoff.end(), out.y_values.begin() + static_cast<std::ptrdiff_t>(T * n));

    for (std::size_t k = T; k-- > 0;) {
        try {
            BinPartition part = partition_builder(k);
            if (part.n_paths() != n) {
                throw ParameterError("partition does not cover all paths");
            }
            const auto x_next = out.holdings(k + 1);
            StepMoments moments = estimate_step_moments(k, prices, w, x_next, part, cfg.threads);
            if (cfg.record_moments) {
                out.moments.push_back(moments);
            }
            suppress_predictable_increments(moments, cfg.predictable_tolerance, &out.events);
            StepSystem sys = assemble_step_system(moments, cfg.alpha);
            solve_step(sys, cfg, &out.events);
            const std::size_t d = sys.d;
            if (d == 1 && cfg.alpha > 0.0 && prices.assets()[sys.active[0]].floor_fraction) {
                solve_truncated_bins(prices, k, sys.active[0], part, w, x_next, moments, sys, cfg,
                                     out.events);
            }

            double* x = out.x_values.data() + k * n * n_a;
            for (std::size_t p = 0; p < n; ++p) {
                const std::size_t bin = part.assignment[p];
                double gain = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    const std::size_t j = sys.active[a];
                    const double c = sys.c[bin * d + a];
                    x[p * n_a + j] = c;
                    gain += c * (prices.price(p, k + 1, j) - prices.price(p, k, j));
                }
                w[p] -= gain;
                v_next[p] -= gain;
            }
            const auto v = fitted_conditional_mean(
                part, cfg.book_value == BookValue::Nested ? v_next : w, cfg.threads);
            for (std::size_t p = 0; p < n; ++p) {
                double pos = 0.0;
                for (std::size_t j = 0; j < n_a; ++j) {
                    pos += x[p * n_a + j] * prices.price(p, k, j);
                }
                out.v_values[k * n + p] = v[p];
                v_next[p] = v[p];
                out.y_values[k * n + p] = v[p] - pos;
            }
            out.n_bins[k] = part.n_bins;
            out.bins[k] = std::move(part.assignment);
        } catch (const ParameterError& e) {
            throw ParameterError("step " + std::to_string(k) + ": " + e.what());
        }
    }
    std::reverse(out.moments.begin(), out.moments.end());
    return out;
}

double truncated_map(const TruncatedInputs& in, double c) {
    const std::size_t n = in.ds.size();
    const double cnt = static_cast<double>(n);
    double mw = 0.0;
    double ms = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mw += in.w_next[i];
        ms += in.ds[i];
    }
    mw /= cnt;
    ms /= cnt;
    double cov = 0.0;
    double var = 0.0;
    double num = 0.0;
    double den = 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (in.w_next[i] - mw) * (in.ds[i] - ms);
        var += (in.ds[i] - ms) * (in.ds[i] - ms);
        if (in.x_next[i] - c >= -in.floor_fraction) {
            num += in.eps_s[i] * in.x_next[i];
            den += in.eps_s[i];
        } else {
            q += in.floor_fraction * in.eps_s[i];
        }
    }
    const double denom = (var + in.alpha * den) / cnt;
    if (!(denom > 0.0)) {
        return 0.0;
    }
    return ((cov + in.alpha * num) / cnt - in.alpha * q / (2.0 * cnt)) / denom;
}

double truncated_objective(const TruncatedInputs& in, double c) {
    const std::size_t n = in.ds.size();
    const double cnt = static_cast<double>(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += in.w_next[i] - c * in.ds[i];
    }
    mean /= cnt;
    double var = 0.0;
    double liq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = in.w_next[i] - c * in.ds[i] - mean;
        var += r * r;
        const double trade = in.x_next[i] - c;
        liq += trade >= -in.floor_fraction ? in.eps_s[i] * trade * trade
                                           : -in.floor_fraction * in.eps_s[i] * trade;
    }
    return var / cnt + in.alpha * liq / cnt;
}

TruncatedSolution solve_truncated_1d(const TruncatedInputs& in, const FixedPointSettings& settings) {
    const std::size_t n = in.ds.size();
    if (n == 0 || in.w_next.size() != n || in.eps_s.size() != n || in.x_next.size() != n) {
        throw ParameterError("solve_truncated_1d: inputs must be nonempty and aligned");
    }
    if (!(in.floor_fraction > 0.0)) {
        throw ParameterError("solve_truncated_1d: floor fraction must be positive");
    }
    // Linear-curve solution: the map with every indicator on the quadratic branch.
    TruncatedInputs linear = in;
    linear.floor_fraction = std::numeric_limits<double>::infinity();
    const double c_lin = truncated_map(linear, 0.0);

    auto iterate = [&](double start, std::size_t& iters, bool& converged) {
        double c = start;
        converged = false;
        for (iters = 1; iters <= settings.max_iters; ++iters) {
            const double next = truncated_map(in, c);
            const double step = std::abs(next - c);
            c = next;
            if (step < settings.tolerance * std::max(1.0, std::abs(c))) {
                converged = true;
                break;
            }
        }
        return c;
    };

    double lo = c_lin;
    double hi = c_lin;
    for (double x : in.x_next) {
        lo = std::min(lo, x);
        hi = std::max(hi, x + in.floor_fraction);
    }
    const double starts[] = {c_lin, lo, hi, 0.5 * (lo + hi)};

    TruncatedSolution best;
    bool have = false;
    double best_obj = 0.0;
    for (double s : starts) {
        std::size_t iters = 0;
        bool conv = false;
        const double c = iterate(s, iters, conv);
        if (!conv) {
            if (!have) {
                best.c = c;
                best.iterations = iters;
                best.converged = false;
                best.residual = std::abs(truncated_map(in, c) - c);
            }
            continue;
        }
        bool seen = false;
        for (double f : best.fixed_points) {
            seen = seen || std::abs(f - c) <= settings.tolerance * std::max(1.0, std::abs(c)) * 10.0;
        }
        if (!seen) {
            best.fixed_points.push_back(c);
        }
        const double obj = truncated_objective(in, c);
        if (!have || obj < best_obj) {
            have = true;
            best_obj = obj;
            best.c = c;
            best.iterations = iters;
            best.converged = true;
            best.residual = std::abs(truncated_map(in, c) - c);
        }
    }
    best.multiple = best.fixed_points.size() > 1;
    return best;
}

}  // namespace lrm
