#include "lrm/conditional_estimation.hpp"

#include <algorithm>
#include <numeric>

#include "lrm/levy_driver.hpp"
#include "lrm/parallel.hpp"

namespace lrm {

namespace {

void group_paths(BinPartition& part) {
    part.offsets.assign(part.n_bins + 1, 0);
    for (auto b : part.assignment) {
        ++part.offsets[b + 1];
    }
    std::partial_sum(part.offsets.begin(), part.offsets.end(), part.offsets.begin());
    part.order.assign(part.assignment.size(), 0);
    std::vector<std::size_t> cursor(part.offsets.begin(), part.offsets.end() - 1);
    for (std::size_t p = 0; p < part.assignment.size(); ++p) {
        part.order[cursor[part.assignment[p]]++] = static_cast<std::uint32_t>(p);
    }
}

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        r *= base;
    }
    return r;
}

struct Splitter {
    std::span<const double> states;
    std::size_t dim;
    std::size_t bins;
    std::size_t min_count;
    BinPartition* part;

    double value(std::uint32_t p, std::size_t d) const { return states[p * dim + d]; }

    void split(std::vector<std::uint32_t>& idx, std::size_t d, std::size_t base) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            return value(a, d) < value(b, d);
        });
        const std::size_t n = idx.size();
        std::vector<double> edge{value(idx.front(), d)};
        std::vector<std::size_t> starts{0};
        std::size_t begin = 0;
        while (begin < n && starts.size() < bins) {
            const std::size_t left = bins - (starts.size() - 1);
            const std::size_t target = std::max(min_count, (n - begin + left - 1) / left);
            std::size_t end = std::min(n, begin + target);
            while (end < n && value(idx[end], d) == value(idx[end - 1], d)) {
                ++end;
            }
            // Leave a closing remainder only if it can stand as a bin of its own.
            if (end >= n || n - end < min_count) {
                break;
            }
            starts.push_back(end);
            edge.push_back(value(idx[end], d));
            begin = end;
        }
        starts.push_back(n);
        while (edge.size() < bins) {
            edge.push_back(value(idx.back(), d));
        }
        edge.push_back(value(idx.back(), d));
        part->edges.push_back(std::move(edge));

        const std::size_t stride = ipow(bins, dim - 1 - d);
        for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
            const std::size_t id = base + s * stride;
            if (d + 1 == dim) {
                for (std::size_t q = starts[s]; q < starts[s + 1]; ++q) {
                    part->assignment[idx[q]] = static_cast<std::uint32_t>(id);
                }
            } else {
                std::vector<std::uint32_t> sub(idx.begin() + starts[s], idx.begin() + starts[s + 1]);
                split(sub, d + 1, id);
            }
        }
    }
};

}  // namespace

std::size_t BinPartition::occupied_bins() const {
    std::size_t n = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        n += count(b) > 0;
    }
    return n;
}

BinPartition build_partition(std::span<const double> states, std::size_t state_dim,
                             std::size_t bins_per_dim, std::size_t min_bin_count) {
    if (state_dim == 0 || bins_per_dim == 0) {
        throw ParameterError("build_partition: need state_dim >= 1 and bins_per_dim >= 1");
    }
    if (states.empty() || states.size() % state_dim != 0) {
        throw ParameterError("build_partition: state array does not match state_dim");
    }
    for (double v : states) {
        if (!std::isfinite(v)) {
            throw ParameterError("build_partition: non-finite state");
        }
    }
    const std::size_t n = states.size() / state_dim;
    BinPartition part;
    part.state_dim = state_dim;
    part.bins_per_dim = bins_per_dim;
    part.n_bins = ipow(bins_per_dim, state_dim);
    part.assignment.assign(n, 0);
    if (n < part.n_bins) {
        part.warnings.push_back("fewer paths than bins");
    } else if (n < 10 * part.n_bins) {
        part.warnings.push_back("fewer than 10 paths per bin on average");
    }
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Splitter s{states, state_dim, bins_per_dim, std::max<std::size_t>(1, min_bin_count), &part};
    s.split(idx, 0, 0);
    group_paths(part);
    return part;
}

BinPartition single_bin_partition(std::size_t n_paths) {
    return partition_from_labels(std::vector<std::uint32_t>(n_paths, 0), 1);
}

BinPartition partition_from_labels(std::vector<std::uint32_t> labels, std::size_t n_bins) {
    if (n_bins == 0) {
        throw ParameterError("partition_from_labels: need at least one bin");
    }
    for (auto l : labels) {
        if (l >= n_bins) {
            throw ParameterError("partition_from_labels: label out of range");
        }
    }
    BinPartition part;
    part.state_dim = 0;
    part.bins_per_dim = n_bins;
    part.n_bins = n_bins;
    part.assignment = std::move(labels);
    group_paths(part);
    return part;
}

std::vector<double> bin_mean(const BinPartition& part, std::span<const double> target,
                             std::size_t threads) {
    if (target.size() != part.n_paths()) {
        throw ParameterError("bin_mean: target not aligned with partition");
    }
    std::vector<double> out(part.n_bins, 0.0);
    std::vector<char> empty(part.n_bins, 0);
    parallel_for(part.n_bins, threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const auto mem = part.members(b);
            if (mem.empty()) {
                empty[b] = 1;
                continue;
            }
            double s = 0.0;
            for (auto p : mem) {
                s += target[p];
            }
            out[b] = s / static_cast<double>(mem.size());
        }
    });
    if (std::find(empty.begin(), empty.end(), 1) != empty.end()) {
        double global = 0.0;
        for (std::size_t b = 0; b < part.n_bins; ++b) {
            global += out[b] * static_cast<double>(part.count(b));
        }
        global /= static_cast<double>(std::max<std::size_t>(1, part.n_paths()));
        for (std::size_t b = 0; b < part.n_bins; ++b) {
            if (empty[b]) {
                out[b] = global;
            }
        }
    }
    return out;
}

std::vector<double> bin_cov(const BinPartition& part, std::span<const double> u,
                            std::span<const double> w, std::size_t threads) {
    if (u.size() != part.n_paths() || w.size() != part.n_paths()) {
        throw ParameterError("bin_cov: inputs not aligned with partition");
    }
    std::vector<double> out(part.n_bins, 0.0);
    parallel_for(part.n_bins, threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const auto mem = part.members(b);
            if (mem.empty()) {
                continue;
            }
            const double n = static_cast<double>(mem.size());
            double mu = 0.0;
            double mw = 0.0;
            for (auto p : mem) {
                mu += u[p];
                mw += w[p];
            }
            mu /= n;
            mw /= n;
            double c = 0.0;
            for (auto p : mem) {
                c += (u[p] - mu) * (w[p] - mw);
            }
            out[b] = c / n;
        }
    });
    return out;
}

std::vector<double> broadcast(const BinPartition& part, std::span<const double> per_bin) {
    if (per_bin.size() != part.n_bins) {
        throw ParameterError("broadcast: one value per bin required");
    }
    std::vector<double> out(part.n_paths());
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = per_bin[part.assignment[p]];
    }
    return out;
}

std::vector<double> conditional_mean(const BinPartition& part, std::span<const double> target,
                                     std::size_t threads) {
    return broadcast(part, bin_mean(part, target, threads));
}

std::vector<double> fitted_conditional_mean(const BinPartition& part, std::span<const double> target,
                                            std::size_t threads) {
    if (part.control.empty()) {
        return conditional_mean(part, target, threads);
    }
    if (part.control.size() != part.n_paths()) {
        throw ParameterError("fitted_conditional_mean: control not aligned with partition");
    }
    const auto mean = bin_mean(part, target, threads);
    const auto zmean = bin_mean(part, part.control, threads);
    const auto czw = bin_cov(part, part.control, target, threads);
    const auto vz = bin_cov(part, part.control, part.control, threads);
    std::vector<double> out(part.n_paths());
    for (std::size_t p = 0; p < out.size(); ++p) {
        const auto b = part.assignment[p];
        const double slope = vz[b] > 0.0 ? czw[b] / vz[b] : 0.0;
        out[p] = mean[b] + slope * (part.control[p] - zmean[b]);
    }
    return out;
}

std::vector<double> conditional_cov(const BinPartition& part, std::span<const double> u,
                                    std::span<const double> w, std::size_t threads) {
    return broadcast(part, bin_cov(part, u, w, threads));
}

std::vector<double> conditional_var(const BinPartition& part, std::span<const double> u,
                                    std::size_t threads) {
    auto v = bin_cov(part, u, u, threads);
    for (double& x : v) {
        x = std::max(0.0, x);
    }
    return broadcast(part, v);
}

}  // namespace lrm
