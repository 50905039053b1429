#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lrm {

/// Assignment of paths to indicator basis functions.
///
/// Dimensions are split in nested fashion: dimension 0 into at most B
/// equal-count slabs, each slab's paths along dimension 1 into at most B
/// sub-bins, and so on. Paths with equal coordinates always share a bin, so a
/// point mass in the state never straddles an edge. The bin id is
/// sum_d sub_d * B^(dim-1-d), in [0, B^dim).
struct BinPartition {
    std::size_t state_dim = 0;
    std::size_t bins_per_dim = 1;
    std::size_t n_bins = 1;
    std::vector<std::uint32_t> assignment;
    /// Breakpoints of every split in creation order: the dimension-0 split
    /// first, then one entry per dimension-0 slab for dimension 1, etc. Each
    /// holds B+1 nondecreasing values; unused trailing bins repeat the maximum.
    std::vector<std::vector<double>> edges;
    /// Paths grouped by bin (stable in path order) and per-bin offsets into it.
    std::vector<std::uint32_t> order;
    std::vector<std::size_t> offsets;
    std::vector<std::string> warnings;
    /// Optional per-path covariate; when set, conditional covariances are
    /// taken after an affine fit on it within each bin.
    std::vector<double> control;

    std::size_t n_paths() const { return assignment.size(); }
    std::size_t count(std::size_t bin) const { return offsets[bin + 1] - offsets[bin]; }
    std::span<const std::uint32_t> members(std::size_t bin) const {
        return {order.data() + offsets[bin], count(bin)};
    }
    std::size_t occupied_bins() const;
};

/// `states` is path-major with `state_dim` values per path. Bins are closed
/// greedily in sorted order once they hold their share of the remaining paths
/// and at least `min_bin_count` paths, never splitting ties.
BinPartition build_partition(std::span<const double> states, std::size_t state_dim,
                             std::size_t bins_per_dim, std::size_t min_bin_count = 1);

/// All paths in one bin.
BinPartition single_bin_partition(std::size_t n_paths);

/// Partition from precomputed labels in [0, n_bins); used for exact
/// conditioning on finite trees.
BinPartition partition_from_labels(std::vector<std::uint32_t> labels, std::size_t n_bins);

/// Per-bin sample mean; empty bins receive the global mean.
std::vector<double> bin_mean(const BinPartition& part, std::span<const double> target,
                             std::size_t threads = 1);

/// Per-bin sample covariance mean(u w) - mean(u) mean(w), computed with
/// centered two-pass sums. Empty bins receive 0.
std::vector<double> bin_cov(const BinPartition& part, std::span<const double> u,
                            std::span<const double> w, std::size_t threads = 1);

std::vector<double> broadcast(const BinPartition& part, std::span<const double> per_bin);

std::vector<double> conditional_mean(const BinPartition& part, std::span<const double> target,
                                     std::size_t threads = 1);
/// conditional_mean plus, when `part.control` is set, the in-bin least-squares
/// affine term in the control; bins where the control is constant get the mean.
std::vector<double> fitted_conditional_mean(const BinPartition& part, std::span<const double> target,
                                            std::size_t threads = 1);
std::vector<double> conditional_cov(const BinPartition& part, std::span<const double> u,
                                    std::span<const double> w, std::size_t threads = 1);
/// conditional_cov(u, u) floored at 0.
std::vector<double> conditional_var(const BinPartition& part, std::span<const double> u,
                                    std::size_t threads = 1);

}  // namespace lrm
