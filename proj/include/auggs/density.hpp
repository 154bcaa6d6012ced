#pragma once

#include "auggs/gaussian.hpp"
#include "auggs/rasterizer.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace auggs {

/// Maps rows of a resized table to their source rows. -1 means a fresh row whose
/// companion state (optimizer moments) starts at zero.
struct RowRemap {
    std::vector<std::int64_t> source;

    static RowRemap identity(std::size_t n);
    static RowRemap from_keep(std::span<const std::uint8_t> keep);
    std::size_t size() const { return source.size(); }
};

/// Rebuilds `table` according to `remap`, zero-filling fresh rows.
void apply_remap(ParamTable& table, const RowRemap& remap);

struct DensifyStats {
    std::vector<double> grad_accum;
    std::vector<std::uint32_t> count;
    std::vector<double> max_radius;

    explicit DensifyStats(std::size_t n = 0) { reset(n); }
    std::size_t size() const { return grad_accum.size(); }
    void reset(std::size_t n);
    void keep_rows(std::span<const std::uint8_t> keep);
};

struct DensifyConfig {
    bool enabled = true;
    /// Threshold on the mean screen-space positional gradient norm (NDC units).
    double grad_threshold = 2e-4;
    double prune_opacity = 0.005;
    /// Gaussians smaller than this fraction of the scene extent are cloned, larger ones split.
    double split_fraction = 0.01;
    /// Gaussians larger than this fraction of the scene extent are pruned.
    double world_prune_fraction = 0.1;
    double split_factor = 1.6;
    int interval = 100;
    int start = 500;
    /// Densification stops after this fraction of the stage budget.
    double stop_fraction = 0.5;
    int opacity_reset_interval = 3000;
    double opacity_ceiling = 0.01;
};

/// Adds the NDC-scaled norm of dL/dmean2d for each visible Gaussian.
void accumulate_stats(DensifyStats& stats, const GradientBuffer& grads, const RenderOutput& cache);

struct DensifyResult {
    std::size_t cloned = 0;
    std::size_t split = 0;
    std::size_t pruned = 0;
    RowRemap remap;
};

/// Clone / split / prune. Stats are reset to zeros at the new size.
DensifyResult densify_and_prune(GaussianCloud& cloud, DensifyStats& stats, double scene_extent,
                                const DensifyConfig& cfg, std::mt19937_64& rng);

/// Caps every activated opacity at `ceiling`.
void reset_opacity(GaussianCloud& cloud, double ceiling);

} // namespace auggs
