#pragma once

#include "auggs/gaussian.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace auggs {

/// Structure-aware mask parameters for both training stages.
struct MaskSchedule {
    /// Fraction of points removed every `point_gap` coarse iterations.
    double point_ratio = 0.05;
    int point_gap = 500;
    /// Fraction of the `patch_count` patches removed every `patch_gap` fine iterations.
    double patch_ratio = 0.10;
    int patch_gap = 1000;
    int patch_count = 64;
    /// Points per patch; 0 selects ceil(P / patch_count).
    int patch_size = 0;
    std::uint64_t seed = 0;
    /// Masking is skipped below this many points.
    std::size_t min_points = 100;

    void validate() const;
};

struct MaskResult {
    bool skipped = false;
    /// One flag per input row; 0 = removed.
    std::vector<std::uint8_t> keep;
    std::size_t removed = 0;
};

/// Removes round(ratio * P) uniformly chosen points.
MaskResult point_mask(GaussianCloud& cloud, double ratio, std::mt19937_64& rng, std::size_t min_points);

/// Farthest point sampling from `start`; ties go to the lowest index.
std::vector<std::size_t> fps(std::span<const Vec3> positions, std::size_t count, std::size_t start);

/// The k nearest points (center included, ties by lowest index) around each center.
std::vector<std::vector<std::size_t>> knn_patch(std::span<const Vec3> positions, std::span<const std::size_t> centers,
                                                std::size_t k);

/// FPS + kNN patches, then removes the union of round(patch_ratio * C) random patches.
MaskResult patch_mask(GaussianCloud& cloud, const MaskSchedule& schedule, std::mt19937_64& rng);

/// Positions of all Gaussians.
std::vector<Vec3> centers_of(const GaussianCloud& cloud);

} // namespace auggs
