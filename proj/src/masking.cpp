#include "auggs/masking.hpp"

#include "auggs/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace auggs {

namespace {

/// First `count` entries of a uniform random permutation of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    return idx;
}

std::size_t rounded(double ratio, std::size_t n) {
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

} // namespace

void MaskSchedule::validate() const {
    if (!(point_ratio >= 0.0 && point_ratio < 1.0) || !(patch_ratio >= 0.0 && patch_ratio < 1.0)) {
        throw InvalidParameter("mask ratios must lie in [0, 1)");
    }
    if (point_gap < 1 || patch_gap < 1) {
        throw InvalidParameter("mask gaps must be at least 1");
    }
    if (patch_count < 1 || patch_size < 0) {
        throw InvalidParameter("patch count must be >= 1 and patch size >= 0");
    }
}

std::vector<Vec3> centers_of(const GaussianCloud& cloud) {
    std::vector<Vec3> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out[i] = cloud.center(i);
    }
    return out;
}

MaskResult point_mask(GaussianCloud& cloud, double ratio, std::mt19937_64& rng, std::size_t min_points) {
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw InvalidParameter("point mask ratio must lie in [0, 1)");
    }
    const std::size_t n = cloud.size();
    MaskResult result;
    result.keep.assign(n, 1);
    if (n < min_points) {
        spdlog::info("point mask skipped: {} points below floor {}", n, min_points);
        result.skipped = true;
        return result;
    }
    for (const std::size_t i : sample_without_replacement(n, rounded(ratio, n), rng)) {
        result.keep[i] = 0;
        ++result.removed;
    }
    cloud.keep_rows(result.keep);
    return result;
}

std::vector<std::size_t> fps(std::span<const Vec3> positions, std::size_t count, std::size_t start) {
    const std::size_t n = positions.size();
    if (count < 1 || count > n) {
        throw ContractViolation("fps: requested " + std::to_string(count) + " centers from " + std::to_string(n) +
                                " points");
    }
    if (start >= n) {
        throw ContractViolation("fps: start index out of range");
    }
    std::vector<std::size_t> chosen{start};
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    std::vector<std::uint8_t> taken(n, 0);
    taken[start] = 1;
    std::size_t last = start;
    while (chosen.size() < count) {
        std::size_t best = n;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_d2[i] = std::min(min_d2[i], (positions[i] - positions[last]).squaredNorm());
            if (!taken[i] && min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        taken[best] = 1;
        chosen.push_back(best);
        last = best;
    }
    return chosen;
}

std::vector<std::vector<std::size_t>> knn_patch(std::span<const Vec3> positions, std::span<const std::size_t> centers,
                                                std::size_t k) {
    const std::size_t n = positions.size();
    if (k < 1 || k > n) {
        throw ContractViolation("knn_patch: k = " + std::to_string(k) + " with " + std::to_string(n) + " points");
    }
    std::vector<std::vector<std::size_t>> patches;
    patches.reserve(centers.size());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (const std::size_t c : centers) {
        if (c >= n) {
            throw ContractViolation("knn_patch: center index out of range");
        }
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = {(positions[i] - positions[c]).squaredNorm(), i};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::vector<std::size_t> patch(k);
        for (std::size_t j = 0; j < k; ++j) {
            patch[j] = dist[j].second;
        }
        patches.push_back(std::move(patch));
    }
    return patches;
}

MaskResult patch_mask(GaussianCloud& cloud, const MaskSchedule& schedule, std::mt19937_64& rng) {
    schedule.validate();
    const std::size_t n = cloud.size();
    MaskResult result;
    result.keep.assign(n, 1);
    if (n < schedule.min_points || n == 0) {
        spdlog::info("patch mask skipped: {} points below floor {}", n, schedule.min_points);
        result.skipped = true;
        return result;
    }
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(schedule.patch_count), n);
    const std::size_t k = schedule.patch_size > 0 ? std::min<std::size_t>(static_cast<std::size_t>(schedule.patch_size), n)
                                                  : (n + count - 1) / count;
    const std::vector<Vec3> positions = centers_of(cloud);
    std::uniform_int_distribution<std::size_t> pick_start(0, n - 1);
    const std::size_t start = pick_start(rng);
    const auto centers = fps(positions, count, start);
    const auto patches = knn_patch(positions, centers, k);

    const auto selected = sample_without_replacement(count, rounded(schedule.patch_ratio, count), rng);
    std::size_t applied = 0;
    for (const std::size_t p : selected) {
        std::size_t added = 0;
        for (const std::size_t i : patches[p]) {
            added += result.keep[i] ? 1 : 0;
        }
        if (n - (result.removed + added) < schedule.min_points) {
            spdlog::info("patch mask truncated after {} of {} patches to keep {} points", applied, selected.size(),
                         schedule.min_points);
            break;
        }
        for (const std::size_t i : patches[p]) {
            result.keep[i] = 0;
        }
        result.removed += added;
        ++applied;
    }
    cloud.keep_rows(result.keep);
    return result;
}

} // namespace auggs
