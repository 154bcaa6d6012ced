#include "auggs/density.hpp"

#include "auggs/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace auggs {

RowRemap RowRemap::identity(std::size_t n) {
    RowRemap r;
    r.source.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.source[i] = static_cast<std::int64_t>(i);
    }
    return r;
}

RowRemap RowRemap::from_keep(std::span<const std::uint8_t> keep) {
    RowRemap r;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) {
            r.source.push_back(static_cast<std::int64_t>(i));
        }
    }
    return r;
}

void apply_remap(ParamTable& table, const RowRemap& remap) {
    ParamTable out(table.sh_degree(), remap.size());
    for (std::size_t i = 0; i < remap.size(); ++i) {
        const std::int64_t src = remap.source[i];
        if (src < 0) {
            continue;
        }
        if (static_cast<std::size_t>(src) >= table.size()) {
            throw ContractViolation("row remap refers to row " + std::to_string(src) + " of " +
                                    std::to_string(table.size()));
        }
        const auto from = table.row(static_cast<std::size_t>(src));
        std::copy(from.begin(), from.end(), out.row(i).begin());
    }
    table = std::move(out);
}

void DensifyStats::reset(std::size_t n) {
    grad_accum.assign(n, 0.0);
    count.assign(n, 0);
    max_radius.assign(n, 0.0);
}

void DensifyStats::keep_rows(std::span<const std::uint8_t> keep) {
    if (keep.size() != size()) {
        throw ContractViolation("densify stats size mismatch");
    }
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) {
            grad_accum[out] = grad_accum[i];
            count[out] = count[i];
            max_radius[out] = max_radius[i];
            ++out;
        }
    }
    grad_accum.resize(out);
    count.resize(out);
    max_radius.resize(out);
}

void accumulate_stats(DensifyStats& stats, const GradientBuffer& grads, const RenderOutput& cache) {
    if (stats.size() != grads.size() || cache.projected.size() != grads.size()) {
        throw ContractViolation("accumulate_stats: stats has " + std::to_string(stats.size()) + " rows, gradients " +
                                std::to_string(grads.size()) + ", cache " + std::to_string(cache.projected.size()));
    }
    const double half_w = 0.5 * cache.color.width;
    const double half_h = 0.5 * cache.color.height;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads.visible[i]) {
            continue;
        }
        const Vec2& g = grads.mean2d[i];
        stats.grad_accum[i] += std::hypot(g.x() * half_w, g.y() * half_h);
        stats.count[i] += 1;
        stats.max_radius[i] = std::max(stats.max_radius[i], cache.projected[i].radius);
    }
}

DensifyResult densify_and_prune(GaussianCloud& cloud, DensifyStats& stats, double scene_extent,
                                const DensifyConfig& cfg, std::mt19937_64& rng) {
    const std::size_t n = cloud.size();
    if (stats.size() != n) {
        throw ContractViolation("densify stats are not aligned with the cloud");
    }
    DensifyResult result;
    const double split_limit = cfg.split_fraction * scene_extent;
    const double shrink = std::log(cfg.split_factor);
    std::normal_distribution<double> normal(0.0, 1.0);

    GaussianCloud out(cloud.sh_degree());
    RowRemap remap;
    std::vector<std::size_t> clones;
    std::vector<std::size_t> splits;
    for (std::size_t i = 0; i < n; ++i) {
        const double mean_grad = stats.count[i] > 0 ? stats.grad_accum[i] / stats.count[i] : 0.0;
        if (mean_grad < cfg.grad_threshold) {
            continue;
        }
        const double max_scale = cloud.log_scale(i).array().exp().maxCoeff();
        (max_scale < split_limit ? clones : splits).push_back(i);
    }
    std::vector<std::uint8_t> is_split(n, 0);
    for (const std::size_t i : splits) {
        is_split[i] = 1;
    }

    // Survivors keep their optimizer state; clones and split children start fresh.
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_split[i]) {
            out.append_row(cloud.row(i));
            remap.source.push_back(static_cast<std::int64_t>(i));
        }
    }
    for (const std::size_t i : clones) {
        out.append_row(cloud.row(i));
        remap.source.push_back(-1);
    }
    for (const std::size_t i : splits) {
        const Vec3 scale = cloud.log_scale(i).array().exp();
        const Mat3 rot = rotation_matrix(cloud.rotation(i).normalized());
        for (int child = 0; child < 2; ++child) {
            const Vec3 offset(normal(rng), normal(rng), normal(rng));
            out.append_row(cloud.row(i));
            const std::size_t r = out.size() - 1;
            out.center(r) = Vec3(cloud.center(i)) + rot * scale.cwiseProduct(offset);
            out.log_scale(r) = Vec3(cloud.log_scale(i)) - Vec3::Constant(shrink);
            remap.source.push_back(-1);
        }
    }
    result.cloned = clones.size();
    result.split = splits.size();

    const double world_limit = cfg.world_prune_fraction * scene_extent;
    std::vector<std::uint8_t> keep(out.size(), 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double opacity = sigmoid(out.opacity_logit(i));
        const double max_scale = out.log_scale(i).array().exp().maxCoeff();
        if (opacity < cfg.prune_opacity || max_scale > world_limit) {
            keep[i] = 0;
            ++result.pruned;
        }
    }
    out.keep_rows(keep);
    RowRemap final_remap;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) {
            final_remap.source.push_back(remap.source[i]);
        }
    }

    cloud = std::move(out);
    stats.reset(cloud.size());
    result.remap = std::move(final_remap);
    return result;
}

void reset_opacity(GaussianCloud& cloud, double ceiling) {
    if (!(ceiling > 0.0 && ceiling < 1.0)) {
        throw InvalidParameter("opacity ceiling must lie in (0, 1)");
    }
    const double cap = logit(ceiling);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        cloud.opacity_logit(i) = std::min(cloud.opacity_logit(i), cap);
    }
}

} // namespace auggs
