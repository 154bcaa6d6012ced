#include "auggs/rasterizer.hpp"

#include "auggs/error.hpp"

#include <Eigen/Dense>
#include "auggs/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace auggs {

namespace {

constexpr std::size_t kProjectChunk = 256;

struct Falloff {
    double alpha = 0.0;
    double gauss = 0.0;
    double dx = 0.0;
    double dy = 0.0;
};

/// Evaluates a Gaussian at pixel (x, y). Returns false when it contributes nothing there.
inline bool evaluate(const TileSplat& g, int x, int y, Falloff& f) {
    if (x < g.x0 || x > g.x1 || y < g.y0 || y > g.y1) {
        return false;
    }
    f.dx = (x + 0.5) - g.mx;
    f.dy = (y + 0.5) - g.my;
    const double power = -0.5 * (g.conic[0] * f.dx * f.dx + g.conic[2] * f.dy * f.dy) - g.conic[1] * f.dx * f.dy;
    if (power > 0.0 || power < g.min_power) {
        return false;
    }
    f.gauss = std::exp(power);
    f.alpha = std::min(kAlphaMax, g.opacity * f.gauss);
    return f.alpha >= kAlphaMin;
}

TileSplat make_splat(const ProjectedGaussian& g) {
    TileSplat s;
    s.mx = g.mean2d.x();
    s.my = g.mean2d.y();
    for (int k = 0; k < 3; ++k) {
        s.conic[k] = g.conic[k];
        s.color[k] = g.color[k];
    }
    s.opacity = g.opacity;
    // The margin dwarfs rounding in log/exp, so the exact alpha test still decides near the edge.
    s.min_power = std::log(kAlphaMin / g.opacity) - 1e-9;
    s.x0 = g.x0;
    s.x1 = g.x1;
    s.y0 = g.y0;
    s.y1 = g.y1;
    s.depth = g.depth;
    return s;
}

struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;

    explicit TileGrid(const Camera& cam)
        : tiles_x((cam.width + kTileSize - 1) / kTileSize), tiles_y((cam.height + kTileSize - 1) / kTileSize) {}
    std::size_t count() const { return static_cast<std::size_t>(tiles_x) * tiles_y; }
};

constexpr int kTilePixels = kTileSize * kTileSize;

/// Pixel coordinates of one tile in row-major order.
struct TilePixels {
    int count = 0;
    int x[kTilePixels];
    int y[kTilePixels];

    TilePixels(const TileGrid& grid, std::size_t tile, const Camera& cam) {
        const int tx = static_cast<int>(tile % grid.tiles_x);
        const int ty = static_cast<int>(tile / grid.tiles_x);
        const int xe = std::min(cam.width, (tx + 1) * kTileSize);
        const int ye = std::min(cam.height, (ty + 1) * kTileSize);
        for (int py = ty * kTileSize; py < ye; ++py) {
            for (int px = tx * kTileSize; px < xe; ++px) {
                x[count] = px;
                y[count] = py;
                ++count;
            }
        }
    }
};

double max_eigenvalue(const Mat2& m) {
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return mid + std::sqrt(std::max(0.0, mid * mid - det));
}

/// Screen-space partials of one Gaussian, accumulated over pixels.
struct ScreenGrad {
    double mean[2] = {0.0, 0.0};
    double conic[3] = {0.0, 0.0, 0.0};
    double opacity = 0.0;
    double color[3] = {0.0, 0.0, 0.0};
    double depth = 0.0;

    ScreenGrad& operator+=(const ScreenGrad& o) {
        for (int k = 0; k < 2; ++k) mean[k] += o.mean[k];
        for (int k = 0; k < 3; ++k) conic[k] += o.conic[k];
        for (int k = 0; k < 3; ++k) color[k] += o.color[k];
        opacity += o.opacity;
        depth += o.depth;
        return *this;
    }
};

void check_cache(const GaussianCloud& cloud, const Camera& cam, const RenderOutput& cache, const Image& grad_color,
                 const Image* grad_depth) {
    if (cache.cloud_size != cloud.size() || cache.projected.size() != cloud.size() ||
        cache.sh_degree != cloud.sh_degree()) {
        throw ContractViolation("render cache was produced for " + std::to_string(cache.cloud_size) +
                                " gaussians, cloud has " + std::to_string(cloud.size()));
    }
    if (cache.color.width != cam.width || cache.color.height != cam.height) {
        throw ContractViolation("render cache does not match camera dimensions");
    }
    if (grad_color.width != cam.width || grad_color.height != cam.height || grad_color.channels != 3) {
        throw ContractViolation("color gradient must be H x W x 3");
    }
    if (grad_depth && (grad_depth->width != cam.width || grad_depth->height != cam.height ||
                       grad_depth->channels != 1)) {
        throw ContractViolation("depth gradient must be H x W");
    }
}

} // namespace

double pixel_alpha(double opacity, const Vec3& conic, const Vec2& offset) {
    const double power =
        -0.5 * (conic[0] * offset.x() * offset.x() + conic[2] * offset.y() * offset.y()) - conic[1] * offset.x() * offset.y();
    if (power > 0.0) {
        return 0.0;
    }
    const double a = std::min(kAlphaMax, opacity * std::exp(power));
    return a < kAlphaMin ? 0.0 : a;
}

std::vector<ProjectedGaussian> project_cloud(const GaussianCloud& cloud, const Camera& cam) {
    cam.validate();
    const std::size_t n = cloud.size();
    std::vector<ProjectedGaussian> out(n);
    const Vec3 cam_center = cam.center();
    const int degree = cloud.sh_degree();
    const std::size_t sh_count = cloud.sh_count();

    parallel_for((n + kProjectChunk - 1) / kProjectChunk, [&](std::size_t chunk) {
        const std::size_t end = std::min(n, (chunk + 1) * kProjectChunk);
        double basis[16];
        for (std::size_t i = chunk * kProjectChunk; i < end; ++i) {
            const auto row = cloud.row(i);
            if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
                throw RenderError(i, "non-finite parameters");
            }
            const Vec4 q = cloud.rotation(i);
            if (q.squaredNorm() == 0.0) {
                throw RenderError(i, "zero rotation quaternion");
            }
            const Vec3 center = cloud.center(i);
            const Mat3 cov3d = covariance_from_params(q, cloud.log_scale(i).array().exp());
            const ScreenProjection proj = project_gaussian(center, cov3d, cam);
            ProjectedGaussian& g = out[i];
            if (proj.culled) {
                continue;
            }
            g.mean2d = proj.mean2d;
            g.cov2d = proj.cov2d;
            g.depth = proj.depth;
            const double det = proj.cov2d.determinant();
            if (!(det > 0.0)) {
                continue;
            }
            g.conic = Vec3(proj.cov2d(1, 1) / det, -proj.cov2d(0, 1) / det, proj.cov2d(0, 0) / det);
            g.opacity = sigmoid(cloud.opacity_logit(i));
            if (g.opacity < kAlphaMin) {
                continue;
            }
            g.radius = std::sqrt(2.0 * std::log(255.0 * g.opacity) * max_eigenvalue(proj.cov2d));
            g.x0 = std::max(0, static_cast<int>(std::ceil(g.mean2d.x() - g.radius - 0.5)));
            g.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(g.mean2d.x() + g.radius - 0.5)));
            g.y0 = std::max(0, static_cast<int>(std::ceil(g.mean2d.y() - g.radius - 0.5)));
            g.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(g.mean2d.y() + g.radius - 0.5)));
            if (g.x0 > g.x1 || g.y0 > g.y1) {
                continue;
            }
            g.visible = true;

            const Vec3 dir = (center - cam_center).normalized();
            sh_basis(degree, dir, basis);
            const auto sh = cloud.sh(i);
            Vec3 raw = Vec3::Constant(0.5);
            for (std::size_t k = 0; k < sh_count; ++k) {
                raw += basis[k] * Vec3(sh[3 * k], sh[3 * k + 1], sh[3 * k + 2]);
            }
            for (int c = 0; c < 3; ++c) {
                g.clamped[c] = (raw[c] < 0.0 || raw[c] > 1.0) ? 1 : 0;
            }
            g.color = raw.cwiseMax(0.0).cwiseMin(1.0);
        }
    });
    return out;
}

std::vector<std::uint32_t> depth_order(std::span<const ProjectedGaussian> projected) {
    std::vector<std::uint32_t> order;
    order.reserve(projected.size());
    for (std::uint32_t i = 0; i < projected.size(); ++i) {
        if (projected[i].visible) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return projected[a].depth < projected[b].depth; });
    return order;
}

RenderOutput rasterize(std::vector<ProjectedGaussian> projected, std::vector<std::uint32_t> order, const Camera& cam,
                       const Vec3& background) {
    RenderOutput out;
    out.color = Image(cam.width, cam.height, 3);
    out.depth = Image(cam.width, cam.height, 1);
    out.alpha = Image(cam.width, cam.height, 1);
    out.background = background;
    out.cloud_size = projected.size();
    out.final_transmittance.assign(out.color.pixel_count(), 1.0);
    out.last_contributor.assign(out.color.pixel_count(), 0);

    const TileGrid grid(cam);
    out.tiles.resize(grid.count());
    for (const std::uint32_t gi : order) {
        const ProjectedGaussian& g = projected[gi];
        if (!g.visible) {
            continue;
        }
        for (int ty = g.y0 / kTileSize; ty <= g.y1 / kTileSize; ++ty) {
            for (int tx = g.x0 / kTileSize; tx <= g.x1 / kTileSize; ++tx) {
                out.tiles[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(gi);
            }
        }
    }

    if (projected.size() >= std::numeric_limits<std::uint32_t>::max() / kTilePixels) {
        throw ContractViolation("too many gaussians for one render");
    }
    out.hit_keys.resize(grid.count());
    out.hit_falloff.resize(grid.count());
    out.tile_offsets.assign(grid.count() + 1, 0);
    for (std::size_t tile = 0; tile < grid.count(); ++tile) {
        out.tile_offsets[tile + 1] = out.tile_offsets[tile] + out.tiles[tile].size();
    }
    out.splats.reserve(out.tile_offsets.back());
    for (std::size_t tile = 0; tile < grid.count(); ++tile) {
        for (const std::uint32_t gi : out.tiles[tile]) {
            out.splats.push_back(make_splat(projected[gi]));
        }
    }

    parallel_for(grid.count(), [&](std::size_t tile) {
        const std::size_t count = out.tiles[tile].size();
        const TileSplat* list = out.splats.data() + out.tile_offsets[tile];
        const TilePixels px(grid, tile, cam);
        double t[kTilePixels], c[kTilePixels][3] = {}, d[kTilePixels] = {};
        std::uint32_t last[kTilePixels] = {};
        bool done[kTilePixels] = {};
        std::fill_n(t, px.count, 1.0);
        int alive = px.count;
        auto& keys = out.hit_keys[tile];
        auto& falloff = out.hit_falloff[tile];
        keys.reserve(count * 4);
        falloff.reserve(count * 4);
        Falloff f;
        // Gaussian-major so the per-pixel compositing chains interleave.
        for (std::uint32_t j = 0; j < count && alive > 0; ++j) {
            const TileSplat& g = list[j];
            for (int k = 0; k < px.count; ++k) {
                if (done[k] || !evaluate(g, px.x[k], px.y[k], f)) {
                    continue;
                }
                const double next_t = t[k] * (1.0 - f.alpha);
                if (next_t < kTransmittanceCutoff) {
                    done[k] = true;
                    --alive;
                    continue;
                }
                keys.push_back(j * kTilePixels + k);
                falloff.push_back(f.gauss);
                const double w = f.alpha * t[k];
                for (int ch = 0; ch < 3; ++ch) {
                    c[k][ch] += w * g.color[ch];
                }
                d[k] += w * g.depth;
                t[k] = next_t;
                last[k] = j + 1;
            }
        }
        for (int k = 0; k < px.count; ++k) {
            const int x = px.x[k], y = px.y[k];
            const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
            for (int ch = 0; ch < 3; ++ch) {
                out.color.at(x, y, ch) = c[k][ch] + t[k] * background[ch];
            }
            out.depth.at(x, y) = d[k];
            out.alpha.at(x, y) = 1.0 - t[k];
            out.final_transmittance[p] = t[k];
            out.last_contributor[p] = last[k];
        }
    });

    out.projected = std::move(projected);
    out.order = std::move(order);
    return out;
}

RenderOutput render(const GaussianCloud& cloud, const Camera& cam, const Vec3& background) {
    auto projected = project_cloud(cloud, cam);
    auto order = depth_order(projected);
    RenderOutput out = rasterize(std::move(projected), std::move(order), cam, background);
    out.sh_degree = cloud.sh_degree();
    return out;
}

std::vector<PixelContribution> trace_pixel(const RenderOutput& cache, int x, int y) {
    const int tiles_x = (cache.color.width + kTileSize - 1) / kTileSize;
    const std::size_t tile = static_cast<std::size_t>(y / kTileSize) * tiles_x + x / kTileSize;
    const auto& list = cache.tiles[tile];
    const TileSplat* splats = cache.splats.data() + cache.tile_offsets[tile];
    const std::size_t p = static_cast<std::size_t>(y) * cache.color.width + x;
    std::vector<PixelContribution> out;
    double t = 1.0;
    Falloff f;
    for (std::uint32_t j = 0; j < cache.last_contributor[p]; ++j) {
        if (!evaluate(splats[j], x, y, f)) {
            continue;
        }
        out.push_back({list[j], f.alpha, t});
        t *= 1.0 - f.alpha;
    }
    return out;
}

GradientBuffer render_backward(const GaussianCloud& cloud, const Camera& cam, const RenderOutput& cache,
                               const Image& grad_color, const Image* grad_depth) {
    check_cache(cloud, cam, cache, grad_color, grad_depth);
    const std::size_t n = cloud.size();
    const TileGrid grid(cam);
    const auto& projected = cache.projected;

    // Pixel pass: per-tile partials indexed by tile-list position, merged in tile order.
    std::vector<std::vector<ScreenGrad>> tile_grads(grid.count());
    parallel_for(grid.count(), [&](std::size_t tile) {
        const TileSplat* list = cache.splats.data() + cache.tile_offsets[tile];
        auto& local = tile_grads[tile];
        local.assign(cache.tiles[tile].size(), ScreenGrad{});
        const TilePixels px(grid, tile, cam);
        double t[kTilePixels], rest_depth[kTilePixels], dl_dd[kTilePixels];
        Vec3 rest_color[kTilePixels], dl_dc[kTilePixels];
        bool active[kTilePixels];
        for (int k = 0; k < px.count; ++k) {
            const int x = px.x[k], y = px.y[k];
            const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
            dl_dc[k] = Vec3(grad_color.at(x, y, 0), grad_color.at(x, y, 1), grad_color.at(x, y, 2));
            dl_dd[k] = grad_depth ? grad_depth->at(x, y) : 0.0;
            active[k] = !(dl_dc[k].isZero(0.0) && dl_dd[k] == 0.0);
            t[k] = cache.final_transmittance[p];
            rest_color[k] = cache.background;
            rest_depth[k] = 0.0;
        }
        const auto& keys = cache.hit_keys[tile];
        const auto& falloff = cache.hit_falloff[tile];
        // Walk the forward hits back to front, one Gaussian run at a time; within a run
        // pixels stay in row-major order.
        std::size_t end = keys.size();
        while (end > 0) {
            const std::uint32_t j = keys[end - 1] / kTilePixels;
            std::size_t begin = end - 1;
            while (begin > 0 && keys[begin - 1] / kTilePixels == j) {
                --begin;
            }
            const TileSplat g = list[j];
            const Vec3 g_color(g.color[0], g.color[1], g.color[2]);
            ScreenGrad sg;
            for (std::size_t h = begin; h < end; ++h) {
                const int k = static_cast<int>(keys[h] % kTilePixels);
                if (!active[k]) {
                    continue;
                }
                const double gauss = falloff[h];
                const double alpha = std::min(kAlphaMax, g.opacity * gauss);
                const double dx = (px.x[k] + 0.5) - g.mx;
                const double dy = (px.y[k] + 0.5) - g.my;
                t[k] /= 1.0 - alpha;
                const double w = alpha * t[k];
                for (int ch = 0; ch < 3; ++ch) {
                    sg.color[ch] += w * dl_dc[k][ch];
                }
                sg.depth += w * dl_dd[k];
                const double dl_dalpha =
                    t[k] * ((g_color - rest_color[k]).dot(dl_dc[k]) + (g.depth - rest_depth[k]) * dl_dd[k]);
                rest_color[k] = alpha * g_color + (1.0 - alpha) * rest_color[k];
                rest_depth[k] = alpha * g.depth + (1.0 - alpha) * rest_depth[k];

                if (g.opacity * gauss >= kAlphaMax) {
                    continue; // clipped: alpha is locally constant
                }
                sg.opacity += gauss * dl_dalpha;
                const double dl_dpower = alpha * dl_dalpha;
                sg.mean[0] += dl_dpower * (g.conic[0] * dx + g.conic[1] * dy);
                sg.mean[1] += dl_dpower * (g.conic[1] * dx + g.conic[2] * dy);
                sg.conic[0] += dl_dpower * (-0.5 * dx * dx);
                sg.conic[1] += dl_dpower * (-dx * dy);
                sg.conic[2] += dl_dpower * (-0.5 * dy * dy);
            }
            local[j] = sg;
            end = begin;
        }
    });

    std::vector<ScreenGrad> screen(n);
    for (std::size_t tile = 0; tile < grid.count(); ++tile) {
        const auto& list = cache.tiles[tile];
        for (std::size_t j = 0; j < list.size(); ++j) {
            screen[list[j]] += tile_grads[tile][j];
        }
    }

    // Parameter pass: independent per Gaussian.
    GradientBuffer grads(cloud.sh_degree(), n);
    const Vec3 cam_center = cam.center();
    const Mat3& w = cam.rotation;
    const int degree = cloud.sh_degree();
    const std::size_t sh_count = cloud.sh_count();

    parallel_for((n + kProjectChunk - 1) / kProjectChunk, [&](std::size_t chunk) {
        const std::size_t end = std::min(n, (chunk + 1) * kProjectChunk);
        double basis[16];
        Vec3 basis_grad[16];
        for (std::size_t i = chunk * kProjectChunk; i < end; ++i) {
            const ProjectedGaussian& g = projected[i];
            if (!g.visible) {
                continue;
            }
            grads.visible[i] = 1;
            const ScreenGrad& sg = screen[i];
            grads.mean2d[i] = Vec2(sg.mean[0], sg.mean[1]);

            // Opacity.
            grads.params.opacity_logit(i) = sg.opacity * g.opacity * (1.0 - g.opacity);

            // Color through SH, including the view-direction dependence on the center.
            const Vec3 center = cloud.center(i);
            const Vec3 v = center - cam_center;
            const double v_norm = v.norm();
            const Vec3 dir = v / v_norm;
            sh_basis(degree, dir, basis);
            Vec3 dl_dcolor(sg.color[0], sg.color[1], sg.color[2]);
            for (int ch = 0; ch < 3; ++ch) {
                if (g.clamped[ch]) {
                    dl_dcolor[ch] = 0.0;
                }
            }
            auto gsh = grads.params.sh(i);
            for (std::size_t k = 0; k < sh_count; ++k) {
                for (int ch = 0; ch < 3; ++ch) {
                    gsh[3 * k + ch] = basis[k] * dl_dcolor[ch];
                }
            }
            Vec3 dl_dmean = Vec3::Zero();
            if (degree > 0) {
                sh_basis_gradient(degree, dir, basis_grad);
                const auto sh = cloud.sh(i);
                Vec3 dl_ddir = Vec3::Zero();
                for (std::size_t k = 1; k < sh_count; ++k) {
                    const double s = sh[3 * k] * dl_dcolor[0] + sh[3 * k + 1] * dl_dcolor[1] + sh[3 * k + 2] * dl_dcolor[2];
                    dl_ddir += s * basis_grad[k];
                }
                dl_dmean += (dl_ddir - dir * dir.dot(dl_ddir)) / v_norm;
            }

            // Conic -> 2D covariance: dL/dcov2d = -A G A with G the symmetric conic gradient.
            const Mat2 a_inv = (Mat2() << g.conic[0], g.conic[1], g.conic[1], g.conic[2]).finished();
            const Mat2 g_conic = (Mat2() << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2]).finished();
            const Mat2 dl_dcov2d = -a_inv * g_conic * a_inv;

            // 2D covariance -> camera-space point and 3D covariance.
            const Vec3 t = cam.to_camera(center);
            const double iz = 1.0 / t.z();
            const double iz2 = iz * iz;
            Eigen::Matrix<double, 2, 3> jac;
            jac << cam.fx * iz, 0.0, -cam.fx * t.x() * iz2, 0.0, cam.fy * iz, -cam.fy * t.y() * iz2;
            const Eigen::Matrix<double, 2, 3> jw = jac * w;
            const Vec4 q_raw = cloud.rotation(i);
            const double q_norm = q_raw.norm();
            const Vec4 q = q_raw / q_norm;
            const Mat3 rot = rotation_matrix(q);
            const Vec3 scale = cloud.log_scale(i).array().exp();
            const Mat3 m = rot * scale.asDiagonal();
            const Mat3 cov3d = m * m.transpose();

            const Mat3 dl_dcov3d = jw.transpose() * dl_dcov2d * jw;
            const Eigen::Matrix<double, 2, 3> dl_djw = 2.0 * dl_dcov2d * jw * cov3d;
            const Eigen::Matrix<double, 2, 3> dl_djac = dl_djw * w.transpose();

            Vec3 dl_dt = Vec3::Zero();
            // Jacobian entries as functions of t.
            dl_dt.z() += dl_djac(0, 0) * (-cam.fx * iz2);
            dl_dt.x() += dl_djac(0, 2) * (-cam.fx * iz2);
            dl_dt.z() += dl_djac(0, 2) * (2.0 * cam.fx * t.x() * iz2 * iz);
            dl_dt.z() += dl_djac(1, 1) * (-cam.fy * iz2);
            dl_dt.y() += dl_djac(1, 2) * (-cam.fy * iz2);
            dl_dt.z() += dl_djac(1, 2) * (2.0 * cam.fy * t.y() * iz2 * iz);
            // Projected mean and depth.
            dl_dt.x() += sg.mean[0] * cam.fx * iz;
            dl_dt.z() += sg.mean[0] * (-cam.fx * t.x() * iz2);
            dl_dt.y() += sg.mean[1] * cam.fy * iz;
            dl_dt.z() += sg.mean[1] * (-cam.fy * t.y() * iz2);
            dl_dt.z() += sg.depth;
            dl_dmean += w.transpose() * dl_dt;
            grads.params.center(i) = dl_dmean;

            // 3D covariance -> scale and rotation.
            const Mat3 dl_dm = 2.0 * dl_dcov3d * m;
            Vec3 dl_dscale;
            Mat3 dl_drot;
            for (int k = 0; k < 3; ++k) {
                dl_dscale[k] = dl_dm.col(k).dot(rot.col(k));
                dl_drot.col(k) = dl_dm.col(k) * scale[k];
            }
            grads.params.log_scale(i) = dl_dscale.cwiseProduct(scale);

            const double qw = q[0], qx = q[1], qy = q[2], qz = q[3];
            const Mat3& gr = dl_drot;
            Vec4 dl_dq;
            dl_dq[0] = 2.0 * (qz * (gr(1, 0) - gr(0, 1)) + qy * (gr(0, 2) - gr(2, 0)) + qx * (gr(2, 1) - gr(1, 2)));
            dl_dq[1] = 2.0 * (qy * (gr(1, 0) + gr(0, 1)) + qz * (gr(2, 0) + gr(0, 2)) + qw * (gr(2, 1) - gr(1, 2))) -
                       4.0 * qx * (gr(1, 1) + gr(2, 2));
            dl_dq[2] = 2.0 * (qx * (gr(1, 0) + gr(0, 1)) + qw * (gr(0, 2) - gr(2, 0)) + qz * (gr(2, 1) + gr(1, 2))) -
                       4.0 * qy * (gr(0, 0) + gr(2, 2));
            dl_dq[3] = 2.0 * (qw * (gr(1, 0) - gr(0, 1)) + qx * (gr(2, 0) + gr(0, 2)) + qy * (gr(2, 1) + gr(1, 2))) -
                       4.0 * qz * (gr(0, 0) + gr(1, 1));
            grads.params.rotation(i) = (dl_dq - q * q.dot(dl_dq)) / q_norm;
        }
    });
    return grads;
}

} // namespace auggs
