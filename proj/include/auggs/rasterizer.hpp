#pragma once

#include "auggs/gaussian.hpp"
#include "auggs/image.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace auggs {

inline constexpr double kAlphaMax = 0.99;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceCutoff = 1e-4;
inline constexpr int kTileSize = 16;

/// Screen-space state of one Gaussian for one camera.
struct ProjectedGaussian {
    bool visible = false;
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Zero();
    /// Upper triangle (a, b, c) of the inverse 2D covariance.
    Vec3 conic = Vec3::Zero();
    double depth = 0.0;
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
    /// Per-channel flag: SH color was clamped to [0, 1].
    std::uint8_t clamped[3] = {0, 0, 0};
    /// Half-extent (px) of the region where alpha can reach kAlphaMin.
    double radius = 0.0;
    /// Inclusive pixel bounding box.
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

/// Pixel-loop copy of a visible ProjectedGaussian, stored contiguously per tile.
struct TileSplat {
    double mx = 0.0, my = 0.0;
    double conic[3] = {0.0, 0.0, 0.0};
    double opacity = 0.0;
    /// Exponent below which alpha is certainly under kAlphaMin.
    double min_power = 0.0;
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
    double color[3] = {0.0, 0.0, 0.0};
    double depth = 0.0;
};

/// alpha = min(0.99, opacity * exp(-0.5 d^T conic d)), or 0 below 1/255.
double pixel_alpha(double opacity, const Vec3& conic, const Vec2& offset);

struct RenderOutput {
    Image color;  // H x W x 3
    Image depth;  // H x W, unnormalized expected depth sum z*alpha*T
    Image alpha;  // H x W

    // Cache for the backward pass.
    Vec3 background = Vec3::Zero();
    std::size_t cloud_size = 0;
    int sh_degree = 0;
    std::vector<ProjectedGaussian> projected;
    std::vector<std::uint32_t> order;
    std::vector<std::vector<std::uint32_t>> tiles;
    /// Same entries as `tiles`, flattened; tile k spans [tile_offsets[k], tile_offsets[k + 1]).
    std::vector<TileSplat> splats;
    std::vector<std::size_t> tile_offsets;
    /// Per tile, composited (tile-list position, pixel-in-tile) pairs in compositing order,
    /// packed as position * kTileSize^2 + pixel, with the Gaussian falloff at that pixel.
    std::vector<std::vector<std::uint32_t>> hit_keys;
    std::vector<std::vector<double>> hit_falloff;
    std::vector<double> final_transmittance;
    /// Per pixel, one past the last contributing position in its tile list.
    std::vector<std::uint32_t> last_contributor;
};

/// Per-Gaussian partials, same layout as the cloud, plus screen-space mean gradients
/// used by densification statistics.
struct GradientBuffer {
    ParamTable params;
    std::vector<Vec2> mean2d;
    std::vector<std::uint8_t> visible;

    explicit GradientBuffer(int sh_degree = kMaxShDegree, std::size_t n = 0)
        : params(sh_degree, n), mean2d(n, Vec2::Zero()), visible(n, 0) {}
    std::size_t size() const { return params.size(); }
};

/// Projects every Gaussian; throws RenderError on a non-finite Gaussian.
std::vector<ProjectedGaussian> project_cloud(const GaussianCloud& cloud, const Camera& cam);

/// Front-to-back order of visible Gaussians by camera depth (ties by index).
std::vector<std::uint32_t> depth_order(std::span<const ProjectedGaussian> projected);

/// Composites `projected` in the given order.
RenderOutput rasterize(std::vector<ProjectedGaussian> projected, std::vector<std::uint32_t> order,
                       const Camera& cam, const Vec3& background);

RenderOutput render(const GaussianCloud& cloud, const Camera& cam, const Vec3& background);

/// Analytic gradients given dL/dcolor (H x W x 3) and optionally dL/ddepth (H x W).
GradientBuffer render_backward(const GaussianCloud& cloud, const Camera& cam, const RenderOutput& cache,
                               const Image& grad_color, const Image* grad_depth = nullptr);

/// One compositing step at a pixel, for inspection.
struct PixelContribution {
    std::uint32_t gaussian = 0;
    double alpha = 0.0;
    /// Transmittance before this contribution.
    double transmittance = 0.0;
};

std::vector<PixelContribution> trace_pixel(const RenderOutput& cache, int x, int y);

} // namespace auggs
