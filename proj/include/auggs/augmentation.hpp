#pragma once

#include "auggs/gaussian.hpp"
#include "auggs/views.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace auggs {

/// Position and view-independent color handed from the coarse to the fine stage.
struct ColoredPoint {
    Vec3 position = Vec3::Zero();
    Vec3 color = Vec3::Constant(0.5);
};

/// One point per Gaussian: its center and its degree-0 (DC) color. Nothing else is kept.
std::vector<ColoredPoint> geometry_augment(const GaussianCloud& coarse);

/// Camera on the great-circle arc from `a` to `b` about `centroid` at parameter t,
/// aimed at the centroid with the up vector blended between the two poses.
Camera interpolate_camera(const Camera& a, const Camera& b, const Vec3& centroid, double t);

/// Distributes n_prime cameras over the arcs between azimuth-consecutive reference
/// cameras about their convergence point (closing the loop when there are three or
/// more), at evenly spaced interior parameters. Arcs that receive one extra sample
/// when n_prime is not a multiple of the arc count are chosen with `seed`.
std::vector<Camera> sample_novel_cameras(std::span<const Camera> refs, std::size_t n_prime, std::uint64_t seed);

/// Renders the coarse model at each camera; records are tagged pseudo, without mask or depth.
std::vector<ViewRecord> perceptual_augment(const GaussianCloud& coarse, std::span<const Camera> cams,
                                           const Vec3& background);

/// References first, then pseudo-views.
ViewSet build_fine_viewset(const ViewSet& refs, std::vector<ViewRecord> pseudos);

} // namespace auggs
