#pragma once

#include "auggs/gaussian.hpp"
#include "auggs/views.hpp"

#include <cstdint>
#include <filesystem>

namespace auggs {

/// Synthetic ground-truth scene: random Gaussians seen from cameras on an orbit.
struct FixtureConfig {
    std::size_t gaussians = 20;
    int width = 64;
    int height = 64;
    double focal = 77.0;
    std::size_t train_views = 4;
    std::size_t heldout_views = 4;
    double orbit_radius = 3.0;
    double elevation_deg = 20.0;
    /// Held-out cameras sit between train azimuths at this elevation.
    double heldout_elevation_deg = 20.0;
    /// Gaussian centers are drawn uniformly in a ball of this radius.
    double object_radius = 0.6;
    double min_scale = 0.08;
    double max_scale = 0.25;
    Vec3 background = Vec3::Ones();
    std::uint64_t seed = 7;
};

struct Fixture {
    GaussianCloud gt{0};
    Dataset data;
};

/// Train views at evenly spaced azimuths, held-out views halfway between them. Images
/// are quantized to 8 bits and depth to float32, so a write/read cycle is exact.
/// Masks mark pixels with alpha > 1/255; depth is valid on the mask.
Fixture make_fixture(const FixtureConfig& cfg);

/// save_dataset plus gt.ply.
void write_fixture(const Fixture& fixture, const std::filesystem::path& root);

} // namespace auggs
