#include "auggs/fixture.hpp"

#include "auggs/error.hpp"
#include "auggs/rasterizer.hpp"
#include "auggs/scene_io.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

namespace auggs {

namespace {

Camera orbit_camera(const FixtureConfig& cfg, double azimuth_deg, double elevation_deg) {
    Camera cam;
    cam.width = cfg.width;
    cam.height = cfg.height;
    cam.fx = cam.fy = cfg.focal;
    cam.cx = 0.5 * cfg.width;
    cam.cy = 0.5 * cfg.height;
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const double el = elevation_deg * std::numbers::pi / 180.0;
    const Vec3 pos = cfg.orbit_radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    look_at(cam, pos, Vec3::Zero(), Vec3::UnitZ());
    return cam;
}

ViewRecord capture(const GaussianCloud& gt, const Camera& cam, const std::string& name, const Vec3& bg) {
    const RenderOutput out = render(gt, cam, bg);
    ViewRecord r;
    r.name = name;
    r.camera = cam;
    r.image = out.color;
    for (double& v : r.image.data) {
        v = quantize_byte(v) / 255.0;
    }
    std::vector<std::uint8_t> mask(out.alpha.pixel_count());
    Image depth(cam.width, cam.height, 1);
    for (std::size_t p = 0; p < mask.size(); ++p) {
        mask[p] = out.alpha.data[p] > kAlphaMin ? 1 : 0;
        depth.data[p] = mask[p] ? static_cast<double>(static_cast<float>(out.depth.data[p])) : 0.0;
    }
    r.depth = DepthMap(std::move(depth), mask);
    r.object_mask = std::move(mask);
    return r;
}

} // namespace

Fixture make_fixture(const FixtureConfig& cfg) {
    if (cfg.gaussians == 0 || cfg.train_views == 0 || cfg.width <= 0 || cfg.height <= 0 || !(cfg.focal > 0.0) ||
        !(cfg.orbit_radius > cfg.object_radius) || !(cfg.min_scale > 0.0 && cfg.min_scale <= cfg.max_scale)) {
        throw InvalidParameter("invalid fixture configuration");
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Fixture f;
    for (std::size_t i = 0; i < cfg.gaussians; ++i) {
        Gaussian g;
        Vec3 v;
        do {
            v = Vec3(2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1);
        } while (v.squaredNorm() > 1.0);
        g.center = cfg.object_radius * v;
        g.rotation = Vec4(normal(rng), normal(rng), normal(rng), normal(rng)).normalized();
        for (int a = 0; a < 3; ++a) {
            g.log_scale[a] = std::log(cfg.min_scale) + u(rng) * std::log(cfg.max_scale / cfg.min_scale);
        }
        g.opacity_logit = logit(0.6 + 0.35 * u(rng));
        const Vec3 color(0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng));
        g.sh = {(color - Vec3::Constant(0.5)) / kShC0};
        f.gt.push_back(g);
    }
    for (double& v : f.gt.data()) {
        v = static_cast<double>(static_cast<float>(v));
    }

    const double step = 360.0 / static_cast<double>(cfg.train_views);
    for (std::size_t i = 0; i < cfg.train_views; ++i) {
        const Camera cam = orbit_camera(cfg, step * static_cast<double>(i), cfg.elevation_deg);
        f.data.train.records.push_back(capture(f.gt, cam, "train_" + std::to_string(i), cfg.background));
    }
    const double held_step = 360.0 / static_cast<double>(std::max<std::size_t>(cfg.heldout_views, 1));
    for (std::size_t i = 0; i < cfg.heldout_views; ++i) {
        const double az = cfg.heldout_views == cfg.train_views ? step * (static_cast<double>(i) + 0.5)
                                                                : held_step * (static_cast<double>(i) + 0.5);
        const Camera cam = orbit_camera(cfg, az, cfg.heldout_elevation_deg);
        f.data.heldout.records.push_back(capture(f.gt, cam, "heldout_" + std::to_string(i), cfg.background));
    }
    return f;
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& root) {
    save_dataset(fixture.data, root);
    save_ply(fixture.gt, root / "gt.ply");
}

} // namespace auggs
