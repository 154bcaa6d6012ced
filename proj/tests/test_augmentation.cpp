#include "auggs/augmentation.hpp"
#include "auggs/error.hpp"
#include "auggs/rasterizer.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace auggs;

namespace {

Camera base_camera() {
    Camera cam;
    cam.width = cam.height = 24;
    cam.fx = cam.fy = 30.0;
    cam.cx = cam.cy = 12.0;
    return cam;
}

Camera orbit_camera(double azimuth_deg, double elevation_deg, double radius, const Vec3& target) {
    const double az = azimuth_deg * std::numbers::pi / 180.0, el = elevation_deg * std::numbers::pi / 180.0;
    Camera cam = base_camera();
    const Vec3 pos = target + radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    look_at(cam, pos, target, Vec3::UnitZ());
    return cam;
}

std::vector<Camera> ring(int n, double elevation, const Vec3& target) {
    std::vector<Camera> cams;
    for (int i = 0; i < n; ++i) cams.push_back(orbit_camera(360.0 * i / n, elevation, 3.0, target));
    return cams;
}

void expect_aimed_at(const Camera& cam, const Vec3& target) {
    const Vec3 local = cam.to_camera(target);
    EXPECT_NEAR(local.x(), 0.0, 1e-9);
    EXPECT_NEAR(local.y(), 0.0, 1e-9);
    EXPECT_GT(local.z(), 0.0);
    EXPECT_NO_THROW(cam.validate());
}

GaussianCloud small_cloud() {
    GaussianCloud cloud(2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 12; ++i) {
        Gaussian g;
        g.center = Vec3(u(rng), u(rng), u(rng));
        g.log_scale = Vec3::Constant(std::log(0.2));
        g.opacity_logit = 1.0;
        g.sh.assign(9, Vec3::Zero());
        for (auto& c : g.sh) c = Vec3(u(rng), u(rng), u(rng));
        cloud.push_back(g);
    }
    return cloud;
}

} // namespace

TEST(LookAt, BuildsRightHandedPoseFacingTarget) {
    Camera cam = base_camera();
    look_at(cam, Vec3(3, 0, 1), Vec3(0, 0, 0.5), Vec3::UnitZ());
    expect_aimed_at(cam, Vec3(0, 0, 0.5));
    EXPECT_NEAR((cam.center() - Vec3(3, 0, 1)).norm(), 0.0, 1e-12);
    // +y points down the image, so world up projects to negative camera y.
    EXPECT_LT(cam.rotation.row(1).dot(Vec3::UnitZ()), 0.0);
    EXPECT_NEAR(cam.rotation.determinant(), 1.0, 1e-12);
}

TEST(ConvergencePoint, RingAimedOffCentroid) {
    const Vec3 target(0.3, -0.2, 0.1);
    const auto cams = ring(5, 25.0, target);
    EXPECT_NEAR((convergence_point(cams) - target).norm(), 0.0, 1e-9);
    // The camera centroid sits above the target because of the elevation.
    EXPECT_GT(camera_centroid(cams).z(), target.z() + 0.5);
}

TEST(ConvergencePoint, ParallelAxesFallBackToCentroid) {
    std::vector<Camera> cams(3, base_camera());
    cams[1].translation = Vec3(1, 0, 0);
    cams[2].translation = Vec3(0, 2, 0);
    EXPECT_NEAR((convergence_point(cams) - camera_centroid(cams)).norm(), 0.0, 1e-12);
    EXPECT_THROW(convergence_point({}), ContractViolation);
}

TEST(GeometryAugment, KeepsOnlyCentersAndDcColor) {
    const GaussianCloud cloud = small_cloud();
    const auto pts = geometry_augment(cloud);
    ASSERT_EQ(pts.size(), cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        EXPECT_EQ(pts[i].position, Vec3(cloud.center(i)));
        const auto sh = cloud.sh(i);
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(pts[i].color[c], 0.5 + kShC0 * sh[c], 1e-15);
    }
    EXPECT_THROW(geometry_augment(GaussianCloud(0)), EmptyInitError);
}

TEST(InterpolateCamera, EndpointsAndArcGeometry) {
    const Vec3 center(0.1, 0.2, -0.1);
    const Camera a = orbit_camera(10, 20, 3.0, center), b = orbit_camera(80, 20, 3.0, center);
    const Camera c0 = interpolate_camera(a, b, center, 0.0);
    const Camera c1 = interpolate_camera(a, b, center, 1.0);
    EXPECT_NEAR((c0.center() - a.center()).norm(), 0.0, 1e-9);
    EXPECT_NEAR((c1.center() - b.center()).norm(), 0.0, 1e-9);
    EXPECT_NEAR((c0.rotation - a.rotation).norm(), 0.0, 1e-9);
    for (const double t : {0.25, 0.5, 0.75}) {
        const Camera c = interpolate_camera(a, b, center, t);
        expect_aimed_at(c, center);
        EXPECT_NEAR((c.center() - center).norm(), 3.0, 1e-9);
        // The position stays on the great circle through both endpoints.
        EXPECT_NEAR((c.center() - center).dot((a.center() - center).cross(b.center() - center)), 0.0, 1e-9);
        EXPECT_EQ(c.fx, a.fx);
    }
    const Camera mid = interpolate_camera(a, b, center, 0.5);
    EXPECT_NEAR((mid.center() - a.center()).norm(), (mid.center() - b.center()).norm(), 1e-9);
}

TEST(InterpolateCamera, AntipodalPairStaysFinite) {
    const Camera a = orbit_camera(0, 0, 2.0, Vec3::Zero()), b = orbit_camera(180, 0, 2.0, Vec3::Zero());
    const Camera mid = interpolate_camera(a, b, Vec3::Zero(), 0.5);
    expect_aimed_at(mid, Vec3::Zero());
    EXPECT_NEAR(mid.center().norm(), 2.0, 1e-9);
    EXPECT_NEAR(mid.center().dot(a.center()), 0.0, 1e-9);
}

TEST(InterpolateCamera, CameraAtCentroidThrows) {
    const Camera a = orbit_camera(0, 0, 2.0, Vec3::Zero());
    EXPECT_THROW(interpolate_camera(a, a, a.center(), 0.5), ContractViolation);
}

TEST(NovelCameras, CountPlacementAndDeterminism) {
    const Vec3 target(0, 0, 0.2);
    const auto refs = ring(4, 20.0, target);
    for (const std::size_t n : {std::size_t{1}, std::size_t{4}, std::size_t{7}, std::size_t{12}}) {
        const auto cams = sample_novel_cameras(refs, n, 42);
        ASSERT_EQ(cams.size(), n);
        for (const auto& c : cams) {
            expect_aimed_at(c, target);
            EXPECT_NEAR((c.center() - target).norm(), 3.0, 1e-9);
            for (const auto& r : refs) EXPECT_GT((c.center() - r.center()).norm(), 1e-3);
            EXPECT_EQ(c.width, 24);
        }
        const auto again = sample_novel_cameras(refs, n, 42);
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(cams[i].rotation, again[i].rotation);
    }
}

TEST(NovelCameras, EvenDistributionAcrossArcs) {
    const auto refs = ring(4, 0.0, Vec3::Zero());
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto cams = sample_novel_cameras(refs, 6, seed);
        std::vector<int> per_quadrant(4, 0);
        for (const auto& c : cams) {
            double az = std::atan2(c.center().y(), c.center().x());
            if (az < 0) az += 2 * std::numbers::pi;
            per_quadrant[static_cast<int>(az / (std::numbers::pi / 2))]++;
        }
        for (int q : per_quadrant) {
            EXPECT_GE(q, 1);
            EXPECT_LE(q, 2);
        }
    }
}

TEST(NovelCameras, EdgeCases) {
    const auto refs = ring(4, 20.0, Vec3::Zero());
    EXPECT_TRUE(sample_novel_cameras(refs, 0, 1).empty());
    EXPECT_THROW(sample_novel_cameras(std::span<const Camera>(refs.data(), 1), 3, 1), ContractViolation);
    const auto two = std::vector<Camera>{orbit_camera(0, 0, 3, Vec3::Zero()), orbit_camera(90, 0, 3, Vec3::Zero())};
    const auto cams = sample_novel_cameras(two, 3, 5);
    ASSERT_EQ(cams.size(), 3u);
    for (const auto& c : cams) {
        EXPECT_GT(c.center().x(), 0.0);
        EXPECT_GT(c.center().y(), 0.0);
    }
}

TEST(PerceptualAugment, RendersCoarseModelAsPseudoViews) {
    const GaussianCloud cloud = small_cloud();
    const auto cams = sample_novel_cameras(ring(3, 20.0, Vec3::Zero()), 3, 9);
    const Vec3 bg(1, 1, 1);
    const auto views = perceptual_augment(cloud, cams, bg);
    ASSERT_EQ(views.size(), 3u);
    for (std::size_t i = 0; i < views.size(); ++i) {
        EXPECT_EQ(views[i].origin, ViewOrigin::pseudo);
        EXPECT_FALSE(views[i].object_mask.has_value());
        EXPECT_FALSE(views[i].depth.has_value());
        EXPECT_EQ(views[i].image, render(cloud, cams[i], bg).color);
    }
    EXPECT_THROW(perceptual_augment(GaussianCloud(0), cams, bg), EmptyInitError);
}

TEST(FineViewSet, ReferencesFirstAndPseudoChecked) {
    ViewSet refs;
    refs.records.resize(2);
    refs.records[0].name = "a";
    refs.records[1].name = "b";
    std::vector<ViewRecord> pseudos(1);
    pseudos[0].name = "p";
    pseudos[0].origin = ViewOrigin::pseudo;
    const ViewSet fine = build_fine_viewset(refs, pseudos);
    ASSERT_EQ(fine.size(), 3u);
    EXPECT_EQ(fine.records[2].name, "p");
    EXPECT_EQ(fine.reference_count(), 2u);
    EXPECT_EQ(fine.pseudo_count(), 1u);

    pseudos[0].origin = ViewOrigin::reference;
    EXPECT_THROW(build_fine_viewset(refs, pseudos), ContractViolation);
    pseudos[0].origin = ViewOrigin::pseudo;
    pseudos[0].object_mask = std::vector<std::uint8_t>{1};
    EXPECT_THROW(build_fine_viewset(refs, pseudos), ContractViolation);
}
