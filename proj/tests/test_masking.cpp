#include "auggs/error.hpp"
#include "auggs/masking.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

using namespace auggs;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> p(n);
    for (Vec3& v : p) v = Vec3(u(rng), u(rng), u(rng));
    return p;
}

GaussianCloud cloud_at(const std::vector<Vec3>& pts) {
    GaussianCloud cloud(0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Gaussian g;
        g.center = pts[i];
        g.opacity_logit = static_cast<double>(i); // identifies the source row
        cloud.push_back(g);
    }
    return cloud;
}

// Recomputes every distance to the chosen set from scratch at each step.
std::vector<std::size_t> naive_fps(const std::vector<Vec3>& p, std::size_t count, std::size_t start) {
    std::vector<std::size_t> chosen{start};
    while (chosen.size() < count) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            double d = std::numeric_limits<double>::infinity();
            for (const std::size_t c : chosen) d = std::min(d, (p[i] - p[c]).norm());
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        chosen.push_back(best);
    }
    return chosen;
}

std::vector<std::size_t> naive_knn(const std::vector<Vec3>& p, std::size_t c, std::size_t k) {
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return (p[a] - p[c]).norm() < (p[b] - p[c]).norm(); });
    idx.resize(k);
    return idx;
}

} // namespace

TEST(MaskSchedule, Validation) {
    MaskSchedule s;
    EXPECT_NO_THROW(s.validate());
    s.point_ratio = 1.0;
    EXPECT_THROW(s.validate(), InvalidParameter);
    s = {};
    s.patch_ratio = -0.1;
    EXPECT_THROW(s.validate(), InvalidParameter);
    s = {};
    s.point_gap = 0;
    EXPECT_THROW(s.validate(), InvalidParameter);
    s = {};
    s.patch_count = 0;
    EXPECT_THROW(s.validate(), InvalidParameter);
}

TEST(PointMask, RemovesRoundedFractionAndKeepsRowsIntact) {
    std::mt19937_64 rng(1);
    const auto pts = random_points(rng, 1000);
    for (const double ratio : {0.0, 0.05, 0.1234, 0.5}) {
        GaussianCloud cloud = cloud_at(pts);
        const MaskResult r = point_mask(cloud, ratio, rng, 100);
        EXPECT_FALSE(r.skipped);
        EXPECT_EQ(r.removed, static_cast<std::size_t>(std::llround(ratio * 1000)));
        EXPECT_EQ(cloud.size(), 1000 - r.removed);
        std::size_t out = 0;
        for (std::size_t i = 0; i < 1000; ++i) {
            if (r.keep[i]) {
                EXPECT_EQ(cloud.opacity_logit(out), static_cast<double>(i));
                EXPECT_EQ(Vec3(cloud.center(out)), pts[i]);
                ++out;
            }
        }
    }
}

TEST(PointMask, SkipsBelowFloorAndRejectsBadRatio) {
    std::mt19937_64 rng(2);
    GaussianCloud cloud = cloud_at(random_points(rng, 50));
    const MaskResult r = point_mask(cloud, 0.5, rng, 100);
    EXPECT_TRUE(r.skipped);
    EXPECT_EQ(cloud.size(), 50u);
    EXPECT_THROW(point_mask(cloud, 1.0, rng, 0), InvalidParameter);
    EXPECT_THROW(point_mask(cloud, -0.1, rng, 0), InvalidParameter);
}

TEST(PointMask, RemovalIsUniform) {
    std::mt19937_64 rng(3);
    const auto pts = random_points(rng, 200);
    std::vector<int> hits(200, 0);
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        GaussianCloud cloud = cloud_at(pts);
        const auto r = point_mask(cloud, 0.1, rng, 0);
        for (std::size_t i = 0; i < 200; ++i) hits[i] += r.keep[i] ? 0 : 1;
    }
    // Each point is removed with probability 0.1; binomial sd is 19.
    for (int h : hits) {
        EXPECT_GT(h, 400 - 100);
        EXPECT_LT(h, 400 + 100);
    }
}

TEST(Fps, MatchesNaiveOracle) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const auto pts = random_points(rng, 150);
        const std::size_t start = rng() % 150;
        EXPECT_EQ(fps(pts, 20, start), naive_fps(pts, 20, start));
    }
}

TEST(Fps, CollinearExampleAndDistinctCenters) {
    const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(5, 0, 0), Vec3(2, 0, 0), Vec3(4, 0, 0)};
    EXPECT_EQ(fps(p, 3, 0), (std::vector<std::size_t>{0, 2, 3}));
    const auto all = fps(p, 5, 1);
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 5u);
}

TEST(Fps, TiesGoToLowestIndex) {
    const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)};
    EXPECT_EQ(fps(p, 2, 0), (std::vector<std::size_t>{0, 1}));
}

TEST(Fps, RejectsBadArguments) {
    const std::vector<Vec3> p{Vec3::Zero(), Vec3::Ones()};
    EXPECT_THROW(fps(p, 0, 0), ContractViolation);
    EXPECT_THROW(fps(p, 3, 0), ContractViolation);
    EXPECT_THROW(fps(p, 1, 2), ContractViolation);
}

TEST(Knn, MatchesNaiveOracle) {
    std::mt19937_64 rng(5);
    const auto pts = random_points(rng, 300);
    const std::vector<std::size_t> centers{0, 17, 123, 299};
    const auto patches = knn_patch(pts, centers, 25);
    ASSERT_EQ(patches.size(), centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        EXPECT_EQ(patches[i], naive_knn(pts, centers[i], 25));
        EXPECT_EQ(patches[i].front(), centers[i]);
    }
}

TEST(Knn, TiesGoToLowestIndex) {
    const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(5, 5, 5)};
    const std::vector<std::size_t> c{0};
    EXPECT_EQ(knn_patch(p, c, 3)[0], (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Knn, RejectsBadArguments) {
    const std::vector<Vec3> p{Vec3::Zero(), Vec3::Ones()};
    const std::vector<std::size_t> c{0}, bad{2};
    EXPECT_THROW(knn_patch(p, c, 0), ContractViolation);
    EXPECT_THROW(knn_patch(p, c, 3), ContractViolation);
    EXPECT_THROW(knn_patch(p, bad, 1), ContractViolation);
}

TEST(PatchMask, RemovesAUnionOfWholePatches) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 5; ++t) {
        const auto pts = random_points(rng, 400);
        MaskSchedule s;
        s.patch_count = 16;
        s.patch_ratio = 0.25;
        s.min_points = 10;
        std::mt19937_64 probe = rng;
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, 399)(probe);
        GaussianCloud cloud = cloud_at(pts);
        const MaskResult r = patch_mask(cloud, s, rng);
        ASSERT_FALSE(r.skipped);

        const auto centers = naive_fps(pts, 16, start);
        std::vector<std::uint8_t> covered(400, 1);
        std::size_t whole = 0;
        for (const std::size_t c : centers) {
            const auto patch = naive_knn(pts, c, 25);
            const bool removed = std::all_of(patch.begin(), patch.end(), [&](std::size_t i) { return !r.keep[i]; });
            if (removed) {
                ++whole;
                for (const std::size_t i : patch) covered[i] = 0;
            }
        }
        EXPECT_GE(whole, 4u);
        EXPECT_EQ(covered, r.keep);
        EXPECT_EQ(cloud.size(), 400 - r.removed);
        EXPECT_EQ(static_cast<std::size_t>(std::count(r.keep.begin(), r.keep.end(), 0)), r.removed);
    }
}

TEST(PatchMask, ExplicitPatchSizeAndFloor) {
    std::mt19937_64 rng(7);
    const auto pts = random_points(rng, 200);
    MaskSchedule s;
    s.patch_count = 10;
    s.patch_size = 30;
    s.patch_ratio = 0.5;
    s.min_points = 150;
    GaussianCloud cloud = cloud_at(pts);
    const MaskResult r = patch_mask(cloud, s, rng);
    EXPECT_GE(cloud.size(), 150u);
    EXPECT_GT(r.removed, 0u);

    GaussianCloud small = cloud_at(random_points(rng, 20));
    s.min_points = 100;
    EXPECT_TRUE(patch_mask(small, s, rng).skipped);
    EXPECT_EQ(small.size(), 20u);
}

TEST(PatchMask, ZeroRatioRemovesNothing) {
    std::mt19937_64 rng(8);
    GaussianCloud cloud = cloud_at(random_points(rng, 300));
    MaskSchedule s;
    s.patch_ratio = 0.0;
    const MaskResult r = patch_mask(cloud, s, rng);
    EXPECT_EQ(r.removed, 0u);
    EXPECT_EQ(cloud.size(), 300u);
}
