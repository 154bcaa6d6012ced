#include "auggs/error.hpp"
#include "auggs/gaussian.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace auggs;

namespace {

// Associated Legendre P_l^m(x) with the Condon-Shortley phase.
double legendre(int l, int m, double x) {
    double pmm = 1.0;
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    for (int i = 1; i <= m; ++i) {
        pmm *= -(2.0 * i - 1.0) * s;
    }
    if (l == m) {
        return pmm;
    }
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) {
        return pmmp1;
    }
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

// Real spherical harmonic from spherical coordinates, index order m = -l..l.
double real_sh(int l, int m, const Vec3& d) {
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    const double phi = std::atan2(d.y(), d.x());
    const int am = std::abs(m);
    const double k = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * factorial(l - am) / factorial(l + am));
    const double p = legendre(l, am, std::cos(theta));
    if (m == 0) {
        return k * p;
    }
    if (m > 0) {
        return std::sqrt(2.0) * k * std::cos(m * phi) * p;
    }
    return std::sqrt(2.0) * k * std::sin(am * phi) * p;
}

Vec3 random_dir(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

} // namespace

TEST(Covariance, IdentityCase) {
    EXPECT_TRUE(covariance_from_params(Vec4(1, 0, 0, 0), Vec3(1, 1, 1)).isApprox(Mat3::Identity(), 1e-15));
}

TEST(Covariance, AxisAligned) {
    const Mat3 expected = Vec3(4, 1, 1).asDiagonal();
    EXPECT_TRUE(covariance_from_params(Vec4(1, 0, 0, 0), Vec3(2, 1, 1)).isApprox(expected, 1e-15));
}

TEST(Covariance, QuarterTurnAboutZ) {
    const double h = std::sqrt(0.5);
    const Mat3 cov = covariance_from_params(Vec4(h, 0, 0, h), Vec3(2, 1, 1));
    const Mat3 expected = Vec3(1, 4, 1).asDiagonal();
    EXPECT_LT((cov - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, RandomDrawsArePsdWithSquaredScaleSpectrum) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 10000; ++t) {
        const Vec4 q(n(rng), n(rng), n(rng), n(rng));
        const Vec3 s(std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng)));
        const Mat3 cov = covariance_from_params(q, s);
        ASSERT_LT((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        ASSERT_GE(eig.eigenvalues().minCoeff(), -1e-9);
        Vec3 want = s.cwiseProduct(s);
        std::sort(want.data(), want.data() + 3);
        ASSERT_LT((eig.eigenvalues() - want).cwiseAbs().maxCoeff(), 1e-9 * want.maxCoeff());
    }
}

TEST(Covariance, NonFiniteInputThrows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(covariance_from_params(Vec4(nan, 0, 0, 0), Vec3(1, 1, 1)), InvalidParameter);
    EXPECT_THROW(covariance_from_params(Vec4(1, 0, 0, 0), Vec3(1, std::numeric_limits<double>::infinity(), 1)),
                 InvalidParameter);
}

TEST(Activations, RoundTrips) {
    for (double p = 1e-6; p < 1.0; p += 0.01) {
        EXPECT_NEAR(sigmoid(logit(p)), p, 1e-9);
    }
    for (double x = 1e-6; x < 1e6; x *= 3.7) {
        EXPECT_NEAR(std::exp(std::log(x)), x, 1e-9 * x);
    }
    EXPECT_GT(sigmoid(-800.0), -1e-300);
    EXPECT_LE(sigmoid(800.0), 1.0);
}

TEST(Gaussian, ActivatedValuesSatisfyInvariants) {
    Gaussian g;
    g.rotation = Vec4(3, -1, 2, 0.5);
    g.log_scale = Vec3(-20, 0, 5);
    g.opacity_logit = 30.0;
    EXPECT_NEAR(g.unit_rotation().norm(), 1.0, 1e-12);
    EXPECT_TRUE((g.scale().array() > 0).all());
    EXPECT_GT(g.opacity(), 0.0);
    EXPECT_LE(g.opacity(), 1.0);
}

TEST(ShColor, ZeroDcGivesHalfGray) {
    const std::vector<Vec3> sh{Vec3::Zero()};
    EXPECT_TRUE(sh_to_rgb(std::span<const Vec3>(sh), 0, Vec3::UnitX()).isApprox(Vec3::Constant(0.5)));
}

TEST(ShColor, SaturatedDcClampsToWhite) {
    const std::vector<Vec3> sh{Vec3::Constant(1.0 / 0.2820947918)};
    EXPECT_TRUE(sh_to_rgb(std::span<const Vec3>(sh), 0, Vec3::UnitZ()).isApprox(Vec3::Ones(), 1e-12));
}

TEST(ShColor, DegreeZeroIgnoresDirection) {
    std::mt19937_64 rng(3);
    const std::vector<Vec3> sh{Vec3(0.3, -0.7, 0.1)};
    const Vec3 ref = sh_to_rgb(std::span<const Vec3>(sh), 0, Vec3::UnitZ());
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(sh_to_rgb(std::span<const Vec3>(sh), 0, random_dir(rng)), ref);
    }
}

TEST(ShColor, DegreeOneAntipodalDifference) {
    std::mt19937_64 rng(4);
    const std::vector<Vec3> sh{Vec3::Zero(), Vec3(0.1, 0.2, -0.1), Vec3(-0.2, 0.05, 0.1), Vec3(0.15, -0.1, 0.2)};
    for (int i = 0; i < 50; ++i) {
        const Vec3 d = random_dir(rng);
        const Vec3 diff = sh_to_rgb(std::span<const Vec3>(sh), 1, d) - sh_to_rgb(std::span<const Vec3>(sh), 1, -d);
        const Vec3 linear = real_sh(1, -1, d) * sh[1] + real_sh(1, 0, d) * sh[2] + real_sh(1, 1, d) * sh[3];
        EXPECT_LT((diff - 2.0 * linear).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(std::abs(real_sh(1, 0, Vec3::UnitZ())), kShC1, 1e-12);
    }
}

TEST(ShColor, MismatchedLengthThrows) {
    const std::vector<Vec3> sh(3, Vec3::Zero());
    EXPECT_THROW(sh_to_rgb(std::span<const Vec3>(sh), 1, Vec3::UnitZ()), InvalidParameter);
    const std::vector<double> flat(5, 0.0);
    EXPECT_THROW(sh_to_rgb(std::span<const double>(flat), 0, Vec3::UnitZ()), InvalidParameter);
}

TEST(ShBasis, MatchesAssociatedLegendreOracle) {
    std::mt19937_64 rng(5);
    std::vector<double> basis(16);
    for (int t = 0; t < 200; ++t) {
        const Vec3 d = random_dir(rng);
        sh_basis(3, d, basis);
        for (int l = 0; l <= 3; ++l) {
            for (int m = -l; m <= l; ++m) {
                EXPECT_NEAR(basis[static_cast<std::size_t>(l * l + l + m)], real_sh(l, m, d), 1e-12)
                    << "l=" << l << " m=" << m;
            }
        }
    }
}

TEST(ShBasis, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(6);
    std::vector<double> plus(16), minus(16);
    std::vector<Vec3> grad(16);
    for (int t = 0; t < 20; ++t) {
        const Vec3 d = random_dir(rng);
        sh_basis_gradient(3, d, grad);
        for (int a = 0; a < 3; ++a) {
            Vec3 dp = d, dm = d;
            dp[a] += 1e-6;
            dm[a] -= 1e-6;
            sh_basis(3, dp, plus);
            sh_basis(3, dm, minus);
            for (std::size_t k = 0; k < 16; ++k) {
                EXPECT_NEAR(grad[k][a], (plus[k] - minus[k]) / 2e-6, 1e-6);
            }
        }
    }
}

TEST(Projection, OnAxisPoint) {
    Camera cam;
    cam.width = cam.height = 64;
    cam.fx = cam.fy = 100;
    cam.cx = 32;
    cam.cy = 30;
    const auto p = project_gaussian(Vec3(0, 0, 5), Mat3::Identity(), cam);
    ASSERT_FALSE(p.culled);
    EXPECT_NEAR(p.mean2d.x(), 32, 1e-12);
    EXPECT_NEAR(p.mean2d.y(), 30, 1e-12);
    EXPECT_DOUBLE_EQ(p.depth, 5);
}

TEST(Projection, PinholeOffset) {
    Camera cam;
    cam.width = cam.height = 64;
    cam.fx = cam.fy = 100;
    cam.cx = cam.cy = 32;
    EXPECT_NEAR(project_gaussian(Vec3(1, 0, 5), Mat3::Identity(), cam).mean2d.x(), 52.0, 1e-12);
}

TEST(Projection, IsotropicCovarianceWithoutDilation) {
    Camera cam;
    cam.width = cam.height = 64;
    cam.fx = 100;
    cam.fy = 80;
    cam.cx = cam.cy = 32;
    const auto p = project_gaussian(Vec3(0, 0, 4), Mat3::Identity(), cam, 0.0);
    EXPECT_NEAR(p.cov2d(0, 0), 625.0, 1e-9);
    EXPECT_NEAR(p.cov2d(1, 1), 400.0, 1e-9);
    EXPECT_NEAR(p.cov2d(0, 1), 0.0, 1e-12);
    const auto dilated = project_gaussian(Vec3(0, 0, 4), Mat3::Identity(), cam);
    EXPECT_NEAR(dilated.cov2d(0, 0), 625.3, 1e-9);
}

TEST(Projection, BehindNearPlaneIsCulled) {
    Camera cam;
    cam.width = cam.height = 8;
    EXPECT_TRUE(project_gaussian(Vec3(0, 0, 0.005), Mat3::Identity(), cam).culled);
    EXPECT_TRUE(project_gaussian(Vec3(0, 0, -3), Mat3::Identity(), cam).culled);
    EXPECT_FALSE(project_gaussian(Vec3(0, 0, 0.02), Mat3::Identity(), cam).culled);
}

TEST(Projection, TranslationEquivariance) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        Camera cam;
        cam.width = cam.height = 64;
        cam.fx = cam.fy = 70;
        cam.cx = cam.cy = 32;
        cam.rotation = rotation_matrix(Vec4(n(rng), n(rng), n(rng), n(rng)).normalized());
        const Vec3 target(n(rng), n(rng), n(rng));
        cam.translation = Vec3(0, 0, 6) - cam.rotation * target;
        const Vec3 offset(10 * n(rng), 10 * n(rng), 10 * n(rng));
        Camera moved = cam;
        moved.translation = cam.translation - cam.rotation * offset;
        const auto a = project_gaussian(target, Mat3::Identity() * 0.1, cam);
        const auto b = project_gaussian(target + offset, Mat3::Identity() * 0.1, moved);
        ASSERT_FALSE(a.culled);
        EXPECT_LT((a.mean2d - b.mean2d).norm(), 1e-9);
    }
}

TEST(Camera, ValidateRejectsBadInputs) {
    Camera cam;
    cam.width = cam.height = 4;
    EXPECT_NO_THROW(cam.validate());
    Camera bad = cam;
    bad.fx = 0;
    EXPECT_THROW(bad.validate(), InvalidParameter);
    bad = cam;
    bad.width = 0;
    EXPECT_THROW(bad.validate(), InvalidParameter);
    bad = cam;
    bad.rotation(0, 1) = 1e-3;
    EXPECT_THROW(bad.validate(), InvalidParameter);
    EXPECT_NO_THROW(bad.validate(1e-2));
    bad = cam;
    bad.rotation = -Mat3::Identity();
    EXPECT_THROW(bad.validate(), InvalidParameter);
}

TEST(Camera, CenterInvertsPose) {
    Camera cam;
    cam.rotation = rotation_matrix(Vec4(0.3, 0.1, -0.5, 0.8).normalized());
    cam.translation = Vec3(1, 2, 3);
    EXPECT_LT(cam.to_camera(cam.center()).norm(), 1e-12);
}

TEST(Cloud, RoundTripsGaussiansAndChecksDegree) {
    GaussianCloud cloud(2);
    Gaussian g;
    g.center = Vec3(1, 2, 3);
    g.sh.assign(9, Vec3::Zero());
    g.sh[4] = Vec3(0.1, 0.2, 0.3);
    cloud.push_back(g);
    const Gaussian back = cloud.get(0);
    EXPECT_EQ(back.center, g.center);
    EXPECT_EQ(back.sh.size(), 9u);
    EXPECT_EQ(back.sh[4], g.sh[4]);
    EXPECT_EQ(cloud.sh(0)[4 * 3 + 1], 0.2);
    EXPECT_THROW(GaussianCloud(4), InvalidParameter);
    EXPECT_THROW(GaussianCloud(-1), InvalidParameter);
    Gaussian wrong;
    EXPECT_THROW(cloud.push_back(wrong), InvalidParameter);
}

TEST(Cloud, CheckFiniteNamesTheGaussian) {
    GaussianCloud cloud(0);
    cloud.push_back(Gaussian{});
    cloud.push_back(Gaussian{});
    cloud.opacity_logit(1) = std::numeric_limits<double>::quiet_NaN();
    try {
        cloud.check_finite();
        FAIL() << "expected InvalidParameter";
    } catch (const InvalidParameter& e) {
        EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
    }
}

TEST(Cloud, KeepRowsPreservesOrder) {
    GaussianCloud cloud(0);
    for (int i = 0; i < 5; ++i) {
        Gaussian g;
        g.center = Vec3(i, 0, 0);
        cloud.push_back(g);
    }
    const std::vector<std::uint8_t> keep{1, 0, 1, 0, 1};
    cloud.keep_rows(keep);
    ASSERT_EQ(cloud.size(), 3u);
    EXPECT_EQ(cloud.center(1).x(), 2.0);
    EXPECT_EQ(cloud.center(2).x(), 4.0);
}
