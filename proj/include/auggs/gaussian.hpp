#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace auggs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
/// Quaternion stored as (w, x, y, z).
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kNearPlane = 0.01;
/// Added to the projected 2D covariance diagonal (px^2).
inline constexpr double kLowPassDilation = 0.3;
inline constexpr int kMaxShDegree = 3;

inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

double sigmoid(double x);
double logit(double p);

/// Single Gaussian in pre-activation form. `sh` holds one RGB triple per basis function.
struct Gaussian {
    Vec3 center = Vec3::Zero();
    Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    std::vector<Vec3> sh{Vec3::Zero()};

    Vec4 unit_rotation() const { return rotation.normalized(); }
    Vec3 scale() const { return log_scale.array().exp(); }
    double opacity() const { return sigmoid(opacity_logit); }
};

/// Pinhole camera. Pixel centers sit at half-integer coordinates, so (cx, cy) =
/// (width/2, height/2) is the middle of the image. Camera space is +z forward,
/// +y down, +x right.
struct Camera {
    int width = 0;
    int height = 0;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    /// World-to-camera rotation.
    Mat3 rotation = Mat3::Identity();
    /// World-to-camera translation.
    Vec3 translation = Vec3::Zero();

    /// Throws InvalidParameter unless intrinsics are positive and the rotation is
    /// orthonormal within `tolerance`.
    void validate(double tolerance = 1e-6) const;

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
    /// Camera center in world coordinates.
    Vec3 center() const { return -rotation.transpose() * translation; }
};

/// Row-major table of per-Gaussian parameters. One row holds
/// [center(3) | rotation(4) | log_scale(3) | opacity_logit(1) | sh(K*3)].
/// The same layout is reused for gradients and optimizer moments.
class ParamTable {
public:
    static constexpr std::size_t kCenter = 0;
    static constexpr std::size_t kRotation = 3;
    static constexpr std::size_t kLogScale = 7;
    static constexpr std::size_t kOpacity = 10;
    static constexpr std::size_t kSh = 11;

    explicit ParamTable(int sh_degree = kMaxShDegree, std::size_t rows = 0);

    int sh_degree() const { return sh_degree_; }
    std::size_t sh_count() const { return static_cast<std::size_t>(sh_coeff_count(sh_degree_)); }
    std::size_t stride() const { return stride_; }
    std::size_t size() const { return stride_ == 0 ? 0 : data_.size() / stride_; }
    bool empty() const { return data_.empty(); }

    std::span<double> row(std::size_t i) { return {data_.data() + i * stride_, stride_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * stride_, stride_}; }

    Eigen::Map<Vec3> center(std::size_t i) { return Eigen::Map<Vec3>(ptr(i, kCenter)); }
    Eigen::Map<const Vec3> center(std::size_t i) const { return Eigen::Map<const Vec3>(ptr(i, kCenter)); }
    Eigen::Map<Vec4> rotation(std::size_t i) { return Eigen::Map<Vec4>(ptr(i, kRotation)); }
    Eigen::Map<const Vec4> rotation(std::size_t i) const { return Eigen::Map<const Vec4>(ptr(i, kRotation)); }
    Eigen::Map<Vec3> log_scale(std::size_t i) { return Eigen::Map<Vec3>(ptr(i, kLogScale)); }
    Eigen::Map<const Vec3> log_scale(std::size_t i) const { return Eigen::Map<const Vec3>(ptr(i, kLogScale)); }
    double& opacity_logit(std::size_t i) { return *ptr(i, kOpacity); }
    double opacity_logit(std::size_t i) const { return *ptr(i, kOpacity); }
    /// K*3 values, coefficient-major (RGB of coefficient 0, then coefficient 1, ...).
    std::span<double> sh(std::size_t i) { return {ptr(i, kSh), sh_count() * 3}; }
    std::span<const double> sh(std::size_t i) const { return {ptr(i, kSh), sh_count() * 3}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void resize(std::size_t rows) { data_.resize(rows * stride_, 0.0); }
    void append_row(std::span<const double> values);
    void append_zero_row() { data_.resize(data_.size() + stride_, 0.0); }
    /// Retains rows whose flag is nonzero, preserving order.
    void keep_rows(std::span<const std::uint8_t> keep);
    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    bool operator==(const ParamTable& other) const = default;

private:
    double* ptr(std::size_t i, std::size_t off) { return data_.data() + i * stride_ + off; }
    const double* ptr(std::size_t i, std::size_t off) const { return data_.data() + i * stride_ + off; }

    int sh_degree_;
    std::size_t stride_;
    std::vector<double> data_;
};

/// Optimizable set of Gaussians sharing one SH degree.
class GaussianCloud : public ParamTable {
public:
    explicit GaussianCloud(int sh_degree = kMaxShDegree) : ParamTable(checked_degree(sh_degree)) {}

    Gaussian get(std::size_t i) const;
    void set(std::size_t i, const Gaussian& g);
    void push_back(const Gaussian& g);

    /// Throws InvalidParameter naming the first Gaussian with a non-finite value.
    void check_finite() const;

private:
    static int checked_degree(int d);
};

/// Rotation matrix of a unit quaternion (w, x, y, z).
Mat3 rotation_matrix(const Vec4& q);

/// R * diag(scale^2) * R^T. `q` is renormalized.
Mat3 covariance_from_params(const Vec4& q, const Vec3& scale);

/// Real SH basis values Y_k(dir) for k < (degree+1)^2, in the standard splatting order.
void sh_basis(int degree, const Vec3& dir, std::span<double> out);

/// d Y_k / d(x, y, z), treating each basis function as a polynomial in the direction.
void sh_basis_gradient(int degree, const Vec3& dir, std::span<Vec3> out);

/// clamp(0.5 + sum_k sh_k * Y_k(dir), 0, 1). `sh` is K*3 coefficient-major.
Vec3 sh_to_rgb(std::span<const double> sh, int degree, const Vec3& view_dir);
Vec3 sh_to_rgb(std::span<const Vec3> sh, int degree, const Vec3& view_dir);

struct ScreenProjection {
    bool culled = true;
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Zero();
    double depth = 0.0;
};

/// Perspective projection of a 3D Gaussian with covariance `cov3d` (world frame).
ScreenProjection project_gaussian(const Vec3& center, const Mat3& cov3d, const Camera& cam,
                                  double dilation = kLowPassDilation, double near = kNearPlane);
ScreenProjection project_gaussian(const Gaussian& g, const Camera& cam,
                                  double dilation = kLowPassDilation, double near = kNearPlane);

} // namespace auggs
