#include "auggs/gaussian.hpp"

#include "auggs/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace auggs {

namespace {

constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                             -1.0925484305920792, 0.5462742152960396};
constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                             0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                             -0.5900435899266435};

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_degree(int degree) {
    if (degree < 0 || degree > kMaxShDegree) {
        throw InvalidParameter("sh degree must be in [0, 3], got " + std::to_string(degree));
    }
}

} // namespace

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void Camera::validate(double tolerance) const {
    if (width <= 0 || height <= 0) {
        throw InvalidParameter("camera dimensions must be positive");
    }
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) ||
        !std::isfinite(cy)) {
        throw InvalidParameter("camera focal lengths must be positive and finite");
    }
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw InvalidParameter("camera pose is not finite");
    }
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > tolerance || std::abs(rotation.determinant() - 1.0) > tolerance) {
        throw InvalidParameter("camera rotation is not orthonormal (deviation " + std::to_string(ortho) + ")");
    }
}

ParamTable::ParamTable(int sh_degree, std::size_t rows)
    : sh_degree_(sh_degree), stride_(kSh + 3 * static_cast<std::size_t>(sh_coeff_count(sh_degree))) {
    data_.assign(rows * stride_, 0.0);
}

void ParamTable::append_row(std::span<const double> values) {
    if (values.size() != stride_) {
        throw ContractViolation("row has " + std::to_string(values.size()) + " values, expected " +
                                std::to_string(stride_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
}

void ParamTable::keep_rows(std::span<const std::uint8_t> keep) {
    if (keep.size() != size()) {
        throw ContractViolation("keep mask has " + std::to_string(keep.size()) + " entries for " +
                                std::to_string(size()) + " rows");
    }
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) {
            continue;
        }
        if (out != i) {
            std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(i * stride_), stride_,
                        data_.begin() + static_cast<std::ptrdiff_t>(out * stride_));
        }
        ++out;
    }
    data_.resize(out * stride_);
}

int GaussianCloud::checked_degree(int d) {
    check_degree(d);
    return d;
}

Gaussian GaussianCloud::get(std::size_t i) const {
    Gaussian g;
    g.center = center(i);
    g.rotation = rotation(i);
    g.log_scale = log_scale(i);
    g.opacity_logit = opacity_logit(i);
    const auto coeffs = sh(i);
    g.sh.resize(sh_count());
    for (std::size_t k = 0; k < g.sh.size(); ++k) {
        g.sh[k] = Vec3(coeffs[3 * k], coeffs[3 * k + 1], coeffs[3 * k + 2]);
    }
    return g;
}

void GaussianCloud::set(std::size_t i, const Gaussian& g) {
    if (g.sh.size() != sh_count()) {
        throw InvalidParameter("gaussian has " + std::to_string(g.sh.size()) + " sh coefficients, cloud expects " +
                               std::to_string(sh_count()));
    }
    center(i) = g.center;
    rotation(i) = g.rotation;
    log_scale(i) = g.log_scale;
    opacity_logit(i) = g.opacity_logit;
    auto coeffs = sh(i);
    for (std::size_t k = 0; k < g.sh.size(); ++k) {
        coeffs[3 * k] = g.sh[k].x();
        coeffs[3 * k + 1] = g.sh[k].y();
        coeffs[3 * k + 2] = g.sh[k].z();
    }
}

void GaussianCloud::push_back(const Gaussian& g) {
    if (g.sh.size() != sh_count()) {
        throw InvalidParameter("gaussian has " + std::to_string(g.sh.size()) + " sh coefficients, cloud expects " +
                               std::to_string(sh_count()));
    }
    append_zero_row();
    set(size() - 1, g);
}

void GaussianCloud::check_finite() const {
    for (std::size_t i = 0; i < size(); ++i) {
        if (!all_finite(row(i))) {
            throw InvalidParameter("gaussian " + std::to_string(i) + " has non-finite parameters");
        }
    }
}

Mat3 rotation_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Mat3 covariance_from_params(const Vec4& q, const Vec3& scale) {
    if (!q.allFinite() || !scale.allFinite()) {
        throw InvalidParameter("covariance parameters are not finite");
    }
    const double n = q.norm();
    if (!(n > 0.0)) {
        throw InvalidParameter("rotation quaternion has zero norm");
    }
    const Mat3 m = rotation_matrix(q / n) * scale.asDiagonal();
    return m * m.transpose();
}

void sh_basis(int degree, const Vec3& dir, std::span<double> out) {
    check_degree(degree);
    out[0] = kShC0;
    if (degree < 1) {
        return;
    }
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out[1] = -kShC1 * y;
    out[2] = kShC1 * z;
    out[3] = -kShC1 * x;
    if (degree < 2) {
        return;
    }
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kShC2[0] * x * y;
    out[5] = kShC2[1] * y * z;
    out[6] = kShC2[2] * (2.0 * zz - xx - yy);
    out[7] = kShC2[3] * x * z;
    out[8] = kShC2[4] * (xx - yy);
    if (degree < 3) {
        return;
    }
    out[9] = kShC3[0] * y * (3.0 * xx - yy);
    out[10] = kShC3[1] * x * y * z;
    out[11] = kShC3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kShC3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kShC3[5] * z * (xx - yy);
    out[15] = kShC3[6] * x * (xx - 3.0 * yy);
}

void sh_basis_gradient(int degree, const Vec3& dir, std::span<Vec3> out) {
    check_degree(degree);
    out[0] = Vec3::Zero();
    if (degree < 1) {
        return;
    }
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out[1] = Vec3(0.0, -kShC1, 0.0);
    out[2] = Vec3(0.0, 0.0, kShC1);
    out[3] = Vec3(-kShC1, 0.0, 0.0);
    if (degree < 2) {
        return;
    }
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kShC2[0] * Vec3(y, x, 0.0);
    out[5] = kShC2[1] * Vec3(0.0, z, y);
    out[6] = kShC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
    out[7] = kShC2[3] * Vec3(z, 0.0, x);
    out[8] = kShC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
    if (degree < 3) {
        return;
    }
    out[9] = kShC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
    out[10] = kShC3[1] * Vec3(y * z, x * z, x * y);
    out[11] = kShC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
    out[12] = kShC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kShC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
    out[14] = kShC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
    out[15] = kShC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
}

Vec3 sh_to_rgb(std::span<const double> sh, int degree, const Vec3& view_dir) {
    check_degree(degree);
    const auto count = static_cast<std::size_t>(sh_coeff_count(degree));
    if (sh.size() != 3 * count) {
        throw InvalidParameter("sh has " + std::to_string(sh.size() / 3) + " coefficients, degree " +
                               std::to_string(degree) + " needs " + std::to_string(count));
    }
    double basis[16];
    sh_basis(degree, view_dir, basis);
    Vec3 rgb = Vec3::Constant(0.5);
    for (std::size_t k = 0; k < count; ++k) {
        rgb += basis[k] * Vec3(sh[3 * k], sh[3 * k + 1], sh[3 * k + 2]);
    }
    return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

Vec3 sh_to_rgb(std::span<const Vec3> sh, int degree, const Vec3& view_dir) {
    std::vector<double> flat;
    flat.reserve(sh.size() * 3);
    for (const Vec3& c : sh) {
        flat.insert(flat.end(), {c.x(), c.y(), c.z()});
    }
    return sh_to_rgb(flat, degree, view_dir);
}

ScreenProjection project_gaussian(const Vec3& center, const Mat3& cov3d, const Camera& cam, double dilation,
                                  double near) {
    ScreenProjection out;
    const Vec3 t = cam.to_camera(center);
    if (!(t.z() > near)) {
        return out;
    }
    const double inv_z = 1.0 / t.z();
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z * inv_z,
        0.0, cam.fy * inv_z, -cam.fy * t.y() * inv_z * inv_z;
    const Eigen::Matrix<double, 2, 3> jw = j * cam.rotation;
    out.culled = false;
    out.mean2d = Vec2(cam.cx + cam.fx * t.x() * inv_z, cam.cy + cam.fy * t.y() * inv_z);
    out.cov2d = jw * cov3d * jw.transpose() + dilation * Mat2::Identity();
    out.depth = t.z();
    return out;
}

ScreenProjection project_gaussian(const Gaussian& g, const Camera& cam, double dilation, double near) {
    return project_gaussian(g.center, covariance_from_params(g.rotation, g.scale()), cam, dilation, near);
}

} // namespace auggs
