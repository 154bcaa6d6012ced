#include "auggs/views.hpp"

#include "auggs/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace auggs {

void ViewRecord::validate() const {
    if (image.width != camera.width || image.height != camera.height || image.channels != 3) {
        throw ContractViolation("view '" + name + "': image is " + std::to_string(image.width) + "x" +
                                std::to_string(image.height) + "x" + std::to_string(image.channels) +
                                ", camera expects " + std::to_string(camera.width) + "x" +
                                std::to_string(camera.height) + "x3");
    }
    if (object_mask && object_mask->size() != image.pixel_count()) {
        throw ContractViolation("view '" + name + "': mask size does not match image");
    }
    if (depth && (depth->width() != image.width || depth->height() != image.height)) {
        throw ContractViolation("view '" + name + "': depth size does not match image");
    }
}

Image ViewRecord::composited(const Vec3& background) const {
    Image out = image;
    if (!object_mask) {
        return out;
    }
    const auto& mask = *object_mask;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) {
            for (int c = 0; c < 3; ++c) {
                out.data[p * 3 + static_cast<std::size_t>(c)] = background[c];
            }
        }
    }
    return out;
}

std::size_t ViewSet::reference_count() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const ViewRecord& r) {
        return r.origin == ViewOrigin::reference;
    }));
}

std::size_t ViewSet::pseudo_count() const { return records.size() - reference_count(); }

std::vector<Camera> ViewSet::cameras(std::optional<ViewOrigin> origin) const {
    std::vector<Camera> out;
    for (const auto& r : records) {
        if (!origin || r.origin == *origin) {
            out.push_back(r.camera);
        }
    }
    return out;
}

Vec3 camera_centroid(const std::vector<Camera>& cams) {
    if (cams.empty()) {
        throw ContractViolation("no cameras");
    }
    Vec3 c = Vec3::Zero();
    for (const auto& cam : cams) {
        c += cam.center();
    }
    return c / static_cast<double>(cams.size());
}

double scene_extent(const std::vector<Camera>& cams) {
    const Vec3 c = camera_centroid(cams);
    double r = 0.0;
    for (const auto& cam : cams) {
        r = std::max(r, (cam.center() - c).norm());
    }
    return r;
}

Vec3 convergence_point(const std::vector<Camera>& cams) {
    if (cams.empty()) {
        throw ContractViolation("no cameras");
    }
    Mat3 a = Mat3::Zero();
    Vec3 b = Vec3::Zero();
    for (const auto& cam : cams) {
        const Vec3 d = cam.rotation.row(2).transpose().normalized();
        const Mat3 proj = Mat3::Identity() - d * d.transpose();
        a += proj;
        b += proj * cam.center();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
    if (eig.eigenvalues().minCoeff() < 1e-6 * a.trace()) {
        return camera_centroid(cams);
    }
    return a.ldlt().solve(b);
}

void look_at(Camera& cam, const Vec3& position, const Vec3& target, const Vec3& up) {
    const Vec3 z = (target - position).normalized();
    Vec3 x = (-up).cross(z);
    if (x.norm() < 1e-9) {
        const Vec3 trial = std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        x = z.cross(trial);
    }
    x.normalize();
    const Vec3 y = z.cross(x);
    cam.rotation.row(0) = x.transpose();
    cam.rotation.row(1) = y.transpose();
    cam.rotation.row(2) = z.transpose();
    cam.translation = -cam.rotation * position;
}

} // namespace auggs
