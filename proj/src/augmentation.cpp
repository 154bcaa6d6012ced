#include "auggs/augmentation.hpp"

#include "auggs/error.hpp"
#include "auggs/parallel.hpp"
#include "auggs/rasterizer.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace auggs {

namespace {

Vec3 camera_up(const Camera& cam) { return -cam.rotation.row(1).transpose(); }

Vec3 any_perpendicular(const Vec3& v) {
    const Vec3 trial = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    return v.cross(trial).normalized();
}

Vec3 slerp(const Vec3& a, const Vec3& b, double t, const Vec3& fallback_axis) {
    const double cos_angle = std::clamp(a.dot(b), -1.0, 1.0);
    const double angle = std::acos(cos_angle);
    if (angle < 1e-9) {
        return a;
    }
    if (std::numbers::pi - angle < 1e-6) {
        Vec3 axis = fallback_axis - a * a.dot(fallback_axis);
        axis = axis.norm() > 1e-9 ? axis.normalized() : any_perpendicular(a);
        return Eigen::AngleAxisd(t * angle, axis) * a;
    }
    const double s = std::sin(angle);
    return (std::sin((1.0 - t) * angle) / s) * a + (std::sin(t * angle) / s) * b;
}

} // namespace

std::vector<ColoredPoint> geometry_augment(const GaussianCloud& coarse) {
    if (coarse.empty()) {
        throw EmptyInitError("geometry augmentation needs a non-empty coarse cloud");
    }
    std::vector<ColoredPoint> out(coarse.size());
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const auto sh = coarse.sh(i);
        out[i].position = coarse.center(i);
        out[i].color = sh_to_rgb(sh.first(3), 0, Vec3::UnitZ());
    }
    return out;
}

Camera interpolate_camera(const Camera& a, const Camera& b, const Vec3& centroid, double t) {
    const Vec3 da = a.center() - centroid;
    const Vec3 db = b.center() - centroid;
    const double ra = da.norm();
    const double rb = db.norm();
    if (!(ra > 0.0) || !(rb > 0.0)) {
        throw ContractViolation("camera coincides with the scene centroid");
    }
    Vec3 up = (1.0 - t) * camera_up(a) + t * camera_up(b);
    if (up.norm() < 1e-9) {
        up = camera_up(a);
    }
    up.normalize();
    const Vec3 dir = slerp(da / ra, db / rb, t, up);
    const Vec3 position = centroid + ((1.0 - t) * ra + t * rb) * dir;

    Camera out = a;
    look_at(out, position, centroid, up);
    return out;
}

std::vector<Camera> sample_novel_cameras(std::span<const Camera> refs, std::size_t n_prime, std::uint64_t seed) {
    if (refs.size() < 2) {
        throw ContractViolation("novel camera sampling needs at least 2 reference cameras");
    }
    if (n_prime == 0) {
        return {};
    }
    const std::vector<Camera> cams(refs.begin(), refs.end());
    const Vec3 centroid = convergence_point(cams);

    Vec3 up = Vec3::Zero();
    for (const auto& c : cams) {
        up += camera_up(c);
    }
    up = up.norm() > 1e-9 ? up.normalized() : Vec3::UnitZ();
    Vec3 e1 = Vec3::Zero();
    for (const auto& c : cams) {
        const Vec3 v = c.center() - centroid;
        e1 = v - up * up.dot(v);
        if (e1.norm() > 1e-9) {
            break;
        }
    }
    e1 = e1.norm() > 1e-9 ? e1.normalized() : any_perpendicular(up);
    const Vec3 e2 = up.cross(e1);

    std::vector<std::size_t> order(cams.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> azimuth(cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const Vec3 v = cams[i].center() - centroid;
        azimuth[i] = std::atan2(v.dot(e2), v.dot(e1));
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return azimuth[x] < azimuth[y]; });

    const std::size_t arcs = cams.size() >= 3 ? cams.size() : 1;
    std::vector<std::size_t> per_arc(arcs, n_prime / arcs);
    std::vector<std::size_t> arc_ids(arcs);
    std::iota(arc_ids.begin(), arc_ids.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(arc_ids.begin(), arc_ids.end(), rng);
    for (std::size_t i = 0; i < n_prime % arcs; ++i) {
        ++per_arc[arc_ids[i]];
    }

    std::vector<Camera> out;
    out.reserve(n_prime);
    for (std::size_t arc = 0; arc < arcs; ++arc) {
        const Camera& a = cams[order[arc]];
        const Camera& b = cams[order[(arc + 1) % cams.size()]];
        const std::size_t m = per_arc[arc];
        for (std::size_t j = 1; j <= m; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(m + 1);
            Camera c = interpolate_camera(a, b, centroid, t);
            const Vec3 pos = c.center();
            const Camera* nearest = &cams.front();
            for (const auto& r : cams) {
                if ((r.center() - pos).norm() < (nearest->center() - pos).norm()) {
                    nearest = &r;
                }
            }
            c.width = nearest->width;
            c.height = nearest->height;
            c.fx = nearest->fx;
            c.fy = nearest->fy;
            c.cx = nearest->cx;
            c.cy = nearest->cy;
            out.push_back(c);
        }
    }
    return out;
}

std::vector<ViewRecord> perceptual_augment(const GaussianCloud& coarse, std::span<const Camera> cams,
                                           const Vec3& background) {
    if (coarse.empty()) {
        throw EmptyInitError("perceptual augmentation needs a non-empty coarse cloud");
    }
    std::vector<ViewRecord> out(cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        ViewRecord& r = out[i];
        r.name = "pseudo_" + std::to_string(i);
        r.camera = cams[i];
        r.origin = ViewOrigin::pseudo;
        r.image = render(coarse, cams[i], background).color;
    }
    return out;
}

ViewSet build_fine_viewset(const ViewSet& refs, std::vector<ViewRecord> pseudos) {
    ViewSet out = refs;
    for (auto& p : pseudos) {
        if (p.origin != ViewOrigin::pseudo || p.object_mask) {
            throw ContractViolation("pseudo view '" + p.name + "' must be tagged pseudo and carry no mask");
        }
        out.records.push_back(std::move(p));
    }
    return out;
}

} // namespace auggs
