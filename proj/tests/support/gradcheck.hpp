#pragma once

// Finite-difference oracle for render_backward, shared by unit and acceptance tests.

#include "auggs/gaussian.hpp"
#include "auggs/image.hpp"
#include "auggs/rasterizer.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace auggs::testsupport {

struct GradScene {
    GaussianCloud cloud{0};
    Camera cam;
    Vec3 background = Vec3::Zero();
    Image w_color; // upstream dL/dcolor
    Image w_depth; // upstream dL/ddepth
};

inline Camera grad_camera(int size = 16) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = 20.0;
    cam.cx = cam.cy = 0.5 * size;
    return cam;
}

/// Scalar objective sum(w_color * color) + sum(w_depth * depth).
inline double objective(const GradScene& s, const GaussianCloud& cloud) {
    const RenderOutput out = render(cloud, s.cam, s.background);
    double v = 0.0;
    for (std::size_t i = 0; i < out.color.data.size(); ++i) {
        v += s.w_color.data[i] * out.color.data[i];
    }
    for (std::size_t i = 0; i < out.depth.data.size(); ++i) {
        v += s.w_depth.data[i] * out.depth.data[i];
    }
    return v;
}

/// True when no pixel quantity sits within `margin` of a threshold where the
/// rendered image is not differentiable (alpha floor and clip, transmittance cutoff,
/// color clamp, depth ties).
inline bool smooth_enough(const GaussianCloud& cloud, const Camera& cam, double margin) {
    const RenderOutput out = render(cloud, cam, Vec3::Zero());
    for (std::size_t i = 0; i < out.projected.size(); ++i) {
        const auto& p = out.projected[i];
        if (!p.visible) {
            return false;
        }
        for (int c = 0; c < 3; ++c) {
            if (p.color[c] < margin || p.color[c] > 1.0 - margin) {
                return false;
            }
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(p.depth - out.projected[j].depth) < margin) {
                return false;
            }
        }
    }
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const Vec2 pix(x + 0.5, y + 0.5);
            double t = 1.0;
            for (const std::uint32_t g : out.order) {
                const auto& p = out.projected[g];
                const Vec2 d = pix - p.mean2d;
                const double power = 0.5 * (p.conic[0] * d.x() * d.x() + 2.0 * p.conic[1] * d.x() * d.y() +
                                            p.conic[2] * d.y() * d.y());
                const double raw = p.opacity * std::exp(-power);
                if (std::abs(std::log(raw / kAlphaMin)) < margin || std::abs(std::log(raw / kAlphaMax)) < margin) {
                    return false;
                }
                if (raw < kAlphaMin) {
                    continue;
                }
                const double a = std::min(raw, kAlphaMax);
                const double next = t * (1.0 - a);
                if (std::abs(std::log(next / kTransmittanceCutoff)) < margin) {
                    return false;
                }
                if (next < kTransmittanceCutoff) {
                    break;
                }
                t = next;
            }
        }
    }
    return true;
}

/// Random scene of 1..max_gaussians Gaussians in front of a 16x16 camera, resampled
/// until it is smooth_enough.
inline GradScene random_grad_scene(std::mt19937_64& rng, int max_gaussians = 8, double margin = 2e-3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        GradScene s;
        const int degree = static_cast<int>(rng() % 4);
        const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_gaussians));
        s.cloud = GaussianCloud(degree);
        s.cam = grad_camera();
        s.background = Vec3(u(rng), u(rng), u(rng));
        for (int i = 0; i < n; ++i) {
            Gaussian g;
            const double z = 3.0 + 3.0 * u(rng);
            g.center = Vec3((u(rng) - 0.5) * 0.6 * z, (u(rng) - 0.5) * 0.6 * z, z);
            g.rotation = Vec4(normal(rng), normal(rng), normal(rng), normal(rng));
            for (int a = 0; a < 3; ++a) {
                const double sigma_px = 1.0 + 3.0 * u(rng);
                g.log_scale[a] = std::log(sigma_px * z / s.cam.fx);
            }
            g.opacity_logit = logit(0.1 + 0.8 * u(rng));
            g.sh.assign(static_cast<std::size_t>(sh_coeff_count(degree)), Vec3::Zero());
            g.sh[0] = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5) * 1.6;
            for (std::size_t k = 1; k < g.sh.size(); ++k) {
                g.sh[k] = Vec3(normal(rng), normal(rng), normal(rng)) * 0.08;
            }
            s.cloud.push_back(g);
        }
        if (!smooth_enough(s.cloud, s.cam, margin)) {
            continue;
        }
        s.w_color = Image(s.cam.width, s.cam.height, 3);
        s.w_depth = Image(s.cam.width, s.cam.height, 1);
        for (double& w : s.w_color.data) {
            w = 2.0 * u(rng) - 1.0;
        }
        for (double& w : s.w_depth.data) {
            w = 0.2 * (2.0 * u(rng) - 1.0);
        }
        return s;
    }
}

struct GradCheckReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_rel = 0.0;
    std::string first_failure;
};

/// Compares every analytic partial with a central difference of step h.
inline GradCheckReport check_gradients(const GradScene& s, double h = 1e-4, double rel_tol = 1e-2,
                                       double abs_tol = 1e-6) {
    const RenderOutput cache = render(s.cloud, s.cam, s.background);
    const GradientBuffer grads = render_backward(s.cloud, s.cam, cache, s.w_color, &s.w_depth);
    GradCheckReport rep;
    GaussianCloud probe = s.cloud;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        for (std::size_t k = 0; k < probe.stride(); ++k) {
            double& p = probe.row(i)[k];
            const double saved = p;
            p = saved + h;
            const double fp = objective(s, probe);
            p = saved - h;
            const double fm = objective(s, probe);
            p = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = grads.params.row(i)[k];
            const double err = std::abs(an - fd);
            const double scale = std::max(std::abs(an), std::abs(fd));
            ++rep.checked;
            if (err > abs_tol) {
                rep.worst_rel = std::max(rep.worst_rel, err / scale);
            }
            if (err > abs_tol && err > rel_tol * scale) {
                if (rep.failures++ == 0) {
                    rep.first_failure = "gaussian " + std::to_string(i) + " param " + std::to_string(k) +
                                        ": analytic " + std::to_string(an) + " vs fd " + std::to_string(fd);
                }
            }
        }
    }
    return rep;
}

} // namespace auggs::testsupport
