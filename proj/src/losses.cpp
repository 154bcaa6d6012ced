#include "auggs/losses.hpp"

#include "auggs/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace auggs {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ContractViolation(std::string(what) + ": image shapes differ (" + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                                std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                                std::to_string(b.channels) + ")");
    }
}

using Kernel = std::array<double, 2 * kSsimRadius + 1>;

const Kernel& ssim_kernel() {
    static const Kernel k = [] {
        Kernel out{};
        double sum = 0.0;
        for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
            out[i + kSsimRadius] = std::exp(-(i * i) / (2.0 * kSsimSigma * kSsimSigma));
            sum += out[i + kSsimRadius];
        }
        for (double& v : out) {
            v /= sum;
        }
        return out;
    }();
    return k;
}

/// Single-channel plane with a truncated separable Gaussian filter.
class Plane {
public:
    Plane(int w, int h) : w_(w), h_(h), v_(static_cast<std::size_t>(w) * h, 0.0) {}
    double& operator()(int x, int y) { return v_[static_cast<std::size_t>(y) * w_ + x]; }
    double operator()(int x, int y) const { return v_[static_cast<std::size_t>(y) * w_ + x]; }

    /// out(p) = sum over in-bounds q of k(qx-px) k(qy-py) in(q).
    Plane filtered() const {
        const Kernel& k = ssim_kernel();
        Plane tmp(w_, h_), out(w_, h_);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                double s = 0.0;
                for (int d = -kSsimRadius; d <= kSsimRadius; ++d) {
                    const int xx = x + d;
                    if (xx >= 0 && xx < w_) {
                        s += k[d + kSsimRadius] * (*this)(xx, y);
                    }
                }
                tmp(x, y) = s;
            }
        }
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                double s = 0.0;
                for (int d = -kSsimRadius; d <= kSsimRadius; ++d) {
                    const int yy = y + d;
                    if (yy >= 0 && yy < h_) {
                        s += k[d + kSsimRadius] * tmp(x, yy);
                    }
                }
                out(x, y) = s;
            }
        }
        return out;
    }

private:
    int w_, h_;
    std::vector<double> v_;
};

/// Total in-bounds window mass along one axis at coordinate i.
std::vector<double> window_mass(int n) {
    const Kernel& k = ssim_kernel();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int d = -kSsimRadius; d <= kSsimRadius; ++d) {
            if (i + d >= 0 && i + d < n) {
                out[static_cast<std::size_t>(i)] += k[d + kSsimRadius];
            }
        }
    }
    return out;
}

/// Mean SSIM and, if requested, d(mean SSIM)/dx.
double ssim_impl(const Image& x, const Image& ref, Image* grad) {
    const int w = x.width, h = x.height, nc = x.channels;
    const auto mass_x = window_mass(w);
    const auto mass_y = window_mass(h);
    const double count = static_cast<double>(x.pixel_count()) * nc;
    double total = 0.0;
    if (grad) {
        *grad = Image(w, h, nc);
    }

    for (int c = 0; c < nc; ++c) {
        Plane px(w, h), py(w, h), pxx(w, h), pyy(w, h), pxy(w, h);
        for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) {
                const double a = x.at(xx, yy, c), b = ref.at(xx, yy, c);
                px(xx, yy) = a;
                py(xx, yy) = b;
                pxx(xx, yy) = a * a;
                pyy(xx, yy) = b * b;
                pxy(xx, yy) = a * b;
            }
        }
        const Plane fx = px.filtered(), fy = py.filtered(), fxx = pxx.filtered(), fyy = pyy.filtered(),
                    fxy = pxy.filtered();
        Plane h_mu(w, h), h_xx(w, h), h_xy(w, h);
        for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) {
                const double z = mass_x[static_cast<std::size_t>(xx)] * mass_y[static_cast<std::size_t>(yy)];
                const double mx = fx(xx, yy) / z, my = fy(xx, yy) / z;
                const double exx = fxx(xx, yy) / z, eyy = fyy(xx, yy) / z, exy = fxy(xx, yy) / z;
                const double a1 = 2.0 * mx * my + kSsimC1;
                const double a2 = 2.0 * (exy - mx * my) + kSsimC2;
                const double b1 = mx * mx + my * my + kSsimC1;
                const double b2 = (exx - mx * mx) + (eyy - my * my) + kSsimC2;
                const double s = (a1 * a2) / (b1 * b2);
                total += s;
                if (grad) {
                    const double ds = 1.0 / count;
                    const double ds_dmu = 2.0 * my * (a2 - a1) / (b1 * b2) - 2.0 * mx * s * (1.0 / b1 - 1.0 / b2);
                    const double ds_dexx = -s / b2;
                    const double ds_dexy = 2.0 * a1 / (b1 * b2);
                    h_mu(xx, yy) = ds * ds_dmu / z;
                    h_xx(xx, yy) = ds * ds_dexx / z;
                    h_xy(xx, yy) = ds * ds_dexy / z;
                }
            }
        }
        if (grad) {
            // The kernel is symmetric, so the adjoint of the filter is the filter itself.
            const Plane g_mu = h_mu.filtered(), g_xx = h_xx.filtered(), g_xy = h_xy.filtered();
            for (int yy = 0; yy < h; ++yy) {
                for (int xx = 0; xx < w; ++xx) {
                    grad->at(xx, yy, c) =
                        g_mu(xx, yy) + 2.0 * x.at(xx, yy, c) * g_xx(xx, yy) + ref.at(xx, yy, c) * g_xy(xx, yy);
                }
            }
        }
    }
    return total / count;
}

struct Normalized {
    std::vector<double> values;
    std::vector<double> median_weight; // d median / d value_i
    double median = 0.0;
    double scale = 0.0;
    bool floored = false;
};

/// Normalizes `values` (already restricted to the pixel set of interest).
Normalized normalize_values(const std::vector<double>& values) {
    const std::size_t m = values.size();
    Normalized out;
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    out.median_weight.assign(m, 0.0);
    if (m % 2 == 1) {
        out.median = values[idx[m / 2]];
        out.median_weight[idx[m / 2]] = 1.0;
    } else {
        out.median = 0.5 * (values[idx[m / 2 - 1]] + values[idx[m / 2]]);
        out.median_weight[idx[m / 2 - 1]] = 0.5;
        out.median_weight[idx[m / 2]] = 0.5;
    }
    double dev = 0.0;
    for (double v : values) {
        dev += std::abs(v - out.median);
    }
    out.scale = dev / static_cast<double>(m);
    out.floored = out.scale < kDepthScaleFloor;
    const double denom = out.floored ? kDepthScaleFloor : out.scale;
    out.values.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.values[i] = (values[i] - out.median) / denom;
    }
    return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

std::size_t DepthMap::valid_count() const {
    return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; }));
}

LossResult loss_l1(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "loss_l1");
    LossResult out;
    out.grad = Image(x.width, x.height, x.channels);
    const double n = static_cast<double>(x.data.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = x.data[i] - ref.data[i];
        sum += std::abs(d);
        out.grad.data[i] = sign(d) / n;
    }
    out.value = sum / n;
    return out;
}

LossResult loss_dssim(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "loss_dssim");
    LossResult out;
    Image dssim;
    out.value = 1.0 - ssim_impl(x, ref, &dssim);
    out.grad = std::move(dssim);
    for (double& v : out.grad.data) {
        v = -v;
    }
    return out;
}

double ssim_metric(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "ssim_metric");
    return ssim_impl(x, ref, nullptr);
}

double psnr(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = x.data[i] - ref.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(x.data.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / mse);
}

DepthMap normalize_depth(const DepthMap& d) {
    std::vector<double> vals;
    for (std::size_t p = 0; p < d.valid.size(); ++p) {
        if (d.valid[p]) {
            vals.push_back(d.values.data[p]);
        }
    }
    if (vals.empty()) {
        throw EmptyDepthError("depth map has no valid pixels");
    }
    const Normalized n = normalize_values(vals);
    DepthMap out(Image(d.width(), d.height(), 1), d.valid);
    std::size_t k = 0;
    for (std::size_t p = 0; p < d.valid.size(); ++p) {
        if (d.valid[p]) {
            out.values.data[p] = n.values[k++];
        }
    }
    return out;
}

LossResult loss_depth(const DepthMap& rendered, const DepthMap& mono) {
    if (!rendered.values.same_shape(mono.values) || rendered.values.channels != 1 ||
        rendered.valid.size() != rendered.values.pixel_count() || mono.valid.size() != mono.values.pixel_count()) {
        throw ContractViolation("loss_depth: depth maps must share an H x W shape");
    }
    LossResult out;
    out.grad = Image(rendered.width(), rendered.height(), 1);
    std::vector<std::size_t> pixels;
    for (std::size_t p = 0; p < rendered.valid.size(); ++p) {
        if (rendered.valid[p] && mono.valid[p]) {
            pixels.push_back(p);
        }
    }
    if (pixels.empty()) {
        spdlog::warn("depth loss skipped: rendered and reference depth share no valid pixels");
        return out;
    }
    const std::size_t m = pixels.size();
    std::vector<double> r(m), t(m);
    for (std::size_t i = 0; i < m; ++i) {
        r[i] = rendered.values.data[pixels[i]];
        t[i] = mono.values.data[pixels[i]];
    }
    const Normalized nr = normalize_values(r);
    const Normalized nt = normalize_values(t);

    const double inv_m = 1.0 / static_cast<double>(m);
    std::vector<double> g(m);
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = nr.values[i] - nt.values[i];
        loss += std::abs(u);
        g[i] = sign(u) * inv_m;
    }
    out.value = loss * inv_m;
    if (nr.floored) {
        return out;
    }

    // D*_i = (D_i - med) / s with med and s both functions of D.
    const double s = nr.scale;
    double g_sum = 0.0, g_dev = 0.0, sign_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        g_sum += g[i];
        g_dev += g[i] * (r[i] - nr.median);
        sign_sum += sign(r[i] - nr.median);
    }
    for (std::size_t k = 0; k < m; ++k) {
        const double dmed = nr.median_weight[k];
        const double ds = inv_m * (sign(r[k] - nr.median) - sign_sum * dmed);
        out.grad.data[pixels[k]] = g[k] / s - dmed * g_sum / s - g_dev / (s * s) * ds;
    }
    return out;
}

TotalLoss loss_total(const Image& x, const Image& ref, const DepthMap* rendered_depth, const DepthMap* mono_depth,
                     const LossWeights& w) {
    if (w.lambda_ssim < 0.0 || w.lambda_ssim > 1.0 || w.lambda_d < 0.0) {
        throw InvalidParameter("loss weights out of range");
    }
    TotalLoss out;
    const LossResult l1 = loss_l1(x, ref);
    out.l1 = l1.value;
    out.grad_color = Image(x.width, x.height, x.channels);
    for (std::size_t i = 0; i < l1.grad.data.size(); ++i) {
        out.grad_color.data[i] = (1.0 - w.lambda_ssim) * l1.grad.data[i];
    }
    if (w.lambda_ssim > 0.0) {
        const LossResult ds = loss_dssim(x, ref);
        out.dssim = ds.value;
        for (std::size_t i = 0; i < ds.grad.data.size(); ++i) {
            out.grad_color.data[i] += w.lambda_ssim * ds.grad.data[i];
        }
    }
    out.value = (1.0 - w.lambda_ssim) * out.l1 + w.lambda_ssim * out.dssim;
    if (rendered_depth && mono_depth && w.lambda_d > 0.0) {
        const LossResult ld = loss_depth(*rendered_depth, *mono_depth);
        out.depth = ld.value;
        out.value += w.lambda_d * ld.value;
        out.grad_depth = ld.grad;
        for (double& v : out.grad_depth.data) {
            v *= w.lambda_d;
        }
    }
    return out;
}

} // namespace auggs
