#pragma once

#include "auggs/image.hpp"

#include <cstdint>
#include <vector>

namespace auggs {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr int kSsimRadius = 5;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kDepthScaleFloor = 1e-8;

/// Depth values in an arbitrary affine scale with a per-pixel validity flag.
struct DepthMap {
    Image values; // H x W x 1
    std::vector<std::uint8_t> valid;

    DepthMap() = default;
    /// All pixels valid.
    explicit DepthMap(Image v) : values(std::move(v)), valid(values.pixel_count(), 1) {}
    DepthMap(Image v, std::vector<std::uint8_t> m) : values(std::move(v)), valid(std::move(m)) {}

    int width() const { return values.width; }
    int height() const { return values.height; }
    std::size_t valid_count() const;
};

struct LossWeights {
    double lambda_ssim = 0.2;
    double lambda_d = 0.05;
};

struct LossResult {
    double value = 0.0;
    /// dLoss/dInput, same shape as the (first) input.
    Image grad;
};

/// Mean absolute difference over all channels.
LossResult loss_l1(const Image& x, const Image& ref);

/// 1 - mean SSIM (11x11 Gaussian window, sigma 1.5). Windows are truncated at the
/// border and renormalized over the in-bounds pixels.
LossResult loss_dssim(const Image& x, const Image& ref);

/// Mean SSIM with the same window as loss_dssim.
double ssim_metric(const Image& x, const Image& ref);

/// 10 log10(1 / MSE); +infinity for identical images.
double psnr(const Image& x, const Image& ref);

/// (D - median) / mean|D - median| over valid pixels; invalid pixels stay invalid
/// (value 0). Throws EmptyDepthError with no valid pixels.
DepthMap normalize_depth(const DepthMap& d);

/// Mean |D* - D*_mono| over the pixels valid in both maps, each map normalized over
/// that shared set. Gradient flows into `rendered` only. An empty overlap gives 0.
LossResult loss_depth(const DepthMap& rendered, const DepthMap& mono);

struct TotalLoss {
    double value = 0.0;
    double l1 = 0.0;
    double dssim = 0.0;
    double depth = 0.0;
    Image grad_color;
    /// Empty when the depth term is absent.
    Image grad_depth;
};

/// (1 - lambda_ssim) L1 + lambda_ssim D-SSIM + lambda_d L_depth. The depth term is
/// skipped when either depth pointer is null or lambda_d is zero.
TotalLoss loss_total(const Image& x, const Image& ref, const DepthMap* rendered_depth, const DepthMap* mono_depth,
                     const LossWeights& w);

} // namespace auggs
