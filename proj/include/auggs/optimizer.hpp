#pragma once

#include "auggs/density.hpp"
#include "auggs/gaussian.hpp"
#include "auggs/rasterizer.hpp"

#include <cstdint>
#include <span>

namespace auggs {

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;
    double position_lr_init = 1.6e-4;
    double position_lr_final = 1.6e-6;
    double sh_lr = 2.5e-3;
    /// Higher-order SH coefficients use sh_lr / sh_rest_divisor.
    double sh_rest_divisor = 20.0;
    double opacity_lr = 5e-2;
    double scale_lr = 5e-3;
    double rotation_lr = 1e-3;

    void validate() const;
};

/// Log-linear interpolation from position_lr_init to position_lr_final over the budget.
double position_lr(const OptimizerConfig& cfg, int iteration, int budget);

/// First and second moments in the parameter layout of the cloud.
struct AdamState {
    ParamTable m;
    ParamTable v;
    std::uint64_t step = 0;

    explicit AdamState(int sh_degree = kMaxShDegree, std::size_t n = 0) : m(sh_degree, n), v(sh_degree, n) {}
    std::size_t size() const { return m.size(); }
    void keep_rows(std::span<const std::uint8_t> keep);
    void remap(const RowRemap& remap);
};

/// One bias-corrected Adam update. Positions move with position_lr(iteration, budget)
/// scaled by `spatial_scale`; other groups use constant step sizes.
void optimizer_step(GaussianCloud& cloud, const GradientBuffer& grads, AdamState& state, const OptimizerConfig& cfg,
                    int iteration, int budget, double spatial_scale = 1.0);

} // namespace auggs
