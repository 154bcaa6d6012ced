#include "auggs/optimizer.hpp"

#include "auggs/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace auggs {

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidParameter("moment decay rates must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw InvalidParameter("optimizer epsilon must be positive");
    }
    for (const double lr : {position_lr_init, position_lr_final, sh_lr, opacity_lr, scale_lr, rotation_lr}) {
        if (!(lr > 0.0) || !std::isfinite(lr)) {
            throw InvalidParameter("step sizes must be positive and finite");
        }
    }
    if (!(sh_rest_divisor > 0.0)) {
        throw InvalidParameter("sh_rest_divisor must be positive");
    }
}

double position_lr(const OptimizerConfig& cfg, int iteration, int budget) {
    const double t = budget > 0 ? std::clamp(static_cast<double>(iteration) / budget, 0.0, 1.0) : 0.0;
    return std::exp((1.0 - t) * std::log(cfg.position_lr_init) + t * std::log(cfg.position_lr_final));
}

void AdamState::keep_rows(std::span<const std::uint8_t> keep) {
    if (keep.size() != size()) {
        throw ContractViolation("optimizer state has " + std::to_string(size()) + " rows, keep mask " +
                                std::to_string(keep.size()));
    }
    m.keep_rows(keep);
    v.keep_rows(keep);
}

void AdamState::remap(const RowRemap& r) {
    apply_remap(m, r);
    apply_remap(v, r);
}

void optimizer_step(GaussianCloud& cloud, const GradientBuffer& grads, AdamState& state, const OptimizerConfig& cfg,
                    int iteration, int budget, double spatial_scale) {
    const std::size_t n = cloud.size();
    if (grads.size() != n || state.size() != n || grads.params.stride() != cloud.stride() ||
        state.m.stride() != cloud.stride()) {
        throw ContractViolation("optimizer_step: cloud has " + std::to_string(n) + " rows, gradients " +
                                std::to_string(grads.size()) + ", state " + std::to_string(state.size()));
    }
    const std::size_t stride = cloud.stride();
    std::vector<double> lr(stride, cfg.sh_lr / cfg.sh_rest_divisor);
    const double pos_lr = position_lr(cfg, iteration, budget) * spatial_scale;
    std::fill_n(lr.begin() + ParamTable::kCenter, 3, pos_lr);
    std::fill_n(lr.begin() + ParamTable::kRotation, 4, cfg.rotation_lr);
    std::fill_n(lr.begin() + ParamTable::kLogScale, 3, cfg.scale_lr);
    lr[ParamTable::kOpacity] = cfg.opacity_lr;
    std::fill_n(lr.begin() + ParamTable::kSh, 3, cfg.sh_lr);

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2_sqrt = std::sqrt(1.0 - std::pow(cfg.beta2, t));

    double* p = cloud.data().data();
    double* m = state.m.data().data();
    double* v = state.v.data().data();
    const double* g = grads.params.data().data();
    for (std::size_t i = 0; i < n * stride; ++i) {
        const double gi = g[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        const double step = lr[i % stride] / bc1;
        p[i] -= step * m[i] / (std::sqrt(v[i]) / bc2_sqrt + cfg.epsilon);
    }
}

} // namespace auggs
