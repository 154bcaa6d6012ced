#pragma once

#include "auggs/augmentation.hpp"
#include "auggs/density.hpp"
#include "auggs/gaussian.hpp"
#include "auggs/losses.hpp"
#include "auggs/masking.hpp"
#include "auggs/optimizer.hpp"
#include "auggs/views.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace auggs {

struct InitConfig {
    /// Random coarse initialization: points drawn uniformly in a sphere about the
    /// reference cameras' convergence point whose radius is scene_extent * radius_scale.
    std::size_t point_count = 10000;
    double radius_scale = 1.0;
    /// Activated opacity of freshly initialized Gaussians.
    double opacity = 0.1;
    /// Isotropic scale = distance to this nearest neighbor.
    int scale_neighbor = 3;
    /// Optional PLY whose centers and DC colors seed the coarse stage instead.
    std::string points_file;
};

struct TrainingConfig {
    int coarse_iters = 5000;
    int fine_iters = 6000;
    int coarse_sh_degree = 3;
    int fine_sh_degree = 3;
    LossWeights loss;
    MaskSchedule mask;
    DensifyConfig densify;
    OptimizerConfig optimizer;
    InitConfig init;
    Vec3 background = Vec3::Ones();
    std::uint64_t seed = 0;
    /// Metrics are recorded every eval_interval iterations and at the end of each stage.
    int eval_interval = 500;
    /// N' = round(novel_view_factor * N).
    double novel_view_factor = 3.0;
    /// Loss weight of pseudo-views relative to reference views.
    double pseudo_weight = 1.0;

    void validate() const;
};

struct EvalRecord {
    int iteration = 0;
    double train_psnr = 0.0;
    double train_ssim = 0.0;
    std::optional<double> heldout_psnr;
    std::optional<double> heldout_ssim;
    std::size_t points = 0;
    double wall_ms = 0.0;
};

/// Size-changing or state-resetting event. `after - before` is the point delta.
struct StageEvent {
    int iteration = 0;
    std::string kind; // point_mask, patch_mask, densify, opacity_reset
    std::size_t before = 0;
    std::size_t after = 0;
    std::size_t cloned = 0;
    std::size_t split = 0;
    std::size_t pruned = 0;
};

struct StageReport {
    std::string stage;
    int iterations = 0;
    std::size_t initial_points = 0;
    std::size_t final_points = 0;
    std::vector<EvalRecord> evals;
    std::vector<StageEvent> events;
    /// Total loss of every iteration.
    std::vector<double> loss_trace;
    /// Point count after every iteration.
    std::vector<std::size_t> point_trace;
    double wall_ms = 0.0;
};

struct StageResult {
    GaussianCloud cloud;
    StageReport report;
    /// Snapshot with the best mean held-out PSNR among the evaluations, if held-out views exist.
    std::optional<GaussianCloud> best_heldout;
    int best_iteration = 0;
    double best_heldout_psnr = 0.0;
};

/// Random points for the coarse stage (or the points file when configured).
std::vector<ColoredPoint> initial_points(const ViewSet& refs, const TrainingConfig& cfg);

/// Fresh Gaussians at the given points: DC color from the point color, identity
/// rotation, isotropic scale from the k-th nearest neighbor, configured opacity.
GaussianCloud init_from_points(std::span<const ColoredPoint> points, int sh_degree, const InitConfig& init);

/// Optimizes `cloud` for `iters` iterations on `views`. Point masks run when
/// `stage` is "coarse", patch masks when it is "fine".
StageResult train_stage(const std::string& stage, GaussianCloud cloud, const ViewSet& views, int iters,
                        const TrainingConfig& cfg, const ViewSet* heldout = nullptr);

StageResult train_coarse(const ViewSet& views, const TrainingConfig& cfg, const ViewSet* heldout = nullptr);
StageResult train_fine(std::span<const ColoredPoint> init, const ViewSet& fine_views, const TrainingConfig& cfg,
                       const ViewSet* heldout = nullptr);

struct ViewMetric {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// PSNR/SSIM of the cloud's renders against each view (composited over `background`).
std::vector<ViewMetric> evaluate_views(const GaussianCloud& cloud, const ViewSet& views, const Vec3& background);
/// Mean PSNR, with identical images counted as 100 dB.
double mean_psnr(std::span<const ViewMetric> metrics);

struct PipelineResult {
    StageResult coarse;
    StageResult fine;
    std::vector<ViewRecord> pseudo_views;
    std::vector<ViewMetric> coarse_train, coarse_heldout;
    std::vector<ViewMetric> fine_train, fine_heldout;
    double wall_ms = 0.0;
};

/// Coarse training, geometry and perceptual augmentation, fine training. When
/// `out_dir` is given, clouds, pseudo-views and report.json are written there.
PipelineResult run_pipeline(const Dataset& data, const TrainingConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Rounds every parameter to float32, the PLY storage precision.
void quantize_to_float(GaussianCloud& cloud);

} // namespace auggs
