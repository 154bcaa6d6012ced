#include "auggs/pipeline.hpp"

#include "auggs/error.hpp"
#include "auggs/rasterizer.hpp"
#include "auggs/scene_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string_view>
#include <unordered_map>

namespace auggs {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream per purpose, so adding draws in one place never shifts another.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : tag) {
        h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    }
    return splitmix64(seed ^ splitmix64(h));
}

/// Distance from each point to its k-th nearest other point, via a uniform grid.
std::vector<double> kth_neighbor_distance(std::span<const ColoredPoint> pts, int k) {
    const std::size_t n = pts.size();
    std::vector<double> out(n, 0.0);
    if (n <= 1) {
        return out;
    }
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);

    Vec3 lo = pts[0].position, hi = pts[0].position;
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p.position);
        hi = hi.cwiseMax(p.position);
    }
    const Vec3 span = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
    const double cell = std::max(std::cbrt(span.prod() / static_cast<double>(n) * 2.0), span.maxCoeff() / 256.0);
    const Eigen::Vector3i dims = ((span / cell).array().floor().cast<int>() + 1).matrix();

    auto cell_of = [&](const Vec3& p) {
        Eigen::Vector3i c = ((p - lo) / cell).array().floor().cast<int>().matrix();
        return c.cwiseMax(Eigen::Vector3i::Zero()).cwiseMin(dims - Eigen::Vector3i::Ones());
    };
    auto key = [&](const Eigen::Vector3i& c) {
        return (static_cast<std::size_t>(c.z()) * dims.y() + c.y()) * dims.x() + c.x();
    };
    std::unordered_map<std::size_t, std::vector<std::uint32_t>> grid;
    for (std::size_t i = 0; i < n; ++i) {
        grid[key(cell_of(pts[i].position))].push_back(static_cast<std::uint32_t>(i));
    }
    const int max_ring = dims.maxCoeff();

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = pts[i].position;
        const Eigen::Vector3i c = cell_of(p);
        std::vector<double> best; // sorted squared distances, at most kk
        for (int ring = 0; ring <= max_ring; ++ring) {
            for (int dz = -ring; dz <= ring; ++dz) {
                for (int dy = -ring; dy <= ring; ++dy) {
                    for (int dx = -ring; dx <= ring; ++dx) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) {
                            continue;
                        }
                        const Eigen::Vector3i q = c + Eigen::Vector3i(dx, dy, dz);
                        if ((q.array() < 0).any() || (q.array() >= dims.array()).any()) {
                            continue;
                        }
                        const auto it = grid.find(key(q));
                        if (it == grid.end()) {
                            continue;
                        }
                        for (const std::uint32_t j : it->second) {
                            if (j == i) {
                                continue;
                            }
                            const double d2 = (pts[j].position - p).squaredNorm();
                            if (best.size() < kk || d2 < best.back()) {
                                best.insert(std::upper_bound(best.begin(), best.end(), d2), d2);
                                if (best.size() > kk) {
                                    best.pop_back();
                                }
                            }
                        }
                    }
                }
            }
            // Points outside the searched block are at least ring * cell away.
            const double reach = ring * cell;
            if (best.size() == kk && best.back() <= reach * reach) {
                break;
            }
        }
        out[i] = std::sqrt(best.back());
    }
    return out;
}

struct PreparedView {
    const ViewRecord* record;
    Image target;
    std::optional<DepthMap> depth;
};

std::vector<PreparedView> prepare(const ViewSet& views, const Vec3& bg) {
    std::vector<PreparedView> out;
    out.reserve(views.size());
    for (const auto& r : views.records) {
        r.validate();
        out.push_back({&r, r.composited(bg), r.depth});
    }
    return out;
}

double mean_of(const std::vector<ViewMetric>& m, double ViewMetric::*field) {
    double s = 0.0;
    for (const auto& v : m) {
        s += std::isinf(v.*field) ? 100.0 : v.*field;
    }
    return m.empty() ? 0.0 : s / static_cast<double>(m.size());
}

ViewSet references_of(const ViewSet& views) {
    ViewSet out;
    for (const auto& r : views.records) {
        if (r.origin == ViewOrigin::reference) {
            out.records.push_back(r);
        }
    }
    return out;
}

} // namespace

void TrainingConfig::validate() const {
    if (coarse_iters < 1 || fine_iters < 0) {
        throw InvalidParameter("coarse_iters must be >= 1 and fine_iters >= 0");
    }
    for (const int d : {coarse_sh_degree, fine_sh_degree}) {
        if (d < 0 || d > kMaxShDegree) {
            throw InvalidParameter("SH degree must lie in [0, 3]");
        }
    }
    if (!(loss.lambda_ssim >= 0.0 && loss.lambda_ssim <= 1.0) || !(loss.lambda_d >= 0.0)) {
        throw InvalidParameter("lambda_ssim must lie in [0, 1] and lambda_d must be >= 0");
    }
    mask.validate();
    optimizer.validate();
    if (densify.interval < 1 || densify.opacity_reset_interval < 1 || !(densify.split_factor > 1.0)) {
        throw InvalidParameter("densify intervals must be >= 1 and split_factor > 1");
    }
    if (!(densify.opacity_ceiling > 0.0 && densify.opacity_ceiling < 1.0)) {
        throw InvalidParameter("opacity ceiling must lie in (0, 1)");
    }
    if (!(init.opacity > 0.0 && init.opacity < 1.0) || init.scale_neighbor < 1 || !(init.radius_scale > 0.0)) {
        throw InvalidParameter("init opacity must lie in (0, 1), scale_neighbor >= 1, radius_scale > 0");
    }
    if (init.points_file.empty() && init.point_count == 0) {
        throw InvalidParameter("init point_count must be >= 1");
    }
    if (eval_interval < 1) {
        throw InvalidParameter("eval_interval must be >= 1");
    }
    if (!(novel_view_factor >= 0.0) || !(pseudo_weight >= 0.0)) {
        throw InvalidParameter("novel_view_factor and pseudo_weight must be >= 0");
    }
    if (!background.allFinite() || (background.array() < 0.0).any() || (background.array() > 1.0).any()) {
        throw InvalidParameter("background must lie in [0, 1]");
    }
}

void quantize_to_float(GaussianCloud& cloud) {
    for (double& v : cloud.data()) {
        v = static_cast<double>(static_cast<float>(v));
    }
}

std::vector<ColoredPoint> initial_points(const ViewSet& refs, const TrainingConfig& cfg) {
    if (!cfg.init.points_file.empty()) {
        return geometry_augment(load_ply(cfg.init.points_file));
    }
    const auto cams = refs.cameras(ViewOrigin::reference);
    const Vec3 center = convergence_point(cams);
    double radius = scene_extent(cams) * cfg.init.radius_scale;
    if (!(radius > 0.0)) {
        radius = cfg.init.radius_scale;
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, "init"));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<ColoredPoint> pts(cfg.init.point_count);
    for (auto& p : pts) {
        Vec3 v;
        do {
            v = Vec3(u(rng), u(rng), u(rng));
        } while (v.squaredNorm() > 1.0);
        p.position = center + radius * v;
    }
    return pts;
}

GaussianCloud init_from_points(std::span<const ColoredPoint> points, int sh_degree, const InitConfig& init) {
    if (points.empty()) {
        throw ContractViolation("cannot initialize Gaussians from an empty point set");
    }
    GaussianCloud cloud(sh_degree);
    cloud.resize(points.size());
    const auto dist = kth_neighbor_distance(points, init.scale_neighbor);
    const double opacity_logit = logit(init.opacity);
    for (std::size_t i = 0; i < points.size(); ++i) {
        cloud.center(i) = points[i].position;
        cloud.rotation(i) = Vec4(1.0, 0.0, 0.0, 0.0);
        cloud.log_scale(i) = Vec3::Constant(std::log(std::max(dist[i], 1e-6)));
        cloud.opacity_logit(i) = opacity_logit;
        auto sh = cloud.sh(i);
        for (int c = 0; c < 3; ++c) {
            sh[static_cast<std::size_t>(c)] = (points[i].color[c] - 0.5) / kShC0;
        }
    }
    cloud.check_finite();
    return cloud;
}

std::vector<ViewMetric> evaluate_views(const GaussianCloud& cloud, const ViewSet& views, const Vec3& background) {
    std::vector<ViewMetric> out;
    out.reserve(views.size());
    for (const auto& r : views.records) {
        const Image rendered = render(cloud, r.camera, background).color;
        const Image target = r.composited(background);
        out.push_back({r.name, psnr(rendered, target), ssim_metric(rendered, target)});
    }
    return out;
}

double mean_psnr(std::span<const ViewMetric> metrics) {
    return mean_of(std::vector<ViewMetric>(metrics.begin(), metrics.end()), &ViewMetric::psnr);
}

StageResult train_stage(const std::string& stage, GaussianCloud cloud, const ViewSet& views, int iters,
                        const TrainingConfig& cfg, const ViewSet* heldout) {
    if (views.empty()) {
        throw ContractViolation(stage + " stage needs at least one view");
    }
    if (iters < 0) {
        throw InvalidParameter("iteration budget must be >= 0");
    }
    const bool coarse = stage == "coarse";
    const auto start_time = Clock::now();
    const auto prepared = prepare(views, cfg.background);
    const ViewSet refs = references_of(views);
    const double extent = std::max(scene_extent(views.cameras(ViewOrigin::reference)), 1e-6);

    std::mt19937_64 view_rng(derive_seed(cfg.seed, stage + "/views"));
    std::mt19937_64 mask_rng(derive_seed(cfg.seed ^ cfg.mask.seed, stage + "/mask"));
    std::mt19937_64 densify_rng(derive_seed(cfg.seed, stage + "/densify"));

    StageResult result;
    result.report.stage = stage;
    result.report.iterations = iters;
    result.report.initial_points = cloud.size();
    result.report.loss_trace.reserve(static_cast<std::size_t>(iters));
    result.report.point_trace.reserve(static_cast<std::size_t>(iters));
    double best_psnr = -std::numeric_limits<double>::infinity();

    auto evaluate = [&](int it) {
        EvalRecord rec;
        rec.iteration = it;
        rec.points = cloud.size();
        const auto train_m = evaluate_views(cloud, refs, cfg.background);
        rec.train_psnr = mean_of(train_m, &ViewMetric::psnr);
        rec.train_ssim = mean_of(train_m, &ViewMetric::ssim);
        if (heldout && !heldout->empty()) {
            const auto held_m = evaluate_views(cloud, *heldout, cfg.background);
            rec.heldout_psnr = mean_of(held_m, &ViewMetric::psnr);
            rec.heldout_ssim = mean_of(held_m, &ViewMetric::ssim);
            if (*rec.heldout_psnr > best_psnr) {
                best_psnr = *rec.heldout_psnr;
                result.best_heldout = cloud;
                quantize_to_float(*result.best_heldout);
                result.best_iteration = it;
                result.best_heldout_psnr = best_psnr;
            }
        }
        rec.wall_ms = elapsed_ms(start_time);
        spdlog::debug("{} it {}: train psnr {:.3f}, {} points", stage, it, rec.train_psnr, rec.points);
        result.report.evals.push_back(rec);
    };

    AdamState state(cloud.sh_degree(), cloud.size());
    DensifyStats stats(cloud.size());
    const int densify_stop = static_cast<int>(std::floor(cfg.densify.stop_fraction * iters));
    std::vector<std::size_t> order(prepared.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    evaluate(0);
    for (int it = 1; it <= iters; ++it) {
        if (cursor == order.size()) {
            std::shuffle(order.begin(), order.end(), view_rng);
            cursor = 0;
        }
        const PreparedView& view = prepared[order[cursor++]];
        const Camera& cam = view.record->camera;

        const RenderOutput out = render(cloud, cam, cfg.background);
        std::optional<DepthMap> rendered_depth;
        if (view.depth && cfg.loss.lambda_d > 0.0) {
            rendered_depth.emplace(out.depth);
        }
        TotalLoss loss = loss_total(out.color, view.target, rendered_depth ? &*rendered_depth : nullptr,
                                    view.depth ? &*view.depth : nullptr, cfg.loss);
        if (view.record->origin == ViewOrigin::pseudo && cfg.pseudo_weight != 1.0) {
            loss.value *= cfg.pseudo_weight;
            for (double& g : loss.grad_color.data) {
                g *= cfg.pseudo_weight;
            }
            for (double& g : loss.grad_depth.data) {
                g *= cfg.pseudo_weight;
            }
        }
        if (!std::isfinite(loss.value)) {
            throw Error(stage + " stage: non-finite loss at iteration " + std::to_string(it) + " on view '" +
                        view.record->name + "'");
        }
        const GradientBuffer grads =
            render_backward(cloud, cam, out, loss.grad_color, loss.grad_depth.data.empty() ? nullptr : &loss.grad_depth);
        accumulate_stats(stats, grads, out);
        optimizer_step(cloud, grads, state, cfg.optimizer, it, iters, extent);

        // Masks run before densification scheduled at the same iteration, and never on the
        // last iteration, where nothing would be trained after the removal.
        const bool mask_open = it < iters;
        const bool point_due = coarse && mask_open && cfg.mask.point_ratio > 0.0 && it % cfg.mask.point_gap == 0;
        const bool patch_due = !coarse && mask_open && cfg.mask.patch_ratio > 0.0 && it % cfg.mask.patch_gap == 0;
        if (point_due || patch_due) {
            const std::size_t before = cloud.size();
            const MaskResult m = point_due ? point_mask(cloud, cfg.mask.point_ratio, mask_rng, cfg.mask.min_points)
                                           : patch_mask(cloud, cfg.mask, mask_rng);
            if (!m.skipped) {
                state.keep_rows(m.keep);
                stats.keep_rows(m.keep);
            }
            result.report.events.push_back(
                {it, point_due ? "point_mask" : "patch_mask", before, cloud.size(), 0, 0, m.removed});
        }
        const bool in_window = it < densify_stop;
        if (cfg.densify.enabled && in_window && it >= cfg.densify.start && it % cfg.densify.interval == 0) {
            const std::size_t before = cloud.size();
            const DensifyResult d = densify_and_prune(cloud, stats, extent, cfg.densify, densify_rng);
            state.remap(d.remap);
            result.report.events.push_back({it, "densify", before, cloud.size(), d.cloned, d.split, d.pruned});
        }
        if (cfg.densify.enabled && in_window && it % cfg.densify.opacity_reset_interval == 0) {
            reset_opacity(cloud, cfg.densify.opacity_ceiling);
            result.report.events.push_back({it, "opacity_reset", cloud.size(), cloud.size(), 0, 0, 0});
        }
        if (cloud.empty()) {
            throw Error(stage + " stage: every Gaussian was removed by iteration " + std::to_string(it));
        }

        result.report.loss_trace.push_back(loss.value);
        result.report.point_trace.push_back(cloud.size());
        if (it % cfg.eval_interval == 0 && it != iters) {
            evaluate(it);
        }
    }
    quantize_to_float(cloud);
    if (iters > 0) {
        evaluate(iters);
    }
    result.report.final_points = cloud.size();
    result.report.wall_ms = elapsed_ms(start_time);
    result.cloud = std::move(cloud);
    spdlog::info("{} stage: {} iterations, {} -> {} points, {:.1f} s", stage, iters, result.report.initial_points,
                 result.report.final_points, result.report.wall_ms / 1000.0);
    return result;
}

StageResult train_coarse(const ViewSet& views, const TrainingConfig& cfg, const ViewSet* heldout) {
    cfg.validate();
    if (views.empty() || views.reference_count() == 0) {
        throw ContractViolation("coarse training needs at least one reference view");
    }
    const auto pts = initial_points(views, cfg);
    return train_stage("coarse", init_from_points(pts, cfg.coarse_sh_degree, cfg.init), views, cfg.coarse_iters, cfg,
                       heldout);
}

StageResult train_fine(std::span<const ColoredPoint> init, const ViewSet& fine_views, const TrainingConfig& cfg,
                       const ViewSet* heldout) {
    cfg.validate();
    if (init.empty()) {
        throw ContractViolation("fine training needs a non-empty initial point set");
    }
    GaussianCloud cloud = init_from_points(init, cfg.fine_sh_degree, cfg.init);
    quantize_to_float(cloud);
    return train_stage("fine", std::move(cloud), fine_views, cfg.fine_iters, cfg, heldout);
}

PipelineResult run_pipeline(const Dataset& data, const TrainingConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir) {
    cfg.validate();
    const auto start_time = Clock::now();
    const ViewSet* heldout = data.heldout.empty() ? nullptr : &data.heldout;

    PipelineResult result;
    result.coarse = train_coarse(data.train, cfg, heldout);

    const auto points = geometry_augment(result.coarse.cloud);
    const auto ref_cams = data.train.cameras(ViewOrigin::reference);
    const auto n_prime = static_cast<std::size_t>(std::llround(cfg.novel_view_factor * ref_cams.size()));
    std::vector<Camera> novel;
    if (n_prime > 0 && ref_cams.size() >= 2) {
        novel = sample_novel_cameras(ref_cams, n_prime, derive_seed(cfg.seed, "novel_views"));
    } else if (n_prime > 0) {
        spdlog::warn("perceptual augmentation skipped: it needs at least 2 reference cameras");
    }
    result.pseudo_views = perceptual_augment(result.coarse.cloud, novel, cfg.background);
    const ViewSet fine_views = build_fine_viewset(data.train, result.pseudo_views);

    result.fine = train_fine(points, fine_views, cfg, heldout);

    const ViewSet refs = references_of(data.train);
    result.coarse_train = evaluate_views(result.coarse.cloud, refs, cfg.background);
    result.fine_train = evaluate_views(result.fine.cloud, refs, cfg.background);
    result.coarse_heldout = evaluate_views(result.coarse.cloud, data.heldout, cfg.background);
    result.fine_heldout = evaluate_views(result.fine.cloud, data.heldout, cfg.background);
    result.wall_ms = elapsed_ms(start_time);

    if (out_dir) {
        save_pipeline_outputs(result, cfg, *out_dir);
    }
    return result;
}

} // namespace auggs
