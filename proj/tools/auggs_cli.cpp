// auggs command-line tool: train, render, evaluate, make-fixture.

#include "auggs/error.hpp"
#include "auggs/fixture.hpp"
#include "auggs/losses.hpp"
#include "auggs/pipeline.hpp"
#include "auggs/rasterizer.hpp"
#include "auggs/scene_io.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

auggs::Vec3 parse_background(const std::vector<double>& v) {
    if (v.size() != 3) {
        throw auggs::InvalidParameter("--background needs three values");
    }
    return {v[0], v[1], v[2]};
}

void print_metrics(const char* split, const std::vector<auggs::ViewMetric>& metrics) {
    double ssim = 0.0;
    for (const auto& m : metrics) {
        std::printf("%-8s %-20s psnr %8.3f  ssim %.4f\n", split, m.name.c_str(), m.psnr, m.ssim);
        ssim += m.ssim;
    }
    if (!metrics.empty()) {
        std::printf("%-8s %-20s psnr %8.3f  ssim %.4f\n", split, "mean", auggs::mean_psnr(metrics),
                    ssim / static_cast<double>(metrics.size()));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-augmented coarse-to-fine Gaussian splatting"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    std::string scene, config_path, out, ply, camera_path;
    std::vector<double> background{1.0, 1.0, 1.0};

    auto* train = app.add_subcommand("train", "Run the coarse and fine stages on a scene");
    train->add_option("--scene", scene, "Scene directory containing scene.json")->required();
    train->add_option("--config", config_path, "JSON training config (defaults when omitted)");
    train->add_option("--out", out, "Output directory")->required();

    auto* render_cmd = app.add_subcommand("render", "Render a PLY cloud from a camera");
    render_cmd->add_option("--ply", ply, "Cloud file")->required();
    render_cmd->add_option("--camera", camera_path, "Camera JSON")->required();
    render_cmd->add_option("--out", out, "Output PNG")->required();
    render_cmd->add_option("--background", background, "Background RGB in [0, 1]")->expected(3);

    std::string split = "all";
    auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM of a cloud against a scene's views");
    evaluate->add_option("--ply", ply, "Cloud file")->required();
    evaluate->add_option("--scene", scene, "Scene directory")->required();
    evaluate->add_option("--split", split, "Views to score")->check(CLI::IsMember({"train", "heldout", "all"}));
    evaluate->add_option("--background", background, "Background RGB in [0, 1]")->expected(3);

    auggs::FixtureConfig fixture_cfg;
    auto* make_fixture = app.add_subcommand("make-fixture", "Write the synthetic ground-truth scene");
    make_fixture->add_option("--out", out, "Output directory")->required();
    make_fixture->add_option("--seed", fixture_cfg.seed, "Scene seed");
    make_fixture->add_option("--gaussians", fixture_cfg.gaussians, "Ground-truth Gaussian count");
    make_fixture->add_option("--train-views", fixture_cfg.train_views, "Train view count");
    make_fixture->add_option("--heldout-views", fixture_cfg.heldout_views, "Held-out view count");
    make_fixture->add_option("--size", fixture_cfg.width, "Image width and height");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*train) {
            const auggs::TrainingConfig cfg =
                config_path.empty() ? auggs::TrainingConfig{} : auggs::load_config(config_path);
            const auggs::Dataset data = auggs::load_dataset(scene);
            const auto result = auggs::run_pipeline(data, cfg, auggs::fs::path(out));
            print_metrics("train", result.fine_train);
            print_metrics("heldout", result.fine_heldout);
        } else if (*render_cmd) {
            const auggs::GaussianCloud cloud = auggs::load_ply(ply);
            const auto camera = auggs::camera_from_json(nlohmann::json::parse(auggs::read_file(camera_path)));
            const auto image = auggs::render(cloud, camera, parse_background(background)).color;
            auggs::save_image(image, out);
        } else if (*evaluate) {
            const auggs::GaussianCloud cloud = auggs::load_ply(ply);
            const auggs::Dataset data = auggs::load_dataset(scene);
            const auggs::Vec3 bg = parse_background(background);
            if (split != "heldout") {
                print_metrics("train", auggs::evaluate_views(cloud, data.train, bg));
            }
            if (split != "train") {
                print_metrics("heldout", auggs::evaluate_views(cloud, data.heldout, bg));
            }
        } else if (*make_fixture) {
            fixture_cfg.height = fixture_cfg.width;
            fixture_cfg.focal = 77.0 * fixture_cfg.width / 64.0;
            auggs::write_fixture(auggs::make_fixture(fixture_cfg), out);
            spdlog::info("fixture written to {}", out);
        }
    } catch (const auggs::InvalidParameter& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const auggs::ContractViolation& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const auggs::LoadError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const auggs::FormatError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const auggs::IoError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return 2;
    }
    return 0;
}
