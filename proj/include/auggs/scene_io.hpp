#pragma once

#include "auggs/gaussian.hpp"
#include "auggs/image.hpp"
#include "auggs/losses.hpp"
#include "auggs/pipeline.hpp"
#include "auggs/views.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace auggs {

namespace fs = std::filesystem;

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

namespace fault_injection {
/// Fault injection: the next atomic writes stop after `bytes` bytes and throw IoError,
/// as if the write had failed midway. std::nullopt disables it.
void interrupt_writes_after(std::optional<std::size_t> bytes);
} // namespace fault_injection

/// 8-bit quantization: floor(v * 255 + 0.5), clamped to [0, 255].
std::uint8_t quantize_byte(double v);

/// RGB image as 8-bit PNG.
void save_image(const Image& image, const fs::path& path);
/// Any PNG; gray and palette inputs expand to RGB, alpha is removed.
Image load_image(const fs::path& path);
/// Single-channel PNG: 255 where the flag is set, 0 elsewhere.
void save_mask(const std::vector<std::uint8_t>& mask, int width, int height, const fs::path& path);
/// Pixels > 127 are object.
std::vector<std::uint8_t> load_mask(const fs::path& path, int& width, int& height);

/// "DPTH" + u32 width + u32 height + u32 reserved + float32 values (little endian).
/// Invalid pixels are stored as NaN.
void save_depth(const DepthMap& depth, const fs::path& path);
DepthMap load_depth(const fs::path& path);

/// Binary little-endian PLY in the common splatting layout.
void save_ply(const GaussianCloud& cloud, const fs::path& path);
GaussianCloud load_ply(const fs::path& path);
std::string ply_header(std::size_t count, int sh_degree);

nlohmann::json camera_to_json(const Camera& cam);
/// Throws FormatError on missing fields, InvalidParameter on a non-orthonormal rotation.
Camera camera_from_json(const nlohmann::json& j, double tolerance = 1e-3);

/// Reads root/scene.json and every referenced file. Throws LoadError naming the entry.
Dataset load_dataset(const fs::path& root);
/// Writes images, masks, depth maps and scene.json under root.
void save_dataset(const Dataset& data, const fs::path& root);

nlohmann::json config_to_json(const TrainingConfig& cfg);
/// Fields absent from `j` keep their defaults; unknown keys are rejected.
TrainingConfig config_from_json(const nlohmann::json& j);
TrainingConfig load_config(const fs::path& path);

nlohmann::json report_to_json(const PipelineResult& result, const TrainingConfig& cfg);
void save_report(const PipelineResult& result, const TrainingConfig& cfg, const fs::path& path);

/// report.json, coarse.ply, fine.ply, best_heldout.ply (when present), pseudo/*.png.
void save_pipeline_outputs(const PipelineResult& result, const TrainingConfig& cfg, const fs::path& out_dir);

} // namespace auggs
