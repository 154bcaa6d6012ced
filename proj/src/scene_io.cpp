#include "auggs/scene_io.hpp"

#include "auggs/error.hpp"
#include "auggs/png_io.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

namespace auggs {

using nlohmann::json;

namespace {

std::optional<std::size_t> g_interrupt_after;
std::atomic<std::uint64_t> g_temp_counter{0};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
}

void put_f32(std::string& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
double get_f32(const char* p) { return static_cast<double>(std::bit_cast<float>(get_u32(p))); }

std::string png_bytes_of(const Image& image) {
    if (image.channels != 3) {
        throw ContractViolation("save_image expects an RGB image");
    }
    RawPng raw{image.width, image.height, 3, {}};
    raw.pixels.resize(image.data.size());
    std::transform(image.data.begin(), image.data.end(), raw.pixels.begin(), quantize_byte);
    return encode_png(raw);
}

/// JSON number, with +-infinity written as the strings "inf" / "-inf".
json number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw FormatError(std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

/// Copies `patch` over `base`, rejecting keys `base` does not have.
void strict_merge(json& base, const json& patch, const std::string& where) {
    if (!patch.is_object()) {
        throw FormatError("config " + (where.empty() ? std::string("root") : where) + " must be an object");
    }
    for (const auto& [key, value] : patch.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) {
            throw FormatError("unknown config key '" + path + "'");
        }
        if (base[key].is_object()) {
            strict_merge(base[key], value, path);
        } else if (base[key].is_number() != value.is_number() || base[key].is_boolean() != value.is_boolean() ||
                   base[key].is_string() != value.is_string() || base[key].is_array() != value.is_array()) {
            throw FormatError("config key '" + path + "' has the wrong type");
        } else {
            base[key] = value;
        }
    }
}

json metrics_json(const std::vector<ViewMetric>& metrics) {
    json views = json::array();
    double ssim_sum = 0.0;
    for (const auto& m : metrics) {
        views.push_back({{"name", m.name}, {"psnr", number(m.psnr)}, {"ssim", m.ssim}});
        ssim_sum += m.ssim;
    }
    json out = {{"views", views}};
    if (!metrics.empty()) {
        out["mean_psnr"] = mean_psnr(metrics);
        out["mean_ssim"] = ssim_sum / static_cast<double>(metrics.size());
    }
    return out;
}

json stage_json(const StageResult& s) {
    const StageReport& r = s.report;
    json evals = json::array();
    for (const auto& e : r.evals) {
        json je = {{"iteration", e.iteration},
                   {"train_psnr", number(e.train_psnr)},
                   {"train_ssim", e.train_ssim},
                   {"points", e.points},
                   {"wall_ms", e.wall_ms}};
        if (e.heldout_psnr) {
            je["heldout_psnr"] = number(*e.heldout_psnr);
            je["heldout_ssim"] = *e.heldout_ssim;
        }
        evals.push_back(je);
    }
    json events = json::array();
    for (const auto& e : r.events) {
        events.push_back({{"iteration", e.iteration},
                          {"kind", e.kind},
                          {"before", e.before},
                          {"after", e.after},
                          {"cloned", e.cloned},
                          {"split", e.split},
                          {"pruned", e.pruned}});
    }
    json out = {{"stage", r.stage},
                {"iterations", r.iterations},
                {"initial_points", r.initial_points},
                {"final_points", r.final_points},
                {"wall_ms", r.wall_ms},
                {"evals", evals},
                {"events", events},
                {"loss_trace", r.loss_trace}};
    if (s.best_heldout) {
        out["best_heldout"] = {{"iteration", s.best_iteration}, {"psnr", number(s.best_heldout_psnr)}};
    }
    return out;
}

} // namespace

namespace fault_injection {
void interrupt_writes_after(std::optional<std::size_t> bytes) { g_interrupt_after = bytes; }
} // namespace fault_injection

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(g_temp_counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        if (g_interrupt_after && *g_interrupt_after < bytes.size()) {
            out.write(bytes.data(), static_cast<std::streamsize>(*g_interrupt_after));
            out.close();
            fs::remove(tmp, ec);
            throw IoError("write to " + path.string() + " interrupted");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            throw IoError("write to " + path.string() + " failed");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename onto " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

std::uint8_t quantize_byte(double v) {
    const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(q);
}

void save_image(const Image& image, const fs::path& path) { write_file_atomic(path, png_bytes_of(image)); }

Image load_image(const fs::path& path) {
    RawPng raw = decode_png(read_file(path));
    Image img(raw.width, raw.height, 3);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t src = raw.channels == 3 ? p * 3 + c : p;
            img.data[p * 3 + c] = raw.pixels[src] / 255.0;
        }
    }
    return img;
}

void save_mask(const std::vector<std::uint8_t>& mask, int width, int height, const fs::path& path) {
    RawPng raw{width, height, 1, std::vector<std::uint8_t>(mask.size())};
    std::transform(mask.begin(), mask.end(), raw.pixels.begin(), [](std::uint8_t m) { return m ? 255 : 0; });
    write_file_atomic(path, encode_png(raw));
}

std::vector<std::uint8_t> load_mask(const fs::path& path, int& width, int& height) {
    RawPng raw = decode_png(read_file(path));
    if (raw.channels != 1) {
        throw FormatError(path.string() + ": mask must be single-channel");
    }
    width = raw.width;
    height = raw.height;
    std::vector<std::uint8_t> out(raw.pixels.size());
    std::transform(raw.pixels.begin(), raw.pixels.end(), out.begin(), [](std::uint8_t v) { return v > 127 ? 1 : 0; });
    return out;
}

void save_depth(const DepthMap& depth, const fs::path& path) {
    const auto n = depth.values.pixel_count();
    std::string out = "DPTH";
    put_u32(out, static_cast<std::uint32_t>(depth.width()));
    put_u32(out, static_cast<std::uint32_t>(depth.height()));
    put_u32(out, 0);
    for (std::size_t p = 0; p < n; ++p) {
        const bool valid = depth.valid.empty() || depth.valid[p];
        put_f32(out, valid ? depth.values.data[p] : std::numeric_limits<double>::quiet_NaN());
    }
    write_file_atomic(path, out);
}

DepthMap load_depth(const fs::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 16 || bytes.compare(0, 4, "DPTH") != 0) {
        throw FormatError(path.string() + ": not a DPTH file");
    }
    const std::uint32_t w = get_u32(bytes.data() + 4);
    const std::uint32_t h = get_u32(bytes.data() + 8);
    if (w == 0 || h == 0 || bytes.size() != 16 + 4ull * w * h) {
        throw FormatError(path.string() + ": DPTH size does not match " + std::to_string(w) + "x" + std::to_string(h));
    }
    DepthMap d(Image(static_cast<int>(w), static_cast<int>(h), 1), std::vector<std::uint8_t>(std::size_t{w} * h, 0));
    for (std::size_t p = 0; p < d.valid.size(); ++p) {
        const double v = get_f32(bytes.data() + 16 + 4 * p);
        if (std::isfinite(v)) {
            d.values.data[p] = v;
            d.valid[p] = 1;
        }
    }
    return d;
}

std::string ply_header(std::size_t count, int sh_degree) {
    const int rest = 3 * (sh_coeff_count(sh_degree) - 1);
    std::string h = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(count) + "\n";
    for (const char* name : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"}) {
        h += std::string("property float ") + name + "\n";
    }
    for (int i = 0; i < rest; ++i) {
        h += "property float f_rest_" + std::to_string(i) + "\n";
    }
    for (const char* name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
        h += std::string("property float ") + name + "\n";
    }
    return h + "end_header\n";
}

void save_ply(const GaussianCloud& cloud, const fs::path& path) {
    const std::size_t k = cloud.sh_count();
    std::string out = ply_header(cloud.size(), cloud.sh_degree());
    out.reserve(out.size() + cloud.size() * 4 * (14 + 3 * k));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto sh = cloud.sh(i);
        for (int a = 0; a < 3; ++a) {
            put_f32(out, cloud.center(i)[a]);
        }
        for (std::size_t c = 0; c < 3; ++c) {
            put_f32(out, sh[c]);
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t j = 1; j < k; ++j) {
                put_f32(out, sh[j * 3 + c]);
            }
        }
        put_f32(out, cloud.opacity_logit(i));
        for (int a = 0; a < 3; ++a) {
            put_f32(out, cloud.log_scale(i)[a]);
        }
        for (int a = 0; a < 4; ++a) {
            put_f32(out, cloud.rotation(i)[a]);
        }
    }
    write_file_atomic(path, out);
}

GaussianCloud load_ply(const fs::path& path) {
    const std::string bytes = read_file(path);
    const auto end = bytes.find("end_header\n");
    if (bytes.rfind("ply\n", 0) != 0 || end == std::string::npos) {
        throw FormatError(path.string() + ": not a PLY file");
    }
    std::istringstream header(bytes.substr(0, end));
    std::string line;
    std::size_t count = 0;
    bool have_format = false, have_vertex = false;
    std::vector<std::string> props;
    std::getline(header, line);
    while (std::getline(header, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt != "binary_little_endian") {
                throw FormatError(path.string() + ": unsupported PLY format '" + fmt + "'");
            }
            have_format = true;
        } else if (word == "element") {
            std::string name;
            ls >> name >> count;
            if (name != "vertex" || have_vertex || !ls) {
                throw FormatError(path.string() + ": expected a single vertex element");
            }
            have_vertex = true;
        } else if (word == "property") {
            std::string type, name;
            ls >> type >> name;
            if (type != "float") {
                throw FormatError(path.string() + ": property '" + name + "' is not float");
            }
            props.push_back(name);
        } else if (word != "comment" && word != "obj_info" && !word.empty()) {
            throw FormatError(path.string() + ": unexpected header line '" + line + "'");
        }
    }
    if (!have_format || !have_vertex) {
        throw FormatError(path.string() + ": incomplete PLY header");
    }
    // Tolerate the unused normals some writers emit after the position.
    std::size_t skip_normals = 0;
    if (props.size() > 6 && props[3] == "nx" && props[4] == "ny" && props[5] == "nz") {
        skip_normals = 3;
        props.erase(props.begin() + 3, props.begin() + 6);
    }
    const std::size_t rest = props.size() >= 14 ? props.size() - 14 : 0;
    int degree = -1;
    for (int d = 0; d <= kMaxShDegree; ++d) {
        if (rest == static_cast<std::size_t>(3 * (sh_coeff_count(d) - 1))) {
            degree = d;
        }
    }
    if (props.size() < 14 || degree < 0) {
        throw FormatError(path.string() + ": unexpected property count " + std::to_string(props.size()));
    }
    std::istringstream expected(ply_header(0, degree));
    std::vector<std::string> want;
    while (std::getline(expected, line)) {
        if (line.rfind("property float ", 0) == 0) {
            want.push_back(line.substr(15));
        }
    }
    if (props != want) {
        throw FormatError(path.string() + ": property names do not match the splatting layout");
    }
    const std::size_t floats = props.size() + skip_normals;
    const std::size_t body = end + std::string("end_header\n").size();
    if (bytes.size() - body != count * floats * 4) {
        throw FormatError(path.string() + ": body has " + std::to_string(bytes.size() - body) + " bytes, expected " +
                          std::to_string(count * floats * 4));
    }

    GaussianCloud cloud(degree);
    cloud.resize(count);
    const std::size_t k = cloud.sh_count();
    for (std::size_t i = 0; i < count; ++i) {
        const char* p = bytes.data() + body + i * floats * 4;
        auto next = [&p] {
            const double v = get_f32(p);
            p += 4;
            return v;
        };
        for (int a = 0; a < 3; ++a) {
            cloud.center(i)[a] = next();
        }
        p += 4 * skip_normals;
        auto sh = cloud.sh(i);
        for (std::size_t c = 0; c < 3; ++c) {
            sh[c] = next();
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t j = 1; j < k; ++j) {
                sh[j * 3 + c] = next();
            }
        }
        cloud.opacity_logit(i) = next();
        for (int a = 0; a < 3; ++a) {
            cloud.log_scale(i)[a] = next();
        }
        for (int a = 0; a < 4; ++a) {
            cloud.rotation(i)[a] = next();
        }
    }
    return cloud;
}

json camera_to_json(const Camera& cam) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rot.push_back(cam.rotation(r, c));
        }
    }
    return {{"width", cam.width},
            {"height", cam.height},
            {"fx", cam.fx},
            {"fy", cam.fy},
            {"cx", cam.cx},
            {"cy", cam.cy},
            {"rotation", rot},
            {"translation", {cam.translation.x(), cam.translation.y(), cam.translation.z()}},
            {"convention", "world-to-camera"}};
}

Camera camera_from_json(const json& j, double tolerance) {
    if (!j.is_object()) {
        throw FormatError("camera must be an object");
    }
    Camera cam;
    cam.width = required<int>(j, "width");
    cam.height = required<int>(j, "height");
    cam.fx = required<double>(j, "fx");
    cam.fy = required<double>(j, "fy");
    cam.cx = required<double>(j, "cx");
    cam.cy = required<double>(j, "cy");
    const auto rot = required<std::vector<double>>(j, "rotation");
    const auto trans = required<std::vector<double>>(j, "translation");
    if (rot.size() != 9 || trans.size() != 3) {
        throw FormatError("camera rotation needs 9 values and translation 3");
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            cam.rotation(r, c) = rot[static_cast<std::size_t>(r * 3 + c)];
        }
        cam.translation[r] = trans[static_cast<std::size_t>(r)];
    }
    if (j.contains("convention") && j.at("convention") != "world-to-camera") {
        throw FormatError("unsupported camera convention " + j.at("convention").dump());
    }
    cam.validate(tolerance);
    return cam;
}

Dataset load_dataset(const fs::path& root) {
    const fs::path manifest_path = root / "scene.json";
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const std::exception& e) {
        throw LoadError("scene manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("views") || !manifest["views"].is_array()) {
        throw LoadError("scene manifest " + manifest_path.string() + ": missing 'views' array");
    }
    Dataset data;
    std::size_t index = 0;
    for (const auto& entry : manifest["views"]) {
        std::string name = "view " + std::to_string(index++);
        try {
            ViewRecord r;
            const auto image_file = required<std::string>(entry, "image");
            r.name = entry.value("name", fs::path(image_file).stem().string());
            name = "view '" + r.name + "'";
            const auto split = entry.value("split", std::string("train"));
            if (split != "train" && split != "heldout") {
                throw FormatError("split must be 'train' or 'heldout', got '" + split + "'");
            }
            if (!entry.contains("camera")) {
                throw FormatError("missing field 'camera'");
            }
            r.camera = camera_from_json(entry["camera"]);
            r.image = load_image(root / image_file);
            if (entry.contains("mask") && !entry["mask"].is_null()) {
                int w = 0, h = 0;
                r.object_mask = load_mask(root / entry["mask"].get<std::string>(), w, h);
                if (w != r.image.width || h != r.image.height) {
                    throw FormatError("mask is " + std::to_string(w) + "x" + std::to_string(h) + ", image is " +
                                      std::to_string(r.image.width) + "x" + std::to_string(r.image.height));
                }
            }
            if (entry.contains("depth") && !entry["depth"].is_null()) {
                r.depth = load_depth(root / entry["depth"].get<std::string>());
            }
            r.validate();
            (split == "train" ? data.train : data.heldout).records.push_back(std::move(r));
        } catch (const LoadError&) {
            throw;
        } catch (const std::exception& e) {
            throw LoadError(name + " in " + manifest_path.string() + ": " + e.what());
        }
    }
    if (data.train.empty()) {
        throw LoadError("scene manifest " + manifest_path.string() + " has no train views");
    }
    return data;
}

void save_dataset(const Dataset& data, const fs::path& root) {
    json views = json::array();
    auto write = [&](const ViewSet& set, const char* split) {
        for (const auto& r : set.records) {
            r.validate();
            json e = {{"name", r.name}, {"split", split}, {"camera", camera_to_json(r.camera)}};
            const std::string image = "images/" + r.name + ".png";
            save_image(r.image, root / image);
            e["image"] = image;
            if (r.object_mask) {
                const std::string mask = "masks/" + r.name + ".png";
                save_mask(*r.object_mask, r.image.width, r.image.height, root / mask);
                e["mask"] = mask;
            }
            if (r.depth) {
                const std::string depth = "depth/" + r.name + ".dpth";
                save_depth(*r.depth, root / depth);
                e["depth"] = depth;
            }
            views.push_back(e);
        }
    };
    write(data.train, "train");
    write(data.heldout, "heldout");
    write_file_atomic(root / "scene.json", json{{"views", views}}.dump(2) + "\n");
}

json config_to_json(const TrainingConfig& c) {
    return {
        {"coarse_iters", c.coarse_iters},
        {"fine_iters", c.fine_iters},
        {"coarse_sh_degree", c.coarse_sh_degree},
        {"fine_sh_degree", c.fine_sh_degree},
        {"seed", c.seed},
        {"eval_interval", c.eval_interval},
        {"novel_view_factor", c.novel_view_factor},
        {"pseudo_weight", c.pseudo_weight},
        {"background", {c.background.x(), c.background.y(), c.background.z()}},
        {"loss", {{"lambda_ssim", c.loss.lambda_ssim}, {"lambda_d", c.loss.lambda_d}}},
        {"mask",
         {{"point_ratio", c.mask.point_ratio},
          {"point_gap", c.mask.point_gap},
          {"patch_ratio", c.mask.patch_ratio},
          {"patch_gap", c.mask.patch_gap},
          {"patch_count", c.mask.patch_count},
          {"patch_size", c.mask.patch_size},
          {"seed", c.mask.seed},
          {"min_points", c.mask.min_points}}},
        {"densify",
         {{"enabled", c.densify.enabled},
          {"grad_threshold", c.densify.grad_threshold},
          {"prune_opacity", c.densify.prune_opacity},
          {"split_fraction", c.densify.split_fraction},
          {"world_prune_fraction", c.densify.world_prune_fraction},
          {"split_factor", c.densify.split_factor},
          {"interval", c.densify.interval},
          {"start", c.densify.start},
          {"stop_fraction", c.densify.stop_fraction},
          {"opacity_reset_interval", c.densify.opacity_reset_interval},
          {"opacity_ceiling", c.densify.opacity_ceiling}}},
        {"optimizer",
         {{"beta1", c.optimizer.beta1},
          {"beta2", c.optimizer.beta2},
          {"epsilon", c.optimizer.epsilon},
          {"position_lr_init", c.optimizer.position_lr_init},
          {"position_lr_final", c.optimizer.position_lr_final},
          {"sh_lr", c.optimizer.sh_lr},
          {"sh_rest_divisor", c.optimizer.sh_rest_divisor},
          {"opacity_lr", c.optimizer.opacity_lr},
          {"scale_lr", c.optimizer.scale_lr},
          {"rotation_lr", c.optimizer.rotation_lr}}},
        {"init",
         {{"point_count", c.init.point_count},
          {"radius_scale", c.init.radius_scale},
          {"opacity", c.init.opacity},
          {"scale_neighbor", c.init.scale_neighbor},
          {"points_file", c.init.points_file}}},
    };
}

TrainingConfig config_from_json(const json& patch) {
    json j = config_to_json(TrainingConfig{});
    strict_merge(j, patch, "");
    TrainingConfig c;
    try {
        c.coarse_iters = j["coarse_iters"].get<int>();
        c.fine_iters = j["fine_iters"].get<int>();
        c.coarse_sh_degree = j["coarse_sh_degree"].get<int>();
        c.fine_sh_degree = j["fine_sh_degree"].get<int>();
        c.seed = j["seed"].get<std::uint64_t>();
        c.eval_interval = j["eval_interval"].get<int>();
        c.novel_view_factor = j["novel_view_factor"].get<double>();
        c.pseudo_weight = j["pseudo_weight"].get<double>();
        const auto bg = j["background"].get<std::vector<double>>();
        if (bg.size() != 3) {
            throw FormatError("config key 'background' needs 3 values");
        }
        c.background = Vec3(bg[0], bg[1], bg[2]);

        const json& l = j["loss"];
        c.loss.lambda_ssim = l["lambda_ssim"].get<double>();
        c.loss.lambda_d = l["lambda_d"].get<double>();

        const json& m = j["mask"];
        c.mask.point_ratio = m["point_ratio"].get<double>();
        c.mask.point_gap = m["point_gap"].get<int>();
        c.mask.patch_ratio = m["patch_ratio"].get<double>();
        c.mask.patch_gap = m["patch_gap"].get<int>();
        c.mask.patch_count = m["patch_count"].get<int>();
        c.mask.patch_size = m["patch_size"].get<int>();
        c.mask.seed = m["seed"].get<std::uint64_t>();
        c.mask.min_points = m["min_points"].get<std::size_t>();

        const json& d = j["densify"];
        c.densify.enabled = d["enabled"].get<bool>();
        c.densify.grad_threshold = d["grad_threshold"].get<double>();
        c.densify.prune_opacity = d["prune_opacity"].get<double>();
        c.densify.split_fraction = d["split_fraction"].get<double>();
        c.densify.world_prune_fraction = d["world_prune_fraction"].get<double>();
        c.densify.split_factor = d["split_factor"].get<double>();
        c.densify.interval = d["interval"].get<int>();
        c.densify.start = d["start"].get<int>();
        c.densify.stop_fraction = d["stop_fraction"].get<double>();
        c.densify.opacity_reset_interval = d["opacity_reset_interval"].get<int>();
        c.densify.opacity_ceiling = d["opacity_ceiling"].get<double>();

        const json& o = j["optimizer"];
        c.optimizer.beta1 = o["beta1"].get<double>();
        c.optimizer.beta2 = o["beta2"].get<double>();
        c.optimizer.epsilon = o["epsilon"].get<double>();
        c.optimizer.position_lr_init = o["position_lr_init"].get<double>();
        c.optimizer.position_lr_final = o["position_lr_final"].get<double>();
        c.optimizer.sh_lr = o["sh_lr"].get<double>();
        c.optimizer.sh_rest_divisor = o["sh_rest_divisor"].get<double>();
        c.optimizer.opacity_lr = o["opacity_lr"].get<double>();
        c.optimizer.scale_lr = o["scale_lr"].get<double>();
        c.optimizer.rotation_lr = o["rotation_lr"].get<double>();

        const json& i = j["init"];
        c.init.point_count = i["point_count"].get<std::size_t>();
        c.init.radius_scale = i["radius_scale"].get<double>();
        c.init.opacity = i["opacity"].get<double>();
        c.init.scale_neighbor = i["scale_neighbor"].get<int>();
        c.init.points_file = i["points_file"].get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

TrainingConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

json report_to_json(const PipelineResult& r, const TrainingConfig& cfg) {
    json out = {
        {"config", config_to_json(cfg)},
        {"counts",
         {{"reference_views", r.coarse_train.size()},
          {"pseudo_views", r.pseudo_views.size()},
          {"heldout_views", r.coarse_heldout.size()}}},
        {"timings_ms",
         {{"total", r.wall_ms}, {"coarse", r.coarse.report.wall_ms}, {"fine", r.fine.report.wall_ms}}},
        {"stages", {{"coarse", stage_json(r.coarse)}, {"fine", stage_json(r.fine)}}},
        {"final",
         {{"coarse", {{"train", metrics_json(r.coarse_train)}, {"heldout", metrics_json(r.coarse_heldout)}}},
          {"fine", {{"train", metrics_json(r.fine_train)}, {"heldout", metrics_json(r.fine_heldout)}}}}},
    };
    const StageResult* best = nullptr;
    for (const StageResult* s : {&r.coarse, &r.fine}) {
        if (s->best_heldout && (!best || s->best_heldout_psnr > best->best_heldout_psnr)) {
            best = s;
        }
    }
    if (best) {
        out["best_heldout"] = {{"stage", best->report.stage},
                               {"iteration", best->best_iteration},
                               {"psnr", number(best->best_heldout_psnr)},
                               {"file", "best_heldout.ply"}};
    }
    return out;
}

void save_report(const PipelineResult& result, const TrainingConfig& cfg, const fs::path& path) {
    write_file_atomic(path, report_to_json(result, cfg).dump(2) + "\n");
}

void save_pipeline_outputs(const PipelineResult& result, const TrainingConfig& cfg, const fs::path& out_dir) {
    save_ply(result.coarse.cloud, out_dir / "coarse.ply");
    save_ply(result.fine.cloud, out_dir / "fine.ply");
    const StageResult* best = nullptr;
    for (const StageResult* s : {&result.coarse, &result.fine}) {
        if (s->best_heldout && (!best || s->best_heldout_psnr > best->best_heldout_psnr)) {
            best = s;
        }
    }
    if (best) {
        save_ply(*best->best_heldout, out_dir / "best_heldout.ply");
    }
    for (const auto& p : result.pseudo_views) {
        save_image(p.image, out_dir / "pseudo" / (p.name + ".png"));
    }
    save_report(result, cfg, out_dir / "report.json");
    spdlog::info("wrote results to {}", out_dir.string());
}

} // namespace auggs
