#include "auggs/error.hpp"
#include "auggs/fixture.hpp"
#include "auggs/losses.hpp"
#include "auggs/pipeline.hpp"
#include "auggs/rasterizer.hpp"
#include "auggs/scene_io.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace auggs;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Image& img) {
    std::vector<py::ssize_t> shape{img.height, img.width};
    if (img.channels > 1) {
        shape.push_back(img.channels);
    }
    Array out(shape);
    std::memcpy(out.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
    return out;
}

Image to_image(const Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) {
        throw ContractViolation("image array must be H x W or H x W x C");
    }
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1);
    std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(double));
    return img;
}

py::dict metrics_dict(const std::vector<ViewMetric>& metrics) {
    py::dict out;
    for (const auto& m : metrics) {
        out[py::str(m.name)] = py::make_tuple(m.psnr, m.ssim);
    }
    return out;
}

TrainingConfig parse_config(const std::optional<std::string>& json) {
    return json ? config_from_json(nlohmann::json::parse(*json)) : TrainingConfig{};
}

} // namespace

PYBIND11_MODULE(_auggs, m) {
    m.doc() = "Sparse-view 3D Gaussian splatting with point masking and view augmentation";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<InvalidParameter>(m, "InvalidParameter", error);
    py::register_exception<ContractViolation>(m, "ContractViolation", error);
    py::register_exception<RenderError>(m, "RenderError", error);
    py::register_exception<FormatError>(m, "FormatError", error);
    py::register_exception<LoadError>(m, "LoadError", error);
    py::register_exception<IoError>(m, "IoError", error);

    py::class_<Camera>(m, "Camera")
        .def(py::init<>())
        .def_static("from_json", [](const std::string& s) { return camera_from_json(nlohmann::json::parse(s)); })
        .def("to_json", [](const Camera& c) { return camera_to_json(c).dump(); })
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def_readwrite("fx", &Camera::fx)
        .def_readwrite("fy", &Camera::fy)
        .def_readwrite("cx", &Camera::cx)
        .def_readwrite("cy", &Camera::cy)
        .def_property_readonly("center", [](const Camera& c) {
            const Vec3 v = c.center();
            return py::make_tuple(v.x(), v.y(), v.z());
        });

    py::class_<GaussianCloud>(m, "GaussianCloud")
        .def(py::init<int>(), py::arg("sh_degree") = kMaxShDegree)
        .def_property_readonly("sh_degree", &GaussianCloud::sh_degree)
        .def("__len__", &GaussianCloud::size)
        .def_property_readonly("params", [](const GaussianCloud& c) {
            Array out({static_cast<py::ssize_t>(c.size()), static_cast<py::ssize_t>(c.stride())});
            std::memcpy(out.mutable_data(), c.data().data(), c.data().size() * sizeof(double));
            return out;
        });

    m.def("load_ply", &load_ply, py::arg("path"));
    m.def("save_ply", &save_ply, py::arg("cloud"), py::arg("path"));

    m.def(
        "render",
        [](const GaussianCloud& cloud, const Camera& cam, std::array<double, 3> bg) {
            const RenderOutput r = render(cloud, cam, Vec3(bg[0], bg[1], bg[2]));
            return py::make_tuple(to_array(r.color), to_array(r.depth), to_array(r.alpha));
        },
        py::arg("cloud"), py::arg("camera"), py::arg("background") = std::array<double, 3>{1.0, 1.0, 1.0},
        "Returns (color H x W x 3, depth H x W, alpha H x W).");

    m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim_metric(to_image(a), to_image(b)); });

    m.def(
        "make_fixture",
        [](const fs::path& out, int size, std::size_t gaussians, std::size_t train_views, std::size_t heldout_views,
           std::uint64_t seed) {
            FixtureConfig cfg;
            cfg.width = cfg.height = size;
            cfg.focal = cfg.focal * size / 64.0;
            cfg.gaussians = gaussians;
            cfg.train_views = train_views;
            cfg.heldout_views = heldout_views;
            cfg.seed = seed;
            write_fixture(make_fixture(cfg), out);
        },
        py::arg("out"), py::arg("size") = 64, py::arg("gaussians") = 20, py::arg("train_views") = 4,
        py::arg("heldout_views") = 4, py::arg("seed") = 7);

    m.def("default_config", [] { return config_to_json(TrainingConfig{}).dump(2); });

    m.def(
        "train",
        [](const fs::path& scene, const fs::path& out, const std::optional<std::string>& config) {
            const TrainingConfig cfg = parse_config(config);
            const Dataset data = load_dataset(scene);
            PipelineResult result;
            {
                py::gil_scoped_release release;
                result = run_pipeline(data, cfg, out);
            }
            py::dict d;
            d["coarse_train"] = metrics_dict(result.coarse_train);
            d["coarse_heldout"] = metrics_dict(result.coarse_heldout);
            d["fine_train"] = metrics_dict(result.fine_train);
            d["fine_heldout"] = metrics_dict(result.fine_heldout);
            d["coarse_points"] = result.coarse.cloud.size();
            d["fine_points"] = result.fine.cloud.size();
            d["wall_ms"] = result.wall_ms;
            return d;
        },
        py::arg("scene"), py::arg("out"), py::arg("config") = py::none(),
        "Runs the coarse and fine stages; `config` is a JSON string of overrides.");

    m.def(
        "evaluate",
        [](const fs::path& ply, const fs::path& scene, const std::string& split, std::array<double, 3> bg) {
            const Dataset data = load_dataset(scene);
            if (split != "train" && split != "heldout") {
                throw InvalidParameter("split must be train or heldout");
            }
            const GaussianCloud cloud = load_ply(ply);
            return metrics_dict(
                evaluate_views(cloud, split == "train" ? data.train : data.heldout, Vec3(bg[0], bg[1], bg[2])));
        },
        py::arg("ply"), py::arg("scene"), py::arg("split") = "heldout",
        py::arg("background") = std::array<double, 3>{1.0, 1.0, 1.0},
        "Maps view name to (psnr, ssim).");
}
