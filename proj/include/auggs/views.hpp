#pragma once

#include "auggs/gaussian.hpp"
#include "auggs/image.hpp"
#include "auggs/losses.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace auggs {

enum class ViewOrigin { reference, pseudo };

/// Posed image with optional object mask and depth.
struct ViewRecord {
    std::string name;
    Image image; // H x W x 3 in [0, 1]
    Camera camera;
    std::optional<std::vector<std::uint8_t>> object_mask;
    std::optional<DepthMap> depth;
    ViewOrigin origin = ViewOrigin::reference;

    /// Throws ContractViolation if the image does not match the camera.
    void validate() const;
    /// image * m + background * (1 - m); the plain image when no mask is attached.
    Image composited(const Vec3& background) const;
};

struct ViewSet {
    std::vector<ViewRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    std::size_t reference_count() const;
    std::size_t pseudo_count() const;
    std::vector<Camera> cameras(std::optional<ViewOrigin> origin = std::nullopt) const;
};

/// Training views plus optional held-out views used only for evaluation.
struct Dataset {
    ViewSet train;
    ViewSet heldout;
};

/// Radius of the bounding sphere of the reference camera centers (about their centroid).
double scene_extent(const std::vector<Camera>& cams);
Vec3 camera_centroid(const std::vector<Camera>& cams);

/// Point closest (least squares) to all optical axes; the camera centroid when the
/// axes are nearly parallel.
Vec3 convergence_point(const std::vector<Camera>& cams);

/// Sets the pose of `cam` to sit at `position` looking at `target` with `up` pointing
/// toward the top of the image. Intrinsics are untouched.
void look_at(Camera& cam, const Vec3& position, const Vec3& target, const Vec3& up);

} // namespace auggs
