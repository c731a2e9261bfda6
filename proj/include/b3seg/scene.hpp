#pragma once
// Splat scene data model, file I/O, and the labeled synthetic generator.
//
// Covariance is kept factored as scale + unit quaternion (sigma = R diag(s^2) R^T),
// which is positive semidefinite by construction. Fields are f32 so the binary
// format round-trips bit-exactly; all derived math runs in double.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "b3seg/errors.hpp"
#include "b3seg/geometry.hpp"

namespace b3seg {

struct Gaussian {
    std::array<float, 3> mean{0.f, 0.f, 0.f};
    std::array<float, 3> scale{1.f, 1.f, 1.f};   // positive axis lengths
    std::array<float, 4> rot{1.f, 0.f, 0.f, 0.f};  // unit quaternion (w,x,y,z)
    float opacity = 1.f;                          // [0,1]
    std::array<float, 3> color{1.f, 1.f, 1.f};    // RGB in [0,1]
    std::optional<uint32_t> gt_label;

    Vec3 mean_v() const { return {mean[0], mean[1], mean[2]}; }
    Vec3 scale_v() const { return {scale[0], scale[1], scale[2]}; }
    Mat3 rotation() const { return quat_to_mat(rot[0], rot[1], rot[2], rot[3]); }
};

// Throws ValidationError naming the offending field and index.
void validate_gaussian(const Gaussian& g, std::size_t index);

struct Scene {
    std::string id;
    std::vector<Gaussian> gaussians;

    std::size_t size() const { return gaussians.size(); }
    bool has_labels() const {
        return !gaussians.empty() && gaussians.front().gt_label.has_value();
    }
};

struct BoundingSphere {
    Vec3 center;
    double radius = 0.0;
};

// Center = centroid of means, radius = max distance to a mean (>= 1e-6).
BoundingSphere scene_bounding_sphere(const Scene& scene);

enum class SplatFormat { binary_splat, json_splat };

Scene load_scene(const std::string& path, SplatFormat format);
void save_scene(const Scene& scene, const std::string& path, SplatFormat format);

struct SceneSpec {
    uint64_t seed = 0;
    int n_objects = 1;
    int gaussians_per_object = 100;
    int background_count = 400;
    double workspace_extent = 10.0;  // side length of the workspace cube
};

// Deterministic per seed. Objects are isotropic Gaussian clusters with
// gt_label 1..n_objects; background splats carry gt_label 0. Cluster centers
// are resampled until pairwise separation >= 2 * (rms_i + rms_j); bounded
// retries, then GenerationError suggesting a larger extent.
Scene generate_synthetic(const SceneSpec& spec);

}  // namespace b3seg
