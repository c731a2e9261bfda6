#pragma once
// Pinhole look-at camera. Square pixels; vertical fov fixes both focals.

#include <cmath>

#include "b3seg/errors.hpp"
#include "b3seg/geometry.hpp"

namespace b3seg {

struct Camera {
    Vec3 position;
    Vec3 look_at;
    Vec3 up{0.0, 0.0, 1.0};
    double vertical_fov = 1.0471975511965976;  // radians
    int width = 128;
    int height = 128;
};

void validate_camera(const Camera& cam);

// Derived view basis and intrinsics. Rows (right, down, forward) form the
// world-to-camera rotation; +z is the view direction, v grows downward.
struct CameraFrame {
    Vec3 right, down, forward;
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;

    Vec3 to_camera(const Vec3& world, const Vec3& cam_pos) const {
        const Vec3 d = world - cam_pos;
        return {right.dot(d), down.dot(d), forward.dot(d)};
    }
};

inline void validate_camera(const Camera& cam) {
    if (cam.width < 1 || cam.height < 1)
        throw ValidationError("camera resolution must be >= 1");
    if (!(cam.vertical_fov > 0.0) || !(cam.vertical_fov < M_PI))
        throw ValidationError("camera fov must be in (0, pi)");
    const Vec3 dir = cam.look_at - cam.position;
    if (dir.norm() < 1e-12)
        throw ValidationError("camera position coincides with look_at");
    const double un = cam.up.norm();
    if (un < 1e-12) throw ValidationError("camera up vector is zero");
    const double sin_angle = dir.normalized().cross(cam.up / un).norm();
    if (sin_angle <= 1e-4)
        throw ValidationError("camera up vector is parallel to the view direction");
}

inline CameraFrame camera_frame(const Camera& cam) {
    validate_camera(cam);
    CameraFrame f;
    f.forward = (cam.look_at - cam.position).normalized();
    f.right = f.forward.cross(cam.up).normalized();
    f.down = f.forward.cross(f.right);
    f.fy = 0.5 * cam.height / std::tan(0.5 * cam.vertical_fov);
    f.fx = f.fy;
    f.cx = 0.5 * cam.width;
    f.cy = 0.5 * cam.height;
    return f;
}

}  // namespace b3seg
