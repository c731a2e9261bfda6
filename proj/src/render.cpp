#include "b3seg/render.hpp"

#include <algorithm>
#include <cmath>

namespace b3seg {

namespace {

constexpr double kNearZ = 1e-4;
constexpr double kMinAlpha = 1e-10;  // skip numerically irrelevant contributions

struct Projected {
    uint32_t index;
    double z;
    double u, v;                      // projected mean, pixel units
    double inv_xx, inv_xy, inv_yy;    // inverse screen covariance
    double opacity;
    int x0, x1, y0, y1;               // inclusive pixel bbox
};

// Projection, depth sort, and tile binning shared by both render modes; the
// per-pixel visitor receives depth-ordered (projected, weight) contributions
// with the transmittance early stop already applied.
template <typename PixelBegin, typename Contribution>
void rasterize(const Scene& scene, const Camera& camera, PixelBegin&& begin_pixel,
               Contribution&& contribute) {
    if (scene.gaussians.empty()) throw ValidationError("cannot render an empty scene");
    const CameraFrame frame = camera_frame(camera);
    const int w = camera.width, h = camera.height;

    Mat3 world_to_cam;
    world_to_cam(0, 0) = frame.right.x;
    world_to_cam(0, 1) = frame.right.y;
    world_to_cam(0, 2) = frame.right.z;
    world_to_cam(1, 0) = frame.down.x;
    world_to_cam(1, 1) = frame.down.y;
    world_to_cam(1, 2) = frame.down.z;
    world_to_cam(2, 0) = frame.forward.x;
    world_to_cam(2, 1) = frame.forward.y;
    world_to_cam(2, 2) = frame.forward.z;

    // Project every splat; cull behind-camera and off-screen footprints.
    std::vector<Projected> visible;
    visible.reserve(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian& g = scene.gaussians[i];
        const Vec3 t = frame.to_camera(g.mean_v(), camera.position);
        if (t.z < kNearZ) continue;

        const double inv_z = 1.0 / t.z;
        const double u = frame.fx * t.x * inv_z + frame.cx;
        const double v = frame.fy * t.y * inv_z + frame.cy;

        // Screen covariance via the local-affine Jacobian: with
        // A = W R diag(s), the camera covariance is A A^T, and C = J A gives
        // cov2d = C C^T (positive semidefinite by construction).
        Mat3 a = world_to_cam * g.rotation();
        const Vec3 s = g.scale_v();
        for (int r = 0; r < 3; ++r) {
            a(r, 0) *= s.x;
            a(r, 1) *= s.y;
            a(r, 2) *= s.z;
        }
        // J = [fx/z, 0, -fx x/z^2; 0, fy/z, -fy y/z^2]
        const double j00 = frame.fx * inv_z;
        const double j02 = -frame.fx * t.x * inv_z * inv_z;
        const double j11 = frame.fy * inv_z;
        const double j12 = -frame.fy * t.y * inv_z * inv_z;
        double c0[3], c1[3];
        for (int c = 0; c < 3; ++c) {
            c0[c] = j00 * a(0, c) + j02 * a(2, c);
            c1[c] = j11 * a(1, c) + j12 * a(2, c);
        }
        Cov2 cov;
        cov.xx = c0[0] * c0[0] + c0[1] * c0[1] + c0[2] * c0[2];
        cov.xy = c0[0] * c1[0] + c0[1] * c1[1] + c0[2] * c1[2];
        cov.yy = c1[0] * c1[0] + c1[1] * c1[1] + c1[2] * c1[2];
        const double det = cov.det();
        if (!(det > 0.0) || !std::isfinite(det)) continue;

        const double radius = kFootprintSigma * std::sqrt(cov.max_eigenvalue());
        const int x0 = std::max(0, int(std::floor(u - radius)));
        const int x1 = std::min(w - 1, int(std::ceil(u + radius)));
        const int y0 = std::max(0, int(std::floor(v - radius)));
        const int y1 = std::min(h - 1, int(std::ceil(v + radius)));
        if (x0 > x1 || y0 > y1) continue;

        const double inv_det = 1.0 / det;
        visible.push_back({uint32_t(i), t.z, u, v, cov.yy * inv_det, -cov.xy * inv_det,
                           cov.xx * inv_det, double(g.opacity), x0, x1, y0, y1});
    }

    // Global front-to-back order; ties broken by index so results are
    // schedule-independent.
    std::sort(visible.begin(), visible.end(), [](const Projected& a, const Projected& b) {
        return a.z < b.z || (a.z == b.z && a.index < b.index);
    });

    // Tile binning preserves the depth order per tile, so the per-pixel walk
    // below composites front to back and can stop as soon as the pixel is
    // saturated instead of touching every covering splat.
    constexpr int kTile = 16;
    const int tiles_x = (w + kTile - 1) / kTile;
    std::vector<std::vector<uint32_t>> tile_lists(
        std::size_t(tiles_x) * ((h + kTile - 1) / kTile));
    for (uint32_t slot = 0; slot < visible.size(); ++slot) {
        const Projected& p = visible[slot];
        for (int ty = p.y0 / kTile; ty <= p.y1 / kTile; ++ty)
            for (int tx = p.x0 / kTile; tx <= p.x1 / kTile; ++tx)
                tile_lists[std::size_t(ty) * tiles_x + tx].push_back(slot);
    }

    const double maha_cut = kFootprintSigma * kFootprintSigma;
    for (int y = 0; y < h; ++y) {
        const auto* tile_row = &tile_lists[std::size_t(y / kTile) * tiles_x];
        for (int x = 0; x < w; ++x) {
            const auto& slots = tile_row[x / kTile];
            if (slots.empty()) continue;
            begin_pixel(x, y);
            double transmittance = 1.0;
            for (const uint32_t slot : slots) {
                const Projected& p = visible[slot];
                if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
                const double dx = (x + 0.5) - p.u;
                const double dy = (y + 0.5) - p.v;
                const double maha =
                    p.inv_xx * dx * dx + 2.0 * p.inv_xy * dx * dy + p.inv_yy * dy * dy;
                if (maha > maha_cut || !(maha >= 0.0)) continue;
                const double alpha = std::min(p.opacity * std::exp(-0.5 * maha), kAlphaClamp);
                if (alpha < kMinAlpha) continue;
                contribute(p.index, alpha * transmittance);
                transmittance *= 1.0 - alpha;
                if (transmittance < kTransmittanceStop) break;
            }
        }
    }
}

}  // namespace

RenderOutput render(const Scene& scene, const Camera& camera) {
    RenderOutput out;
    out.width = camera.width;
    out.height = camera.height;
    out.rgb.assign(std::size_t(camera.width) * camera.height * 3, 0.0);
    out.per_pixel_contribs.resize(std::size_t(camera.width) * camera.height);
    out.responsibilities.assign(scene.size(), 0.0);

    std::size_t pix = 0;
    rasterize(
        scene, camera,
        [&](int x, int y) { pix = std::size_t(y) * camera.width + x; },
        [&](uint32_t index, double weight) {
            out.per_pixel_contribs[pix].push_back({index, weight});
            const Gaussian& g = scene.gaussians[index];
            out.rgb[pix * 3] += g.color[0] * weight;
            out.rgb[pix * 3 + 1] += g.color[1] * weight;
            out.rgb[pix * 3 + 2] += g.color[2] * weight;
        });

    // Responsibilities in fixed pixel-major order.
    for (const auto& contribs : out.per_pixel_contribs)
        for (const PixelContrib& c : contribs) out.responsibilities[c.index] += c.weight;

    return out;
}

std::vector<double> render_responsibilities(const Scene& scene, const Camera& camera) {
    std::vector<double> tau(scene.size(), 0.0);
    rasterize(
        scene, camera, [](int, int) {},
        [&](uint32_t index, double weight) { tau[index] += weight; });
    return tau;
}

EvidenceMap aggregate_evidence(const RenderOutput& out, const Mask& mask,
                               uint32_t target_class) {
    if (mask.width != out.width || mask.height != out.height)
        throw ValidationError("mask dimensions do not match render dimensions");
    if (target_class >= mask.num_classes)
        throw ValidationError("target class out of range");
    const std::size_t n = out.responsibilities.size();
    std::vector<double> e1(n, 0.0), e0(n, 0.0);
    // Same pixel-major traversal as the responsibility sum, so the split
    // re-partitions the identical term sequence.
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const bool in_mask = mask.label(x, y) == target_class;
            for (const PixelContrib& c : out.contribs(x, y)) {
                (in_mask ? e1 : e0)[c.index] += c.weight;
            }
        }
    }
    return EvidenceMap::binary(std::move(e1), std::move(e0));
}

LogitImage prior_logit_from_output(const RenderOutput& out, const PosteriorState& state) {
    if (state.size() != out.responsibilities.size())
        throw ValidationError("posterior length does not match scene size");
    LogitImage img;
    img.width = out.width;
    img.height = out.height;
    img.values.resize(std::size_t(out.width) * out.height);
    for (std::size_t pix = 0; pix < img.values.size(); ++pix) {
        double soft = 0.0;
        for (const PixelContrib& c : out.per_pixel_contribs[pix])
            soft += state.mean_fg(c.index) * c.weight;
        soft = std::clamp(soft, kLogitEps, 1.0 - kLogitEps);
        img.values[pix] = std::log(soft / (1.0 - soft));
    }
    return img;
}

LogitImage render_prior_logit(const Scene& scene, const Camera& camera,
                              const PosteriorState& state) {
    return prior_logit_from_output(render(scene, camera), state);
}

}  // namespace b3seg
