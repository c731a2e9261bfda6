#pragma once
// Software splat rasterizer. Front-to-back alpha compositing over a global
// camera-depth sort; per-pixel contribution lists are retained because the
// evidence aggregation needs mask-conditioned splits per pixel.

#include <cstdint>
#include <vector>

#include "b3seg/camera.hpp"
#include "b3seg/posterior.hpp"
#include "b3seg/scene.hpp"

namespace b3seg {

// Rasterizer guards.
constexpr double kAlphaClamp = 0.999;       // projected alpha upper clamp
constexpr double kTransmittanceStop = 1e-4; // stop compositing below this T
constexpr double kFootprintSigma = 3.0;     // screen-space cutoff
constexpr double kLogitEps = 1e-6;          // prior-image clamp before logit

struct Mask {
    int width = 0, height = 0;
    uint32_t num_classes = 2;
    std::vector<uint32_t> labels;  // row-major H x W

    static Mask zeros(int w, int h, uint32_t k = 2) {
        return Mask{w, h, k, std::vector<uint32_t>(std::size_t(w) * h, 0)};
    }
    uint32_t label(int x, int y) const { return labels[std::size_t(y) * width + x]; }
    uint32_t& label(int x, int y) { return labels[std::size_t(y) * width + x]; }
};

struct PixelContrib {
    uint32_t index;   // gaussian index
    double weight;    // alpha_i * T_i at this pixel
};

struct RenderOutput {
    int width = 0, height = 0;
    std::vector<double> rgb;  // row-major H x W x 3, in [0,1]
    std::vector<std::vector<PixelContrib>> per_pixel_contribs;  // row-major H x W
    std::vector<double> responsibilities;  // length N: tau_i

    std::size_t pixel_index(int x, int y) const { return std::size_t(y) * width + x; }
    const std::vector<PixelContrib>& contribs(int x, int y) const {
        return per_pixel_contribs[pixel_index(x, y)];
    }
    const double* pixel_rgb(int x, int y) const { return &rgb[pixel_index(x, y) * 3]; }
};

RenderOutput render(const Scene& scene, const Camera& camera);

// Responsibilities-only render for candidate scoring: same projection,
// compositing, and summation order as render(), so the tau vector is
// bit-identical to render(...).responsibilities, without the contrib lists.
std::vector<double> render_responsibilities(const Scene& scene, const Camera& camera);

// Splits each pixel's composited weights by mask membership (class column 1
// collects mask == target_class). EvidenceMap.tau = e1 + e0 by construction.
EvidenceMap aggregate_evidence(const RenderOutput& out, const Mask& mask,
                               uint32_t target_class);

struct LogitImage {
    int width = 0, height = 0;
    std::vector<double> values;  // row-major H x W

    double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
};

// Posterior-mean prior image: R_soft = sum_i m_i w_i per pixel, clamped to
// [eps, 1-eps], then log(R_soft / (1 - R_soft)).
LogitImage prior_logit_from_output(const RenderOutput& out, const PosteriorState& state);
LogitImage render_prior_logit(const Scene& scene, const Camera& camera,
                              const PosteriorState& state);

}  // namespace b3seg
