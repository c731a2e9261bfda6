#include "b3seg/masker.hpp"

#include <cmath>

#include "b3seg/rng.hpp"

namespace b3seg {

namespace {

constexpr uint64_t kFlipStream = 0xf117;
constexpr uint64_t kFailStream = 0xfa11;

// 3x3 binary erosion; outside the image counts as background.
void erode_once(Mask& mask) {
    const Mask src = mask;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (src.label(x, y) == 0) continue;
            bool keep = true;
            for (int dy = -1; dy <= 1 && keep; ++dy) {
                for (int dx = -1; dx <= 1 && keep; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= src.width || ny >= src.height ||
                        src.label(nx, ny) == 0)
                        keep = false;
                }
            }
            if (!keep) mask.label(x, y) = 0;
        }
    }
}

}  // namespace

Mask oracle_mask(const MaskRequest& req, const Scene& scene, const NoiseSpec& noise,
                 uint64_t iteration) {
    if (!req.render) throw ValidationError("mask request carries no render");
    if (!scene.has_labels())
        throw ValidationError(
            "oracle masker needs gt_labels; use a generated scene or an external backend");
    if (noise.pixel_flip_prob < 0.0 || noise.pixel_flip_prob > 1.0 ||
        noise.view_failure_prob < 0.0 || noise.view_failure_prob > 1.0 ||
        noise.boundary_erode_px < 0)
        throw ValidationError("noise spec out of range");

    const RenderOutput& out = *req.render;
    Mask mask = Mask::zeros(out.width, out.height);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const auto& contribs = out.contribs(x, y);
            if (contribs.empty()) continue;
            const PixelContrib* dominant = &contribs.front();
            for (const PixelContrib& c : contribs)
                if (c.weight > dominant->weight) dominant = &c;
            if (scene.gaussians[dominant->index].gt_label == req.target_class)
                mask.label(x, y) = 1;
        }
    }

    for (int i = 0; i < noise.boundary_erode_px; ++i) erode_once(mask);

    if (noise.pixel_flip_prob > 0.0) {
        Rng flip_rng(derive_seed(noise.seed, kFlipStream, iteration));
        for (uint32_t& v : mask.labels)
            if (flip_rng.bernoulli(noise.pixel_flip_prob)) v ^= 1u;
    }

    if (noise.view_failure_prob > 0.0) {
        Rng fail_rng(derive_seed(noise.seed, kFailStream, iteration));
        if (fail_rng.bernoulli(noise.view_failure_prob)) {
            if (noise.wrong_object_failure) {
                for (uint32_t& v : mask.labels) v ^= 1u;
            } else {
                for (uint32_t& v : mask.labels) v = 0;
            }
        }
    }
    return mask;
}

Mask prior_blend(const Mask& mask, const LogitImage& prior, double blend_weight) {
    if (mask.width != prior.width || mask.height != prior.height)
        throw ValidationError("prior image dimensions do not match mask");
    if (mask.num_classes != 2) throw ValidationError("prior_blend needs a binary mask");
    if (blend_weight < 0.0 || blend_weight > 1.0)
        throw ValidationError("blend weight must be in [0,1]");
    if (blend_weight == 0.0) return mask;

    Mask out = Mask::zeros(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        const double sigma = 1.0 / (1.0 + std::exp(-prior.values[i]));
        const double blended =
            blend_weight * sigma + (1.0 - blend_weight) * double(mask.labels[i]);
        out.labels[i] = blended >= 0.5 ? 1u : 0u;
    }
    return out;
}

std::unique_ptr<MaskProvider> make_masker(const std::string& selector, const Scene& scene,
                                          const NoiseSpec& noise) {
    if (selector == "oracle") return std::make_unique<OracleMasker>(scene, noise);
    if (selector.rfind("external:", 0) == 0)
        throw ValidationError("masker backend '" + selector +
                              "' is reserved but not implemented; use 'oracle'");
    throw ValidationError("unknown masker backend '" + selector + "'");
}

}  // namespace b3seg
