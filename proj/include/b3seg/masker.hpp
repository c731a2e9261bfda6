#pragma once
// Pluggable 2D mask provider. The shipped backend is a ground-truth oracle
// over gt_labels with configurable corruption; the interface leaves room for
// a process-external vision backend without touching the pipeline.

#include <cstdint>
#include <memory>
#include <string>

#include "b3seg/render.hpp"

namespace b3seg {

struct MaskRequest {
    const RenderOutput* render = nullptr;
    const Camera* camera = nullptr;
    uint32_t target_class = 1;
    const LogitImage* prior_logit = nullptr;  // optional
};

struct NoiseSpec {
    double pixel_flip_prob = 0.0;
    int boundary_erode_px = 0;
    double view_failure_prob = 0.0;
    bool wrong_object_failure = false;  // failure yields the complement instead of all-zeros
    uint64_t seed = 0;
};

// Clean mask: pixel = 1 iff its dominant contributor (largest weight; first in
// depth order on ties) carries gt_label == target_class. Corruption applies in
// the fixed order erode -> flip -> view-failure, each on its own RNG substream
// derived from (seed, iteration).
Mask oracle_mask(const MaskRequest& req, const Scene& scene, const NoiseSpec& noise,
                 uint64_t iteration);

// Per pixel: 1 iff blend_weight * sigmoid(prior) + (1 - blend_weight) * mask >= 0.5.
Mask prior_blend(const Mask& mask, const LogitImage& prior, double blend_weight);

class MaskProvider {
public:
    virtual ~MaskProvider() = default;
    virtual Mask mask(const MaskRequest& req, uint64_t iteration) = 0;
};

class OracleMasker final : public MaskProvider {
public:
    OracleMasker(const Scene& scene, NoiseSpec noise) : scene_(&scene), noise_(noise) {}
    Mask mask(const MaskRequest& req, uint64_t iteration) override {
        return oracle_mask(req, *scene_, noise_, iteration);
    }

private:
    const Scene* scene_;
    NoiseSpec noise_;
};

// Backend selector: "oracle" is shipped; "external:<command>" is reserved for
// a subprocess backend (PNG render on stdin, PNG mask on stdout) and rejected
// until implemented.
std::unique_ptr<MaskProvider> make_masker(const std::string& selector, const Scene& scene,
                                          const NoiseSpec& noise);

}  // namespace b3seg
