#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "b3seg/masker.hpp"
#include "b3seg/rng.hpp"

using namespace b3seg;

namespace {

// Labeled two-blob scene: object (label 1) near origin, clutter (label 0) around.
Scene labeled_scene(uint64_t seed = 1) {
    Scene scene;
    Rng rng(seed);
    for (int i = 0; i < 40; ++i) {
        Gaussian g;
        g.mean = {float(rng.normal() * 0.25), float(rng.normal() * 0.25),
                  float(rng.normal() * 0.25)};
        g.scale = {0.12f, 0.12f, 0.12f};
        g.opacity = 0.9f;
        g.color = {1.f, 0.f, 0.f};
        g.gt_label = 1;
        scene.gaussians.push_back(g);
    }
    for (int i = 0; i < 60; ++i) {
        Gaussian g;
        g.mean = {float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)),
                  float(rng.uniform(-2, 2))};
        g.scale = {0.1f, 0.1f, 0.1f};
        g.opacity = 0.6f;
        g.color = {0.f, 1.f, 0.f};
        g.gt_label = 0;
        scene.gaussians.push_back(g);
    }
    return scene;
}

Camera front_camera(int res = 48) {
    Camera cam;
    cam.position = {0.0, 0.0, -4.0};
    cam.look_at = {0.0, 0.0, 0.0};
    cam.up = {0.0, 1.0, 0.0};
    cam.width = cam.height = res;
    return cam;
}

std::size_t hamming(const Mask& a, const Mask& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) d += a.labels[i] != b.labels[i];
    return d;
}

}  // namespace

TEST_CASE("clean oracle mask equals the dominant-contributor projection") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    const Mask mask = oracle_mask(req, scene, NoiseSpec{}, 0);

    std::size_t fg_pixels = 0;
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const auto& contribs = out.contribs(x, y);
            uint32_t expected = 0;
            if (!contribs.empty()) {
                const PixelContrib* best = &contribs.front();
                for (const PixelContrib& c : contribs)
                    if (c.weight > best->weight) best = &c;
                expected = *scene.gaussians[best->index].gt_label == 1 ? 1 : 0;
            }
            CHECK(mask.label(x, y) == expected);
            fg_pixels += expected;
        }
    }
    CHECK(fg_pixels > 0);  // the object is actually visible

    // evidence from the clean mask favors visible object gaussians; fringe
    // members occluded by clutter can still lean the other way
    const EvidenceMap ev = aggregate_evidence(out, mask, 1);
    std::size_t favored = 0, visible = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        if (out.responsibilities[i] > 0.05) {
            ++visible;
            if (ev.e1(i) > ev.e0(i)) ++favored;
        }
    }
    CHECK(visible > 0);
    CHECK(favored * 4 >= visible * 3);
}

TEST_CASE("noiseless oracle is idempotent and deterministic") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    NoiseSpec noise;
    noise.seed = 5;
    const Mask a = oracle_mask(req, scene, noise, 3);
    const Mask b = oracle_mask(req, scene, noise, 3);
    CHECK(a.labels == b.labels);
}

TEST_CASE("full pixel flip complements the clean mask") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    const Mask clean = oracle_mask(req, scene, NoiseSpec{}, 0);
    NoiseSpec noise;
    noise.pixel_flip_prob = 1.0;
    const Mask flipped = oracle_mask(req, scene, noise, 0);
    REQUIRE(clean.labels.size() == flipped.labels.size());
    for (std::size_t i = 0; i < clean.labels.size(); ++i)
        CHECK(flipped.labels[i] == (clean.labels[i] ^ 1u));
}

TEST_CASE("certain view failure empties the mask") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    NoiseSpec noise;
    noise.view_failure_prob = 1.0;
    const Mask failed = oracle_mask(req, scene, noise, 0);
    for (uint32_t v : failed.labels) CHECK(v == 0);

    noise.wrong_object_failure = true;
    const Mask wrong = oracle_mask(req, scene, noise, 0);
    const Mask clean = oracle_mask(req, scene, NoiseSpec{}, 0);
    for (std::size_t i = 0; i < clean.labels.size(); ++i)
        CHECK(wrong.labels[i] == (clean.labels[i] ^ 1u));
}

TEST_CASE("erosion shrinks the foreground and composes before flips") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    const Mask clean = oracle_mask(req, scene, NoiseSpec{}, 0);

    NoiseSpec noise;
    noise.boundary_erode_px = 1;
    const Mask eroded = oracle_mask(req, scene, noise, 0);
    std::size_t clean_fg = 0, eroded_fg = 0;
    for (std::size_t i = 0; i < clean.labels.size(); ++i) {
        clean_fg += clean.labels[i];
        eroded_fg += eroded.labels[i];
        CHECK(eroded.labels[i] <= clean.labels[i]);  // erosion only removes
    }
    CHECK(eroded_fg < clean_fg);

    // flips ride on top of the eroded mask
    noise.pixel_flip_prob = 1.0;
    const Mask eroded_flipped = oracle_mask(req, scene, noise, 0);
    for (std::size_t i = 0; i < clean.labels.size(); ++i)
        CHECK(eroded_flipped.labels[i] == (eroded.labels[i] ^ 1u));
}

TEST_CASE("flip noise is deterministic per (seed, iteration)") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    NoiseSpec noise;
    noise.pixel_flip_prob = 0.5;
    noise.seed = 9;
    const Mask a = oracle_mask(req, scene, noise, 1);
    const Mask b = oracle_mask(req, scene, noise, 1);
    const Mask c = oracle_mask(req, scene, noise, 2);
    CHECK(a.labels == b.labels);
    CHECK(hamming(a, c) > 0);
}

TEST_CASE("unlabeled scene is rejected with guidance") {
    Scene scene;
    scene.gaussians.push_back(Gaussian{});
    const Camera cam = front_camera(8);
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    try {
        oracle_mask(req, scene, NoiseSpec{}, 0);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("gt_labels") != std::string::npos);
    }
}

TEST_CASE("prior blend endpoints") {
    Mask mask = Mask::zeros(4, 4);
    mask.label(1, 1) = 1;
    LogitImage prior;
    prior.width = prior.height = 4;
    prior.values.assign(16, -10.0);
    prior.values[0] = 10.0;  // confident foreground at (0,0)

    const Mask same = prior_blend(mask, prior, 0.0);
    CHECK(same.labels == mask.labels);

    const Mask only_prior = prior_blend(mask, prior, 1.0);
    CHECK(only_prior.label(0, 0) == 1);
    CHECK(only_prior.label(1, 1) == 0);
}

TEST_CASE("a confident correct prior repairs a noisy mask") {
    const Scene scene = labeled_scene();
    const Camera cam = front_camera();
    const RenderOutput out = render(scene, cam);
    const MaskRequest req{&out, &cam, 1, nullptr};
    const Mask clean = oracle_mask(req, scene, NoiseSpec{}, 0);

    // posterior that already knows the answer
    PosteriorState state(scene.size(), 1.0, 1.0);
    for (std::size_t i = 0; i < scene.size(); ++i)
        state.add(i, *scene.gaussians[i].gt_label == 1 ? 1 : 0, 200.0);
    const LogitImage prior = prior_logit_from_output(out, state);

    NoiseSpec noise;
    noise.pixel_flip_prob = 0.3;
    noise.seed = 4;
    const Mask noisy = oracle_mask(req, scene, noise, 1);

    // At weight exactly 0.5 the threshold rule cannot overturn a binary mask
    // (sigma < 1 strictly), so the blend is the identity there; weights above
    // 0.5 let a confident prior overrule flipped pixels.
    const Mask at_half = prior_blend(noisy, prior, 0.5);
    CHECK(at_half.labels == noisy.labels);

    const Mask blended = prior_blend(noisy, prior, 0.6);
    CHECK(hamming(blended, clean) < hamming(noisy, clean));
}

TEST_CASE("masker backend selector") {
    const Scene scene = labeled_scene();
    CHECK(make_masker("oracle", scene, NoiseSpec{}) != nullptr);
    CHECK_THROWS_WITH_AS(make_masker("external:./segmenter", scene, NoiseSpec{}),
                         doctest::Contains("reserved"), ValidationError);
    CHECK_THROWS_AS(make_masker("bogus", scene, NoiseSpec{}), ValidationError);
}
