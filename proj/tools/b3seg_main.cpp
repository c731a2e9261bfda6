// b3seg command-line driver.
//
// Exit codes: 0 success, 2 validation/config error, 3 pipeline failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "b3seg/pipeline.hpp"

namespace {

using namespace b3seg;

// "seed=7,objects=1,per-object=100,background=400,extent=10"
SceneSpec parse_generate_spec(const std::string& text) {
    SceneSpec spec;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ValidationError("bad generator spec item '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            if (key == "seed")
                spec.seed = std::stoull(val);
            else if (key == "objects")
                spec.n_objects = std::stoi(val);
            else if (key == "per-object")
                spec.gaussians_per_object = std::stoi(val);
            else if (key == "background")
                spec.background_count = std::stoi(val);
            else if (key == "extent")
                spec.workspace_extent = std::stod(val);
            else
                throw ValidationError("unknown generator spec key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ValidationError("bad value for generator spec key '" + key + "'");
        }
    }
    return spec;
}

std::pair<int, int> parse_resolution(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw ValidationError("resolution must look like 128x128");
    try {
        return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    } catch (const std::invalid_argument&) {
        throw ValidationError("resolution must look like 128x128");
    }
}

Vec3 parse_vec3(const std::string& text) {
    std::stringstream ss(text);
    std::string item;
    double v[3];
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, item, ',')) throw ValidationError("expected X,Y,Z");
        v[i] = std::stod(item);
    }
    return {v[0], v[1], v[2]};
}

int run_command(const RunConfig& config) {
    const RunReport report = run_pipeline(config);
    std::cout << "scene=" << report.scene_id << " gaussians=" << report.n_gaussians
              << " strategy=" << report.strategy << "\n";
    std::cout << "iterations=" << report.iterations_run
              << (report.stopped_early ? " (early stop)" : "") << "\n";
    std::cout << "final_total_entropy=" << report.final_total_entropy << "\n";
    std::cout << "iou_3d=" << report.iou_3d << " miou_2d=" << report.miou_2d << "\n";
    std::cout << "total_ms=" << report.timing.total_ms
              << " (mask=" << report.timing.mask_ms
              << " select=" << report.timing.view_select_ms
              << " update=" << report.timing.update_ms
              << " other=" << report.timing.other_ms << ")\n";
    if (!config.output_dir.empty())
        std::cout << "artifacts written to " << config.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential Bayesian splat segmentation with active view selection"};
    app.require_subcommand(1);

    // ---- run ----------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run the segmentation pipeline");
    std::string scene_path, generate_spec, format = "binary", res = "128x128";
    std::string strategy = "eig", out_dir, checkpoint, canonical;
    uint32_t target = 1;
    int iters = 20, candidates = 20, holdout = 8, noise_erode = 0;
    double a_init = 1.0, b_init = 1.0, fov_deg = 60.0;
    double noise_flip = 0.0, noise_fail = 0.0, prior_blend = 0.0;
    double early_stop = -1.0;
    uint64_t seed = 0;
    bool dump_images = false, noise_wrong_object = false;

    auto* scene_opt = run->add_option("--scene", scene_path, "Splat scene file");
    auto* gen_opt = run->add_option(
        "--generate", generate_spec,
        "Synthetic scene spec, e.g. seed=7,objects=1,per-object=100,background=400,extent=10");
    scene_opt->excludes(gen_opt);
    run->add_option("--format", format, "Scene file format: binary|json")
        ->check(CLI::IsMember({"binary", "json"}));
    run->add_option("--target", target, "Target class id (gt label)");
    run->add_option("--iters", iters, "Update iterations T");
    run->add_option("--candidates", candidates, "Candidate views per iteration");
    run->add_option("--a-init", a_init, "Initial foreground pseudo-count");
    run->add_option("--b-init", b_init, "Initial background pseudo-count");
    run->add_option("--res", res, "Render resolution WxH");
    run->add_option("--fov-deg", fov_deg, "Vertical field of view, degrees");
    run->add_option("--noise-flip", noise_flip, "Mask pixel flip probability");
    run->add_option("--noise-erode", noise_erode, "Mask boundary erosion, pixels");
    run->add_option("--noise-fail", noise_fail, "Whole-view mask failure probability");
    run->add_flag("--noise-wrong-object", noise_wrong_object,
                  "Failed views yield the complement mask instead of all-zeros");
    run->add_option("--seed", seed, "Run seed");
    std::string masker_backend = "oracle";
    run->add_option("--masker", masker_backend,
                    "Mask backend: oracle, or external:<command> (reserved)");
    run->add_option("--strategy", strategy, "View selection strategy")
        ->check(CLI::IsMember({"eig", "random_sphere", "random_holdout"}));
    run->add_option("--early-stop-accuracy", early_stop,
                    "Stop once the entropy bound guarantees this mean accuracy");
    run->add_option("--prior-blend", prior_blend,
                    "Blend weight of the posterior prior image into the mask");
    run->add_option("--canonical-pos", canonical, "Canonical camera position X,Y,Z");
    run->add_option("--holdout", holdout, "Held-out evaluation views");
    run->add_option("--checkpoint", checkpoint,
                    "Posterior checkpoint CSV (resumed if present, written at end)");
    run->add_option("--out", out_dir, "Artifact output directory");
    run->add_flag("--dump-images", dump_images, "Write debug PPM/PGM images per iteration");

    // ---- gen ----------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a synthetic scene file");
    std::string gen_spec_text, gen_out, gen_format = "binary";
    gen->add_option("--spec", gen_spec_text, "Generator spec (same keys as run --generate)");
    gen->add_option("--out", gen_out, "Output scene file")->required();
    gen->add_option("--format", gen_format, "binary|json")
        ->check(CLI::IsMember({"binary", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            RunConfig config;
            if (!scene_path.empty()) {
                if (!std::filesystem::exists(scene_path))
                    throw ValidationError("scene file does not exist: " + scene_path);
                config.scene_path = scene_path;
                config.scene_format = format == "binary" ? SplatFormat::binary_splat
                                                         : SplatFormat::json_splat;
            } else if (!generate_spec.empty()) {
                config.generate = parse_generate_spec(generate_spec);
            } else {
                throw ValidationError("provide --scene or --generate");
            }
            config.target_class = target;
            config.iterations = iters;
            config.n_candidates = candidates;
            config.a_init = a_init;
            config.b_init = b_init;
            std::tie(config.width, config.height) = parse_resolution(res);
            config.fov = fov_deg * M_PI / 180.0;
            config.noise.pixel_flip_prob = noise_flip;
            config.noise.boundary_erode_px = noise_erode;
            config.noise.view_failure_prob = noise_fail;
            config.noise.wrong_object_failure = noise_wrong_object;
            config.seed = seed;
            config.masker_backend = masker_backend;
            config.strategy = parse_strategy(strategy);
            if (early_stop >= 0.0) config.early_stop_accuracy = early_stop;
            config.prior_blend_weight = prior_blend;
            if (!canonical.empty()) config.canonical_position = parse_vec3(canonical);
            config.holdout_count = holdout;
            if (!checkpoint.empty()) config.checkpoint_path = checkpoint;
            config.output_dir = out_dir;
            config.dump_images = dump_images;
            return run_command(config);
        }
        if (gen->parsed()) {
            const SceneSpec spec =
                gen_spec_text.empty() ? SceneSpec{} : parse_generate_spec(gen_spec_text);
            const Scene scene = generate_synthetic(spec);
            save_scene(scene, gen_out,
                       gen_format == "binary" ? SplatFormat::binary_splat
                                              : SplatFormat::json_splat);
            std::cout << "wrote " << scene.size() << " gaussians to " << gen_out << "\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
