#include "b3seg/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "b3seg/image_io.hpp"
#include "b3seg/parallel.hpp"
#include "b3seg/rng.hpp"

namespace b3seg {

namespace {

constexpr uint64_t kCandidateStream = 0xca4d;
constexpr uint64_t kHoldoutStream = 0x801d;
constexpr uint64_t kStrategyStream = 0x57a7;
constexpr uint64_t kMaskNoiseStream = 0x4015e;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_ms(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// Binary projection of per-Gaussian labels: pixel = 1 iff the dominant
// contributor's label equals target.
Mask project_labels(const RenderOutput& out, const std::vector<uint32_t>& labels,
                    uint32_t target) {
    Mask mask = Mask::zeros(out.width, out.height);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const auto& contribs = out.contribs(x, y);
            if (contribs.empty()) continue;
            const PixelContrib* dominant = &contribs.front();
            for (const PixelContrib& c : contribs)
                if (c.weight > dominant->weight) dominant = &c;
            if (labels[dominant->index] == target) mask.label(x, y) = 1;
        }
    }
    return mask;
}

double mask_iou(const Mask& a, const Mask& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const bool pa = a.labels[i] == 1, pb = b.labels[i] == 1;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
    if (name == "eig") return Strategy::eig;
    if (name == "random_sphere") return Strategy::random_sphere;
    if (name == "random_holdout") return Strategy::random_holdout;
    throw ValidationError("unknown strategy '" + name + "'");
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::eig: return "eig";
        case Strategy::random_sphere: return "random_sphere";
        case Strategy::random_holdout: return "random_holdout";
    }
    return "eig";
}

std::vector<Camera> make_holdout_cameras(const Scene& scene, int count, uint64_t seed,
                                         double fov, int width, int height) {
    if (count < 1) throw ValidationError("need at least one holdout camera");
    const BoundingSphere bs = scene_bounding_sphere(scene);
    Rng rng(seed);
    std::vector<Camera> cams;
    cams.reserve(count);
    for (int i = 0; i < count; ++i) {
        const Vec3 pos = bs.center + rng.unit_vector() * (2.5 * bs.radius);
        cams.push_back(make_orbit_camera(bs.center, pos, fov, width, height));
    }
    return cams;
}

double evaluate_3d_iou(const std::vector<uint32_t>& labels, const Scene& scene,
                       uint32_t target_class) {
    if (!scene.has_labels()) throw ValidationError("scene carries no gt_labels");
    if (labels.size() != scene.size())
        throw ValidationError("label vector does not match scene size");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool p = labels[i] == 1;
        const bool g = scene.gaussians[i].gt_label == target_class;
        inter += p && g;
        uni += p || g;
    }
    if (uni == 0) {
        std::cerr << "warning: 3D IoU of two empty sets, defined as 1.0\n";
        return 1.0;
    }
    return double(inter) / double(uni);
}

double evaluate_2d_miou(const std::vector<uint32_t>& labels, const Scene& scene,
                        const std::vector<Camera>& holdout_cameras,
                        uint32_t target_class) {
    if (holdout_cameras.empty()) throw ValidationError("need at least one holdout camera");
    if (!scene.has_labels()) throw ValidationError("scene carries no gt_labels");
    std::vector<uint32_t> gt(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) gt[i] = *scene.gaussians[i].gt_label;

    std::vector<double> ious(holdout_cameras.size());
    parallel_for(holdout_cameras.size(), [&](std::size_t v) {
        const RenderOutput out = render(scene, holdout_cameras[v]);
        const Mask pred = project_labels(out, labels, 1);
        const Mask truth = project_labels(out, gt, target_class);
        ious[v] = mask_iou(pred, truth);
    });
    double sum = 0.0;
    for (double v : ious) sum += v;
    return sum / double(ious.size());
}

RunReport run_pipeline(const RunConfig& config) {
    // -- validation ---------------------------------------------------------
    if (config.iterations < 1) throw ValidationError("iterations must be >= 1");
    if (config.n_candidates < 1) throw ValidationError("need at least one candidate");
    if (!(config.a_init > 0.0) || !(config.b_init > 0.0))
        throw ValidationError("init pseudo-counts must be > 0");
    if (config.width < 1 || config.height < 1)
        throw ValidationError("resolution must be >= 1");
    if (!(config.fov > 0.0) || !(config.fov < M_PI))
        throw ValidationError("fov must be in (0, pi)");
    if (config.scene_path.has_value() == config.generate.has_value())
        throw ValidationError("provide exactly one scene source (file or generator)");
    if (config.early_stop_accuracy &&
        (!(*config.early_stop_accuracy >= 0.0) || !(*config.early_stop_accuracy <= 1.0)))
        throw ValidationError("early-stop accuracy must be in [0,1]");
    if (config.prior_blend_weight < 0.0 || config.prior_blend_weight > 1.0)
        throw ValidationError("prior blend weight must be in [0,1]");

    const auto t_total = Clock::now();
    TimingBreakdown timing;

    const Scene scene = config.scene_path
                            ? load_scene(*config.scene_path, config.scene_format)
                            : generate_synthetic(*config.generate);
    const std::size_t n = scene.size();
    const BoundingSphere bs = scene_bounding_sphere(scene);

    RunReport report;
    report.scene_id = scene.id;
    report.seed = config.seed;
    report.strategy = strategy_name(config.strategy);
    report.target_class = config.target_class;
    report.n_gaussians = n;

    NoiseSpec noise = config.noise;
    noise.seed = derive_seed(config.seed, kMaskNoiseStream);
    const std::unique_ptr<MaskProvider> masker =
        make_masker(config.masker_backend, scene, noise);

    PosteriorState state(n, config.a_init, config.b_init);
    report.initial_total_entropy = total_entropy(state);

    const std::vector<Camera> holdout = make_holdout_cameras(
        scene, config.holdout_count, derive_seed(config.seed, kHoldoutStream), config.fov,
        config.width, config.height);
    Rng strategy_rng(derive_seed(config.seed, kStrategyStream));

    const bool early_stop_enabled = config.early_stop_accuracy.has_value();
    const double stop_target =
        early_stop_enabled ? (1.0 - *config.early_stop_accuracy) * 2.0 * std::log(2.0) : 0.0;

    const bool want_prior = config.prior_blend_weight > 0.0 || config.dump_images;

    // -- resume or canonical seed view --------------------------------------
    bool resumed = false;
    if (config.checkpoint_path && std::filesystem::exists(*config.checkpoint_path)) {
        PosteriorState loaded = load_checkpoint(*config.checkpoint_path);
        if (loaded.size() != n)
            throw ValidationError("checkpoint size does not match scene size");
        state = std::move(loaded);
        resumed = true;
    }

    if (!resumed) {
        const Vec3 canonical_pos =
            config.canonical_position
                ? *config.canonical_position
                : bs.center + Vec3{2.5 * bs.radius, 0.0, 0.0};
        const Camera canonical = make_orbit_camera(bs.center, canonical_pos, config.fov,
                                                   config.width, config.height);
        const RenderOutput out = render(scene, canonical);

        const auto t_mask = Clock::now();
        MaskRequest req{&out, &canonical, config.target_class, nullptr};
        LogitImage prior;
        if (want_prior) {
            prior = prior_logit_from_output(out, state);
            req.prior_logit = &prior;
        }
        Mask mask = masker->mask(req, /*iteration=*/0);
        if (config.prior_blend_weight > 0.0)
            mask = prior_blend(mask, prior, config.prior_blend_weight);
        timing.mask_ms += ms_since(t_mask);

        const auto t_update = Clock::now();
        state.apply(aggregate_evidence(out, mask, 1));
        timing.update_ms += ms_since(t_update);
    }

    const auto stats_or_fallback = [&]() -> ObjectStats {
        try {
            return object_stats(scene, state);
        } catch (const NoForegroundError&) {
            return ObjectStats{bs.center, bs.radius};
        }
    };
    ObjectStats stats = stats_or_fallback();

    // -- active loop ---------------------------------------------------------
    const auto finalize = [&] {
        report.final_labels = map_labels(state);
        report.final_a.resize(n);
        report.final_b.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            report.final_a[i] = state.a(i);
            report.final_b[i] = state.b(i);
        }
        report.final_total_entropy = total_entropy(state);
        if (scene.has_labels()) {
            report.iou_3d = evaluate_3d_iou(report.final_labels, scene, config.target_class);
            report.miou_2d =
                evaluate_2d_miou(report.final_labels, scene, holdout, config.target_class);
        }
        timing.total_ms = ms_since(t_total);
        timing.other_ms =
            timing.total_ms - timing.mask_ms - timing.view_select_ms - timing.update_ms;
        report.timing = timing;
        if (config.checkpoint_path) save_checkpoint(state, *config.checkpoint_path);
        if (!config.output_dir.empty()) emit_artifacts(report, config.output_dir);
    };

    for (int iter = 1; iter <= config.iterations; ++iter) {
        const auto t_iter = Clock::now();
        try {
            IterationRow row;
            row.iter = iter;
            row.total_entropy_before = total_entropy(state);

            // Select a view.
            const auto t_select = Clock::now();
            const CandidateSet candidates =
                sample_candidates(stats, config.fov, config.n_candidates,
                                  derive_seed(config.seed, kCandidateStream, uint64_t(iter)),
                                  config.width, config.height);
            ViewScore score;
            RenderOutput out;
            Camera chosen_camera;
            switch (config.strategy) {
                case Strategy::eig: {
                    auto [s, o] = select_view(scene, candidates, state);
                    score = std::move(s);
                    out = std::move(o);
                    chosen_camera = candidates.cameras[score.camera_index];
                    break;
                }
                case Strategy::random_sphere: {
                    const int pick =
                        int(strategy_rng.uniform_index(candidates.cameras.size()));
                    chosen_camera = candidates.cameras[pick];
                    out = render(scene, chosen_camera);
                    score.camera_index = pick;
                    score.eig = eig(out, state);
                    break;
                }
                case Strategy::random_holdout: {
                    const int pick = int(strategy_rng.uniform_index(holdout.size()));
                    chosen_camera = holdout[pick];
                    out = render(scene, chosen_camera);
                    score.camera_index = pick;
                    score.eig = eig(out, state);
                    break;
                }
            }
            timing.view_select_ms += ms_since(t_select);

            // Mask the selected view.
            const auto t_mask = Clock::now();
            MaskRequest req{&out, &chosen_camera, config.target_class, nullptr};
            LogitImage prior;
            if (want_prior) {
                prior = prior_logit_from_output(out, state);
                req.prior_logit = &prior;
            }
            Mask mask = masker->mask(req, uint64_t(iter));
            if (config.prior_blend_weight > 0.0)
                mask = prior_blend(mask, prior, config.prior_blend_weight);
            timing.mask_ms += ms_since(t_mask);

            // Aggregate, update, refresh stats.
            const auto t_update = Clock::now();
            const EvidenceMap evidence = aggregate_evidence(out, mask, 1);
            row.exact_ig = ig_from_evidence(evidence, state);
            state.apply(evidence);
            stats = stats_or_fallback();
            row.total_entropy_after = total_entropy(state);
            timing.update_ms += ms_since(t_update);

            row.selected_index = score.camera_index;
            row.eig = score.eig;
            row.wall_ms = ms_since(t_iter);
            report.rows.push_back(row);
            report.iterations_run = iter;

            if (config.dump_images && !config.output_dir.empty()) {
                std::filesystem::create_directories(config.output_dir);
                char name[64];
                std::snprintf(name, sizeof name, "iter_%03d", iter);
                const std::string stem = config.output_dir + "/" + name;
                write_ppm(out, stem + "_rgb.ppm");
                write_mask_pgm(mask, stem + "_mask.pgm");
                if (want_prior) write_logit_pgm(prior, stem + "_prior.pgm");
            }

            if (early_stop_enabled && should_stop(state, stop_target)) {
                report.stopped_early = true;
                break;
            }
        } catch (const std::exception& e) {
            finalize();
            throw std::runtime_error("pipeline failed at iteration " +
                                     std::to_string(iter) + ": " + e.what());
        }
    }

    finalize();
    return report;
}

void emit_artifacts(const RunReport& report, const std::string& output_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);

    {
        std::ofstream run(output_dir + "/run.csv", std::ios::trunc);
        if (!run) throw IoError("cannot open " + output_dir + "/run.csv");
        run << "iter,selected_index,eig,exact_ig,total_entropy_before,total_entropy_after,"
               "wall_ms\n";
        for (const IterationRow& r : report.rows)
            run << r.iter << ',' << r.selected_index << ',' << fmt17(r.eig) << ','
                << fmt17(r.exact_ig) << ',' << fmt17(r.total_entropy_before) << ','
                << fmt17(r.total_entropy_after) << ',' << fmt_ms(r.wall_ms) << "\n";
        if (!run) throw IoError("write failed: run.csv");
    }
    {
        std::ofstream sc(output_dir + "/scatter.csv", std::ios::trunc);
        if (!sc) throw IoError("cannot open " + output_dir + "/scatter.csv");
        sc << "eig,exact_ig\n";
        for (const IterationRow& r : report.rows)
            sc << fmt17(r.eig) << ',' << fmt17(r.exact_ig) << "\n";
        if (!sc) throw IoError("write failed: scatter.csv");
    }
    {
        std::ofstream lb(output_dir + "/labels.csv", std::ios::trunc);
        if (!lb) throw IoError("cannot open " + output_dir + "/labels.csv");
        lb << "index,a,b,label\n";
        for (std::size_t i = 0; i < report.final_labels.size(); ++i)
            lb << i << ',' << fmt17(report.final_a[i]) << ',' << fmt17(report.final_b[i])
               << ',' << report.final_labels[i] << "\n";
        if (!lb) throw IoError("write failed: labels.csv");
    }
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const IterationRow& r : report.rows) {
            rows.push_back({{"iter", r.iter},
                            {"selected_index", r.selected_index},
                            {"eig", r.eig},
                            {"exact_ig", r.exact_ig},
                            {"total_entropy_before", r.total_entropy_before},
                            {"total_entropy_after", r.total_entropy_after},
                            {"wall_ms", r.wall_ms}});
        }
        const nlohmann::json j{
            {"schema", 1},
            {"scene_id", report.scene_id},
            {"seed", report.seed},
            {"strategy", report.strategy},
            {"target_class", report.target_class},
            {"n_gaussians", report.n_gaussians},
            {"iterations_run", report.iterations_run},
            {"stopped_early", report.stopped_early},
            {"initial_total_entropy", report.initial_total_entropy},
            {"final_total_entropy", report.final_total_entropy},
            {"iou_3d", report.iou_3d},
            {"miou_2d", report.miou_2d},
            {"rows", rows},
            {"timing",
             {{"mask_ms", report.timing.mask_ms},
              {"view_select_ms", report.timing.view_select_ms},
              {"update_ms", report.timing.update_ms},
              {"other_ms", report.timing.other_ms},
              {"total_ms", report.timing.total_ms}}}};
        std::ofstream rj(output_dir + "/report.json", std::ios::trunc);
        if (!rj) throw IoError("cannot open " + output_dir + "/report.json");
        rj << j.dump(1) << "\n";
        if (!rj) throw IoError("write failed: report.json");
    }
}

}  // namespace b3seg
