#pragma once
// End-to-end segmentation loop: canonical seed view, then T rounds of
// candidate sampling, EIG-greedy (or baseline) view selection, mask inference,
// evidence aggregation, and conjugate updates; metrics and structured logs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "b3seg/masker.hpp"
#include "b3seg/planner.hpp"
#include "b3seg/scene.hpp"

namespace b3seg {

enum class Strategy { eig, random_sphere, random_holdout };

Strategy parse_strategy(const std::string& name);
std::string strategy_name(Strategy s);

struct RunConfig {
    // Scene source: a splat file or a generator spec (exactly one).
    std::optional<std::string> scene_path;
    SplatFormat scene_format = SplatFormat::binary_splat;
    std::optional<SceneSpec> generate;

    uint32_t target_class = 1;
    int iterations = 20;    // T
    int n_candidates = 20;  // per planning round
    double a_init = 1.0;
    double b_init = 1.0;
    int width = 128;
    int height = 128;
    double fov = 1.0471975511965976;  // 60 degrees
    NoiseSpec noise;                  // stream seed is derived from `seed`
    std::string masker_backend = "oracle";  // "oracle" | "external:<command>" (reserved)
    uint64_t seed = 0;
    Strategy strategy = Strategy::eig;
    std::optional<double> early_stop_accuracy;  // target mean Bayes accuracy
    double prior_blend_weight = 0.0;            // 0 disables the prior pathway
    std::optional<Vec3> canonical_position;     // default: +x at 2.5x scene radius
    int holdout_count = 8;
    std::optional<std::string> checkpoint_path;
    std::string output_dir;  // empty: do not write artifacts
    bool dump_images = false;
};

struct IterationRow {
    int iter = 0;
    int selected_index = -1;
    double eig = 0.0;
    double exact_ig = 0.0;
    double total_entropy_before = 0.0;
    double total_entropy_after = 0.0;
    double wall_ms = 0.0;
};

struct TimingBreakdown {
    double mask_ms = 0.0;
    double view_select_ms = 0.0;
    double update_ms = 0.0;
    double other_ms = 0.0;
    double total_ms = 0.0;
};

struct RunReport {
    std::string scene_id;
    uint64_t seed = 0;
    std::string strategy;
    uint32_t target_class = 1;
    std::size_t n_gaussians = 0;
    int iterations_run = 0;
    bool stopped_early = false;
    std::vector<IterationRow> rows;
    std::vector<uint32_t> final_labels;
    std::vector<double> final_a, final_b;
    double initial_total_entropy = 0.0;
    double final_total_entropy = 0.0;
    double iou_3d = 0.0;
    double miou_2d = 0.0;
    TimingBreakdown timing;
};

// Executes the full loop. Deterministic per seed (timing fields excepted).
// Loop failures carry the iteration index; a partial report is still emitted
// when output_dir is set.
RunReport run_pipeline(const RunConfig& config);

// |pred AND gt| / |pred OR gt| over Gaussian indices; defined as 1.0 (with a
// stderr warning) when both sets are empty.
double evaluate_3d_iou(const std::vector<uint32_t>& labels, const Scene& scene,
                       uint32_t target_class);

// Mean per-view IoU of dominant-contributor masks rendered from predicted vs
// ground-truth labels.
double evaluate_2d_miou(const std::vector<uint32_t>& labels, const Scene& scene,
                        const std::vector<Camera>& holdout_cameras, uint32_t target_class);

// Writes run.csv, scatter.csv, labels.csv, report.json into output_dir.
// Pure function of the report: re-emitting overwrites byte-identically.
void emit_artifacts(const RunReport& report, const std::string& output_dir);

// Deterministic overview cameras on the scene bounding sphere; used for the
// held-out 2D metric and as the pool for the random_holdout baseline.
std::vector<Camera> make_holdout_cameras(const Scene& scene, int count, uint64_t seed,
                                         double fov, int width, int height);

}  // namespace b3seg
