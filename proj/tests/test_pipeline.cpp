#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "b3seg/pipeline.hpp"
#include "test_util.hpp"

using namespace b3seg;
using test::TempDir;

namespace {

RunConfig mini_config(uint64_t seed = 1) {
    RunConfig config;
    SceneSpec spec;
    spec.seed = 7;
    spec.n_objects = 1;
    spec.gaussians_per_object = 40;
    spec.background_count = 120;
    spec.workspace_extent = 8.0;
    config.generate = spec;
    config.iterations = 4;
    config.n_candidates = 6;
    config.width = config.height = 48;
    config.seed = seed;
    config.holdout_count = 4;
    return config;
}

bool rows_equal_excluding_time(const IterationRow& a, const IterationRow& b) {
    return a.iter == b.iter && a.selected_index == b.selected_index && a.eig == b.eig &&
           a.exact_ig == b.exact_ig && a.total_entropy_before == b.total_entropy_before &&
           a.total_entropy_after == b.total_entropy_after;
}

}  // namespace

TEST_CASE("bad configs are rejected") {
    RunConfig config = mini_config();
    config.iterations = 0;
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);

    config = mini_config();
    config.n_candidates = 0;
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);

    config = mini_config();
    config.generate.reset();
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);

    config = mini_config();
    config.scene_path = "also_set.b3sp";  // both sources
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);
}

TEST_CASE("one iteration yields one loop row") {
    RunConfig config = mini_config();
    config.iterations = 1;
    const RunReport report = run_pipeline(config);
    CHECK(report.rows.size() == 1);
    CHECK(report.rows[0].iter == 1);
    CHECK(report.iterations_run == 1);
    CHECK_FALSE(report.stopped_early);
}

TEST_CASE("pipeline is deterministic per seed") {
    const RunReport a = run_pipeline(mini_config(5));
    const RunReport b = run_pipeline(mini_config(5));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        CHECK(rows_equal_excluding_time(a.rows[i], b.rows[i]));
    CHECK(a.final_labels == b.final_labels);
    CHECK(a.final_a == b.final_a);
    CHECK(a.final_b == b.final_b);
    CHECK(a.iou_3d == b.iou_3d);
    CHECK(a.miou_2d == b.miou_2d);

    const RunReport c = run_pipeline(mini_config(6));
    bool any_difference = c.final_a != a.final_a;
    for (std::size_t i = 0; i < std::min(a.rows.size(), c.rows.size()); ++i)
        any_difference = any_difference || !rows_equal_excluding_time(a.rows[i], c.rows[i]);
    CHECK(any_difference);
}

TEST_CASE("noiseless mini run segments the object reasonably") {
    RunConfig config = mini_config();
    config.iterations = 6;
    const RunReport report = run_pipeline(config);
    CHECK(report.iou_3d >= 0.7);  // smoke bound for the tiny smoke config
    CHECK(report.miou_2d >= report.iou_3d - 0.25);
    // noiseless oracle masks keep the entropy trajectory non-increasing
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].total_entropy_after <=
              report.rows[i].total_entropy_before + 1e-9);
        if (i > 0)
            CHECK(report.rows[i].total_entropy_before <=
                  report.rows[i - 1].total_entropy_after + 1e-9);
    }
}

TEST_CASE("timing breakdown sums to the total") {
    const RunReport report = run_pipeline(mini_config(3));
    const double sum = report.timing.mask_ms + report.timing.view_select_ms +
                       report.timing.update_ms + report.timing.other_ms;
    CHECK(std::abs(sum - report.timing.total_ms) <= 0.01 * report.timing.total_ms);
}

TEST_CASE("3d iou arithmetic") {
    SceneSpec spec;
    spec.seed = 7;
    spec.n_objects = 1;
    spec.gaussians_per_object = 100;
    spec.background_count = 200;
    const Scene scene = generate_synthetic(spec);

    std::vector<uint32_t> pred(scene.size(), 0);
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (*scene.gaussians[i].gt_label == 1) pred[i] = 1;
    CHECK(evaluate_3d_iou(pred, scene, 1) == 1.0);

    // 10 extra background gaussians claimed: 100 / 110
    int extras = 0;
    for (std::size_t i = 0; i < scene.size() && extras < 10; ++i) {
        if (*scene.gaussians[i].gt_label == 0) {
            pred[i] = 1;
            ++extras;
        }
    }
    CHECK(evaluate_3d_iou(pred, scene, 1) == doctest::Approx(100.0 / 110.0).epsilon(1e-12));

    std::vector<uint32_t> none(scene.size(), 0);
    CHECK(evaluate_3d_iou(none, scene, 1) == 0.0);
}

TEST_CASE("2d miou on holdout views") {
    SceneSpec spec;
    spec.seed = 4;
    spec.n_objects = 1;
    spec.gaussians_per_object = 30;
    spec.background_count = 60;
    const Scene scene = generate_synthetic(spec);
    const auto holdout = make_holdout_cameras(scene, 4, 11, M_PI / 3.0, 48, 48);

    std::vector<uint32_t> pred(scene.size(), 0);
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (*scene.gaussians[i].gt_label == 1) pred[i] = 1;
    CHECK(evaluate_2d_miou(pred, scene, holdout, 1) == 1.0);

    std::vector<uint32_t> none(scene.size(), 0);
    CHECK(evaluate_2d_miou(none, scene, holdout, 1) == 0.0);
}

TEST_CASE("artifacts: headers, rewrite stability, row counts") {
    TempDir dir("artifacts");
    RunConfig config = mini_config(2);
    config.output_dir = dir.file("out");
    const RunReport report = run_pipeline(config);

    CHECK(test::first_line(dir.file("out/run.csv")) ==
          "iter,selected_index,eig,exact_ig,total_entropy_before,total_entropy_after,"
          "wall_ms");
    CHECK(test::first_line(dir.file("out/scatter.csv")) == "eig,exact_ig");
    CHECK(test::first_line(dir.file("out/labels.csv")) == "index,a,b,label");

    // scatter rows == selected views; labels rows == N
    std::size_t scatter_rows = 0, label_rows = 0;
    {
        std::ifstream sc(dir.file("out/scatter.csv"));
        std::string line;
        std::getline(sc, line);
        while (std::getline(sc, line))
            if (!line.empty()) ++scatter_rows;
        std::ifstream lb(dir.file("out/labels.csv"));
        std::getline(lb, line);
        while (std::getline(lb, line))
            if (!line.empty()) ++label_rows;
    }
    CHECK(scatter_rows == report.rows.size());
    CHECK(label_rows == report.n_gaussians);

    const auto before = test::slurp(dir.file("out/report.json"));
    emit_artifacts(report, dir.file("out"));
    CHECK(test::slurp(dir.file("out/report.json")) == before);
}

TEST_CASE("early stop fires immediately at a trivial target") {
    RunConfig config = mini_config(7);
    config.iterations = 10;
    config.early_stop_accuracy = 0.0;  // target entropy 2 ln 2, above any mean entropy
    const RunReport report = run_pipeline(config);
    CHECK(report.stopped_early);
    CHECK(report.rows.size() == 1);  // checked after the first loop iteration
}

TEST_CASE("checkpoint resume skips the canonical view") {
    TempDir dir("resume");
    RunConfig config = mini_config(9);
    config.iterations = 2;
    config.checkpoint_path = dir.file("posterior.csv");

    const RunReport first = run_pipeline(config);
    CHECK(std::filesystem::exists(dir.file("posterior.csv")));

    const RunReport second = run_pipeline(config);
    // resumed run starts from the first run's final counts, so it only grows
    REQUIRE(second.final_a.size() == first.final_a.size());
    for (std::size_t i = 0; i < first.final_a.size(); ++i) {
        CHECK(second.final_a[i] >= first.final_a[i] - 1e-12);
        CHECK(second.final_b[i] >= first.final_b[i] - 1e-12);
    }
    CHECK(second.final_total_entropy <= first.final_total_entropy + 1e-9);
}

TEST_CASE("baseline strategies run and log the same schema") {
    for (Strategy strategy : {Strategy::random_sphere, Strategy::random_holdout}) {
        RunConfig config = mini_config(4);
        config.iterations = 2;
        config.strategy = strategy;
        const RunReport report = run_pipeline(config);
        CHECK(report.rows.size() == 2);
        CHECK(report.strategy == strategy_name(strategy));
        for (const auto& row : report.rows) CHECK(row.selected_index >= 0);
    }
}

TEST_CASE("prior blend pathway stays functional end to end") {
    RunConfig config = mini_config(12);
    config.iterations = 3;
    config.noise.pixel_flip_prob = 0.2;
    config.prior_blend_weight = 0.6;
    const RunReport report = run_pipeline(config);
    CHECK(report.rows.size() == 3);
    CHECK(report.iou_3d >= 0.0);
}

TEST_CASE("reserved masker backends are rejected up front") {
    RunConfig config = mini_config();
    config.masker_backend = "external:./segment.sh";
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);
    config.masker_backend = "nonsense";
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);
}

TEST_CASE("strategy names round trip") {
    for (const char* name : {"eig", "random_sphere", "random_holdout"})
        CHECK(strategy_name(parse_strategy(name)) == name);
    CHECK_THROWS_AS(parse_strategy("greedy"), ValidationError);
}
