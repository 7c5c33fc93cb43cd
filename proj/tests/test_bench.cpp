#include <doctest.h>

#include <cmath>

#include "gazekit/bench.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/headpose.hpp"
#include "gazekit/io.hpp"
#include "gazekit/synthlab.hpp"

using namespace gazekit;

namespace {

SyntheticSession noisy_session(std::uint64_t seed, double dir_noise = 3.0, double bias = 5.0) {
    SceneConfig cfg;
    cfg.distance_mm = 750.0;
    cfg.n_samples = 80;
    cfg.seed = seed;
    cfg.direction_noise_deg = dir_noise;
    cfg.direction_bias_deg = bias;
    return generate_session(cfg, default_face_model(), default_camera(), default_screen());
}

ReplayEstimator sim3d_estimator(const SessionLog& log) {
    return ReplayEstimator(log.estimates.at(kSimDirectionSource), kSimDirectionSource,
                           std::nullopt);
}

}  // namespace

TEST_CASE("align_to_clicks window rules") {
    SessionLog log;
    log.meta.camera = default_camera();
    log.meta.screen = default_screen();
    LandmarkSet lm;
    lm.timestamp = 1'000'000;
    log.landmarks.push_back(lm);
    log.clicks.push_back({1'000'000, {10, 10}});  // exact hit
    log.clicks.push_back({1'040'000, {20, 20}});  // 40 ms away

    const AlignmentResult tight = align_to_clicks(log, 30'000);
    CHECK(tight.matched.size() == 1);
    CHECK(tight.dropped == 1);
    CHECK(tight.matched.size() + size_t(tight.dropped) == size_t(tight.total_clicks));
    CHECK(tight.matched[0].landmarks.timestamp == 1'000'000);

    const AlignmentResult wide = align_to_clicks(log, 100'000);
    CHECK(wide.matched.size() == 2);
    CHECK(wide.dropped == 0);

    // Empty streams: empty result with diagnostics.
    SessionLog empty;
    empty.clicks.push_back({0, {0, 0}});
    const AlignmentResult none = align_to_clicks(empty, 100'000);
    CHECK(none.matched.empty());
    CHECK(none.dropped == 1);
    CHECK(none.dropped_no_landmark == 1);

    // Synthetic sessions have coincident records: zero drops.
    const SyntheticSession s = noisy_session(1);
    const AlignmentResult synth =
        align_to_clicks(s.log, 100'000, {kSimDirectionSource, kSimScreenSource});
    CHECK(synth.dropped == 0);
    CHECK(synth.matched.size() == s.truth.size());
}

TEST_CASE("evaluate_session noiseless oracle") {
    SceneConfig cfg;
    cfg.distance_mm = 750.0;
    cfg.n_samples = 80;
    cfg.seed = 3;
    const SyntheticSession s =
        generate_session(cfg, default_face_model(), default_camera(), default_screen());
    const GeometricEstimator est(default_face_model(), default_camera());

    EvalOptions opts;
    opts.n_cal = 0;
    opts.n_test = 20;
    const EvalResult r = evaluate_session(s.log, est, opts);
    CHECK(r.n_test == 20);
    CHECK(r.n_dropped_alignment == 0);
    CHECK(r.n_skipped_estimator == 0);
    CHECK(r.mean_deg < 1e-5);
}

TEST_CASE("evaluate_session: n_cal = 0 bypasses calibration exactly") {
    const SyntheticSession s = noisy_session(17);
    const ReplayEstimator est = sim3d_estimator(s.log);

    EvalOptions opts;
    opts.n_cal = 0;
    opts.n_test = 20;
    const EvalResult r = evaluate_session(s.log, est, opts);

    // Manual raw scoring of the last 20 samples along the same path.
    const FaceModel3D model = default_face_model();
    const auto& recs = s.log.estimates.at(kSimDirectionSource);
    for (int i = 0; i < 20; ++i) {
        const GroundTruthSample& gt = s.truth[60 + size_t(i)];
        const PoseEstimate pose = estimate_head_pose(gt.landmarks, model, s.log.meta.camera);
        const Vec3d fc = face_center(pose.pose, model);
        const Vec3d dir = std::get<Vec3d>(recs[60 + size_t(i)].payload);
        const Vec2d raw_px =
            intersect_ray_screen(GazeSample{fc, dir, gt.timestamp}, s.log.meta.screen).px;
        const GazeSample truth_ray =
            gaze_from_target(fc, screen_px_to_camera_3d(gt.target_px, s.log.meta.screen));
        const GazeSample est_ray =
            gaze_from_target(fc, screen_px_to_camera_3d(raw_px, s.log.meta.screen));
        const double manual = angular_error_deg(est_ray.direction, truth_ray.direction);
        CHECK(r.per_sample_errors_deg[size_t(i)] == manual);
    }
}

TEST_CASE("evaluate_session calibration behaviour across sample counts") {
    const SyntheticSession s = noisy_session(23);
    const ReplayEstimator est = sim3d_estimator(s.log);

    auto run = [&](int n_cal) {
        EvalOptions opts;
        opts.n_cal = n_cal;
        opts.n_test = 20;
        return evaluate_session(s.log, est, opts).mean_deg;
    };

    const double raw = run(0);
    const double one = run(1);   // underdetermined spike
    const double full = run(60);
    CHECK(one > raw);
    CHECK(full < raw);  // bias corrected, noise floor remains
    // Full calibration of a 3 deg direction-noise estimator lands at the
    // noise floor, E|theta| = 3 * sqrt(2/pi) ~ 2.4 deg.
    CHECK(full > 2.0);
    CHECK(full < 4.0);

    CHECK_THROWS_AS(run(75), GazeError);  // 75 + 20 > 80
}

TEST_CASE("face-center anchoring: per-frame default, session average exposed") {
    SceneConfig cfg;
    cfg.distance_mm = 750.0;
    cfg.n_samples = 40;
    cfg.seed = 55;
    cfg.landmark_noise_px = 1.0;  // makes the estimated face centres vary
    cfg.direction_noise_deg = 2.0;
    const SyntheticSession s =
        generate_session(cfg, default_face_model(), default_camera(), default_screen());
    const ReplayEstimator est = sim3d_estimator(s.log);

    EvalOptions opts;
    opts.n_cal = 0;
    opts.n_test = 20;
    const EvalResult per_frame = evaluate_session(s.log, est, opts);
    opts.average_face_center = true;
    const EvalResult averaged = evaluate_session(s.log, est, opts);

    CHECK(per_frame.n_test == averaged.n_test);
    CHECK(std::isfinite(averaged.mean_deg));
    // Noisy per-frame centres differ from the session average.
    CHECK(per_frame.mean_deg != averaged.mean_deg);
}

TEST_CASE("scoring is estimator-agnostic and both payload paths agree") {
    const SyntheticSession s = noisy_session(31);

    const ReplayEstimator a = sim3d_estimator(s.log);
    const ReplayEstimator b = sim3d_estimator(s.log);
    EvalOptions opts;
    opts.n_cal = 10;
    opts.n_test = 20;
    const EvalResult ra = evaluate_session(s.log, a, opts);
    const EvalResult rb = evaluate_session(s.log, b, opts);
    REQUIRE(ra.per_sample_errors_deg.size() == rb.per_sample_errors_deg.size());
    for (size_t i = 0; i < ra.per_sample_errors_deg.size(); ++i)
        CHECK(ra.per_sample_errors_deg[i] == rb.per_sample_errors_deg[i]);

    // The 2D stream logs the screen intersection of the 3D stream's ray, so
    // the lifted path must agree with the direction path.
    const ReplayEstimator c(s.log.estimates.at(kSimScreenSource), kSimScreenSource,
                            s.log.meta.screen);
    const EvalResult rc = evaluate_session(s.log, c, opts);
    REQUIRE(rc.per_sample_errors_deg.size() == ra.per_sample_errors_deg.size());
    for (size_t i = 0; i < ra.per_sample_errors_deg.size(); ++i)
        CHECK(std::abs(ra.per_sample_errors_deg[i] - rc.per_sample_errors_deg[i]) < 1e-6);
}

TEST_CASE("sweep tables: determinism and round trip") {
    SweepSpec spec;
    spec.type = SweepSpec::Type::distance;
    spec.distances_mm = {500.0, 1100.0};
    spec.trials = 2;
    spec.estimator = EstimatorKind::sim_direction;
    spec.scene.direction_noise_deg = 2.0;
    spec.scene.n_samples = 40;
    spec.n_test = 10;

    const SweepTable a =
        sweep_distance(spec, default_face_model(), default_camera(), default_screen());
    const SweepTable b =
        sweep_distance(spec, default_face_model(), default_camera(), default_screen());
    CHECK(sweep_table_to_csv(a) == sweep_table_to_csv(b));

    const SweepTable parsed = parse_sweep_csv_text(sweep_table_to_csv(a));
    CHECK(parsed.rows == a.rows);

    CHECK_THROWS_AS(sweep_table_to_csv(SweepTable{}), GazeError);

    // CSV column schema is pinned.
    const std::string csv = sweep_table_to_csv(a);
    CHECK(csv.rfind("distance_mm,n_cal,estimator,mean_deg,std_deg,trials,dropped\n", 0) == 0);
}

TEST_CASE("sweep spec JSON parsing") {
    const SweepSpec spec = parse_sweep_spec_text(R"({
        "format": "gazekit-sweep", "version": 1,
        "type": "calibration-samples",
        "counts": [0, 1, 10],
        "trials": 3,
        "base_seed": 7,
        "estimator": "sim3d",
        "n_test": 15,
        "scene": {"direction_noise_deg": 3.0, "direction_bias_deg": 5.0, "n_samples": 60}
    })");
    CHECK(spec.type == SweepSpec::Type::calibration_samples);
    CHECK(spec.counts == std::vector<int>{0, 1, 10});
    CHECK(spec.estimator == EstimatorKind::sim_direction);
    CHECK(spec.scene.direction_noise_deg == 3.0);

    CHECK_THROWS_AS(parse_sweep_spec_text("{}"), GazeError);
    CHECK_THROWS_AS(parse_sweep_spec_text("not json"), GazeError);
}

TEST_CASE("welch_t_test matches reference fixtures") {
    // Reference values computed independently with SciPy 1.x
    // (stats.ttest_ind(..., equal_var=False)).
    struct Fixture {
        std::vector<double> a, b;
        double t, dof, p;
    };
    const Fixture fixtures[] = {
        {{1.1, 2.3, 2.9, 3.7, 4.1},
         {2.0, 2.1, 3.9, 4.4, 5.0, 5.6},
         -1.2522275523292656, 8.99365632305197, 0.24207042246992494},
        {{10.0, 10.5, 11.0, 9.5, 10.2, 10.8, 9.9},
         {12.1, 12.7, 11.9, 13.3, 12.5},
         -7.052160663743269, 8.561410385610104, 7.664285743465816e-05},
        {{0.5, 0.52, 0.48, 0.51},
         {0.49, 0.53, 0.47, 0.52, 0.5},
         0.036571770904705404, 6.957954870774524, 0.9718535540472333},
    };
    for (const auto& f : fixtures) {
        const WelchResult r = welch_t_test(f.a, f.b);
        CHECK(std::abs(r.t - f.t) < 1e-9);
        CHECK(std::abs(r.dof - f.dof) < 1e-9);
        CHECK(std::abs(r.p_two_tailed - f.p) < 1e-9);
    }
    CHECK_THROWS_AS(welch_t_test({1.0}, {2.0, 3.0}), GazeError);
}
