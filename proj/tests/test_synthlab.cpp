#include <doctest.h>

#include <cmath>

#include "gazekit/estimators.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/headpose.hpp"
#include "gazekit/io.hpp"
#include "gazekit/synthlab.hpp"

using namespace gazekit;

namespace {

SceneConfig base_config(double distance, std::uint64_t seed) {
    SceneConfig cfg;
    cfg.distance_mm = distance;
    cfg.n_samples = 80;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("generate_session ground-truth invariants") {
    const SceneConfig cfg = base_config(750.0, 7);
    const FaceModel3D model = default_face_model();
    const SyntheticSession s = generate_session(cfg, model, default_camera(), default_screen());

    REQUIRE(int(s.truth.size()) == cfg.n_samples);
    REQUIRE(s.log.landmarks.size() == s.truth.size());
    REQUIRE(s.log.clicks.size() == s.truth.size());

    for (size_t i = 0; i < s.truth.size(); ++i) {
        const GroundTruthSample& gt = s.truth[i];
        // Gaze is exactly the normalized face-to-target vector.
        const Vec3d expect = (gt.target_cam - gt.face_center).normalized();
        CHECK((gt.gaze.direction - expect).norm() == 0.0);
        CHECK((gt.gaze.origin - gt.face_center).norm() == 0.0);

        // Landmarks are the noiseless reprojection plus the recorded noise.
        const auto clean = reproject(model, gt.head_pose, default_camera());
        for (int k = 0; k < kNumLandmarks; ++k)
            CHECK((gt.landmarks.points[k] - (clean[k] + gt.landmark_noise[k])).norm() == 0.0);

        // Clicks coincide with target-dot onset.
        CHECK(s.log.clicks[i].timestamp == gt.timestamp);
        CHECK((s.log.clicks[i].target_px - gt.target_px).norm() == 0.0);
        CHECK(gt.timestamp == Timestamp(i) * kSampleTimestepUs);
    }
}

TEST_CASE("generate_session determinism: same seed, byte-identical logs") {
    const SceneConfig cfg = [] {
        SceneConfig c = base_config(750.0, 42);
        c.landmark_noise_px = 1.0;
        c.iris_noise_px = 0.5;
        c.direction_noise_deg = 3.0;
        c.direction_bias_deg = 4.0;
        return c;
    }();
    const auto a = generate_session(cfg, default_face_model(), default_camera(), default_screen());
    const auto b = generate_session(cfg, default_face_model(), default_camera(), default_screen());
    CHECK(io::session_to_text(a.log) == io::session_to_text(b.log));
    CHECK(io::truth_to_text(a.truth) == io::truth_to_text(b.truth));

    SceneConfig other = cfg;
    other.seed = 43;
    const auto c = generate_session(other, default_face_model(), default_camera(), default_screen());
    CHECK(io::session_to_text(a.log) != io::session_to_text(c.log));
}

TEST_CASE("constant visual angle across distances") {
    const FaceModel3D model = default_face_model();
    auto measured_angle = [&](double dist) {
        SceneConfig cfg = base_config(dist, 5);
        cfg.n_samples = 2000;
        const auto s = generate_session(cfg, model, default_camera(), default_screen());
        double max_dev_px = 0.0;
        for (const auto& gt : s.truth)
            max_dev_px = std::max(max_dev_px, std::abs(gt.target_px.x() - 960.0));
        const double mm = max_dev_px * default_screen().pitch_x();
        return 2.0 * rad_to_deg(std::atan(mm / dist));
    };
    const double a750 = measured_angle(750.0);
    const double a1800 = measured_angle(1800.0);
    CHECK(std::abs(a750 - a1800) / a750 < 0.01);
    // And both match the configured region width.
    CHECK(std::abs(a750 - 30.0) / 30.0 < 0.01);
}

TEST_CASE("region exceeding the screen is a config error") {
    SceneConfig cfg = base_config(1800.0, 1);
    cfg.region_width_deg = 42.0;  // 2*1800*tan(21 deg) = 1382 mm > 1210 mm screen
    CHECK_THROWS_AS(generate_session(cfg, default_face_model(), default_camera(), default_screen()),
                    GazeError);
}

TEST_CASE("noiseless sessions close the geometric estimator loop end-to-end") {
    const FaceModel3D model = default_face_model();
    const CameraIntrinsics cam = default_camera();
    const ScreenModel screen = default_screen();
    const SceneConfig cfg = base_config(750.0, 11);
    const SyntheticSession s = generate_session(cfg, model, cam, screen);

    for (const GroundTruthSample& gt : s.truth) {
        const PoseEstimate pose = estimate_head_pose(gt.landmarks, model, cam);
        EstimatorInput input;
        input.landmarks = gt.landmarks;
        input.head_pose = pose.pose;
        input.timestamp = gt.timestamp;
        const auto [l, r] = geometric_estimate(input, model, cam);
        const ScreenHit hit = midpoint_gaze_point(l, r, screen);
        const Vec3d fc = face_center(pose.pose, model);
        const GazeSample est = gaze_from_target(fc, screen_px_to_camera_3d(hit.px, screen));
        CHECK(angular_error_deg(est.direction, gt.gaze.direction) < 1e-6);
    }
}

TEST_CASE("condition surrogates degrade accuracy in the expected direction") {
    const FaceModel3D model = default_face_model();
    const CameraIntrinsics cam = default_camera();
    const ScreenModel screen = default_screen();

    auto mean_iris_noise = [&](const std::string& condition) {
        SceneConfig cfg = base_config(750.0, 21);
        cfg.iris_noise_px = 1.0;
        cfg.landmark_noise_px = 1.0;
        cfg.condition_tag = condition;
        const auto s = generate_session(cfg, model, cam, screen);
        double sum = 0.0;
        for (const auto& gt : s.truth)
            for (const auto& n : gt.iris_noise) sum += n.norm();
        return sum / double(2 * s.truth.size());
    };

    const double indoor = mean_iris_noise("indoor");
    const double outdoor = mean_iris_noise("outdoor");
    const double glasses = mean_iris_noise("glasses");
    CHECK(outdoor > indoor);
    CHECK(glasses > outdoor);  // 2x iris noise vs 1.5x

    // Glasses add a constant landmark bias on top of the noise.
    SceneConfig cfg = base_config(750.0, 22);
    cfg.condition_tag = "glasses";
    const auto s = generate_session(cfg, model, cam, screen);
    Vec2d mean_noise = Vec2d::Zero();
    for (const auto& gt : s.truth)
        for (const auto& n : gt.landmark_noise) mean_noise += n;
    mean_noise /= double(kNumLandmarks * s.truth.size());
    CHECK(mean_noise.norm() == doctest::Approx(cfg.glasses_landmark_bias_px).epsilon(1e-9));
}
