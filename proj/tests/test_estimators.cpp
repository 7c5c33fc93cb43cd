#include <doctest.h>

#include <cmath>

#include "gazekit/estimators.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/headpose.hpp"
#include "gazekit/random.hpp"
#include "gazekit/rotation.hpp"
#include "gazekit/synthlab.hpp"
#include "test_helpers.hpp"

using namespace gazekit;
using gazekit::testing::random_rotation;
using gazekit::testing::test_camera;

namespace {

// Forward model for one frame: head pose + target, everything noiseless.
EstimatorInput forward_frame(const FaceModel3D& model, const RigidTransform& pose,
                             const Vec3d& target, const CameraIntrinsics& cam) {
    EstimatorInput input;
    input.head_pose = pose;
    input.landmarks.timestamp = 0;
    input.landmarks.points = reproject(model, pose, cam);
    std::array<Vec2d, 2> iris;
    for (int eye = 0; eye < 2; ++eye) {
        const Vec3d center = pose * model.eyeball_centers[eye];
        const Vec3d pupil = center + model.eyeball_radius * (target - center).normalized();
        iris[eye] = project_point(pupil, cam);
    }
    input.landmarks.iris_centers = iris;
    return input;
}

}  // namespace

TEST_CASE("geometric_estimate closes the forward model") {
    const CameraIntrinsics cam = test_camera();
    const FaceModel3D model = default_face_model();

    RigidTransform pose;
    pose.translation = {0, 0, 600};
    const Vec3d target{0, 0, 0};  // looking straight at the camera
    const EstimatorInput input = forward_frame(model, pose, target, cam);

    const auto [left, right] = geometric_estimate(input, model, cam);
    for (const GazeSample& s : {left, right}) {
        const Vec3d center = s.origin;
        const Vec3d expect = (target - center).normalized();
        CHECK(angular_error_deg(s.direction, expect) < 1e-6);
        CHECK(std::abs(s.direction.norm() - 1.0) < 1e-9);
        CHECK(s.origin.allFinite());
    }
}

TEST_CASE("geometric_estimate pixel noise hurts more at larger distance") {
    const CameraIntrinsics cam = test_camera();
    const FaceModel3D model = default_face_model();
    SplitMix64 rng(404);

    auto mean_error = [&](double dist) {
        double sum = 0.0;
        int n = 0;
        for (int i = 0; i < 200; ++i) {
            RigidTransform pose;
            pose.translation = {0, 0, dist};
            const Vec3d target{rng.uniform(-150, 150), rng.uniform(-80, 80), 0.0};
            EstimatorInput input = forward_frame(model, pose, target, cam);
            for (auto& px : *input.landmarks.iris_centers)
                px += Vec2d{rng.gaussian(1.0), rng.gaussian(1.0)};
            try {
                const auto [l, r] = geometric_estimate(input, model, cam);
                sum += angular_error_deg(l.direction,
                                         (target - l.origin).normalized());
                ++n;
            } catch (const GazeError&) {
            }
        }
        REQUIRE(n > 150);
        return sum / n;
    };

    CHECK(mean_error(600.0) < mean_error(1800.0));
}

TEST_CASE("geometric_estimate sphere intersection cases") {
    const CameraIntrinsics cam = test_camera();
    FaceModel3D model = default_face_model();

    RigidTransform pose;
    pose.translation = {0, 0, 600};
    EstimatorInput input = forward_frame(model, pose, Vec3d{0, 0, 0}, cam);

    // Tangent ray: aim at the silhouette edge of the left eyeball.
    const Vec3d center = pose * model.eyeball_centers[0];
    const double dist = center.norm();
    const double sin_a = model.eyeball_radius / dist;
    // Rotate the centre ray by exactly asin(r/d): grazing incidence.
    const Vec3d axis = center.cross(Vec3d::UnitY()).normalized();
    const Vec3d tangent_dir = exp_so3(Vec3d(std::asin(sin_a) * axis)) * center.normalized();
    const Vec3d tangent_point_est = tangent_dir * std::sqrt(dist * dist - model.eyeball_radius *
                                                                              model.eyeball_radius);
    (*input.landmarks.iris_centers)[0] = project_point(tangent_point_est, cam);
    CHECK_NOTHROW(geometric_estimate(input, model, cam));

    // Clearly outside: both eyes miss -> frame unavailable via the interface.
    EstimatorInput miss = forward_frame(model, pose, Vec3d{0, 0, 0}, cam);
    (*miss.landmarks.iris_centers)[0] += Vec2d{200.0, 0.0};
    (*miss.landmarks.iris_centers)[1] += Vec2d{200.0, 0.0};
    CHECK_THROWS_AS(geometric_estimate(miss, model, cam), GazeError);
    const GeometricEstimator est(model, cam);
    CHECK_THROWS_AS(est.estimate(miss), GazeError);

    // One eye missing: the interface returns the surviving ray.
    EstimatorInput one = forward_frame(model, pose, Vec3d{0, 0, 0}, cam);
    (*one.landmarks.iris_centers)[0] += Vec2d{200.0, 0.0};
    CHECK(est.estimate(one).size() == 1);

    EstimatorInput no_iris = forward_frame(model, pose, Vec3d{0, 0, 0}, cam);
    no_iris.landmarks.iris_centers.reset();
    CHECK_THROWS_AS(geometric_estimate(no_iris, model, cam), GazeError);
}

TEST_CASE("geometric_estimate is equivariant under a common rotation") {
    const CameraIntrinsics cam = test_camera();
    const FaceModel3D model = default_face_model();
    SplitMix64 rng(99);

    for (int i = 0; i < 50; ++i) {
        RigidTransform pose;
        pose.rotation = rotation_from_ypr_deg(rng.uniform(-15, 15), rng.uniform(-10, 10), 0.0);
        pose.translation = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(500, 900)};
        const Vec3d target{rng.uniform(-200, 200), rng.uniform(-100, 100), 0.0};

        const Mat3d r = exp_so3(Vec3d(0.1 * gazekit::testing::random_unit_vector(rng)));
        RigidTransform pose_rot{r * pose.rotation, r * pose.translation};

        const auto a = geometric_estimate(forward_frame(model, pose, target, cam), model, cam);
        const auto b = geometric_estimate(
            forward_frame(model, pose_rot, Vec3d(r * target), cam), model, cam);

        CHECK((b.first.direction - r * a.first.direction).norm() < 1e-9);
        CHECK((b.second.direction - r * a.second.direction).norm() < 1e-9);
    }
}

TEST_CASE("replay estimator window rules") {
    std::vector<EstimateRecord> records;
    const Vec3d d0 = Vec3d{0.1, -0.2, -0.9}.normalized();
    const Vec3d d1 = Vec3d{-0.3, 0.1, -0.9}.normalized();
    records.push_back({100'000, "cnn", d0});
    records.push_back({133'000, "cnn", d1});
    const ReplayEstimator replay(records, "cnn", std::nullopt, 10'000);

    EstimatorInput input;
    input.normalized = NormalizedFrame{};
    input.normalized->face_center_cam = {0, 0, 600};

    // Exact timestamp: the logged value, verbatim.
    input.timestamp = 100'000;
    CHECK((replay.estimate(input)[0].direction - d0).norm() == 0.0);

    // Within the window: nearest record, no interpolation.
    input.timestamp = 103'000;
    CHECK((replay.estimate(input)[0].direction - d0).norm() == 0.0);

    // Outside every window: unavailable.
    input.timestamp = 150'000;
    CHECK_THROWS_AS(replay.estimate(input), GazeError);

    // Unsorted input is rejected at construction.
    std::vector<EstimateRecord> unsorted = {records[1], records[0]};
    CHECK_THROWS_AS(ReplayEstimator(unsorted, "cnn", std::nullopt, 10'000), GazeError);
}

TEST_CASE("replay estimator lifts 2D payloads through the screen") {
    const ScreenModel screen = gazekit::testing::test_screen();
    std::vector<EstimateRecord> records;
    records.push_back({0, "tracker", Vec2d{640.0, 400.0}});
    const ReplayEstimator replay(records, "tracker", screen, 10'000);

    EstimatorInput input;
    input.timestamp = 0;
    input.normalized = NormalizedFrame{};
    input.normalized->face_center_cam = {10, -20, 700};

    const GazeSample s = replay.estimate(input)[0];
    const Vec3d expect = screen_px_to_camera_3d(Vec2d{640.0, 400.0}, screen);
    CHECK((s.origin - input.normalized->face_center_cam).norm() == 0.0);
    CHECK(angular_error_deg(s.direction, expect - s.origin) < 1e-9);

    // Without a screen model the 2D payload cannot be lifted.
    const ReplayEstimator no_screen(records, "tracker", std::nullopt, 10'000);
    CHECK_THROWS_AS(no_screen.estimate(input), GazeError);
}
