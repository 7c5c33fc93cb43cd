#include <doctest.h>

#include <cmath>

#include "gazekit/geometry.hpp"
#include "gazekit/headpose.hpp"
#include "gazekit/random.hpp"
#include "gazekit/rotation.hpp"
#include "test_helpers.hpp"

using namespace gazekit;
using gazekit::testing::test_camera;

namespace {

LandmarkSet project_model(const FaceModel3D& model, const RigidTransform& pose,
                          const CameraIntrinsics& cam) {
    LandmarkSet lm;
    lm.points = reproject(model, pose, cam);
    return lm;
}

RigidTransform random_head_pose(SplitMix64& rng) {
    const double yaw = rng.uniform(-25.0, 25.0);
    const double pitch = rng.uniform(-10.0, 25.0);
    const double roll = rng.uniform(-10.0, 10.0);
    RigidTransform pose;
    pose.rotation = rotation_from_ypr_deg(yaw, pitch, roll);
    pose.translation = {rng.uniform(-150.0, 150.0), rng.uniform(-100.0, 100.0),
                        rng.uniform(400.0, 1500.0)};
    return pose;
}

// Non-planar variant: mouth corners pushed behind the eye plane.
FaceModel3D nonplanar_face_model() {
    FaceModel3D m = default_face_model();
    m.points[4].z() = 10.0;
    m.points[5].z() = 10.0;
    return m;
}

}  // namespace

TEST_CASE("reproject pinhole basics") {
    const CameraIntrinsics cam = test_camera();
    FaceModel3D m = default_face_model();
    m.validate();

    // A point on the optical axis lands on the principal point.
    CHECK((project_point(Vec3d{0, 0, 600}, cam) - Vec2d{cam.cx, cam.cy}).norm() < 1e-12);

    // x' = fx*X/Z + cx.
    CameraIntrinsics cam2 = cam;
    cam2.fx = 1000.0;
    cam2.cx = 960.0;
    CHECK(project_point(Vec3d{100, 0, 1000}, cam2).x() == doctest::Approx(1060.0));

    CHECK_THROWS_AS(project_point(Vec3d{0, 0, -5}, cam), GazeError);
}

TEST_CASE("face_center transforms the model centroid") {
    const FaceModel3D m = default_face_model();
    const Vec3d centroid = m.centroid();

    CHECK((face_center(RigidTransform::identity(), m) - centroid).norm() < 1e-12);

    RigidTransform shift;
    shift.translation = {0, 0, 600};
    CHECK((face_center(shift, m) - (centroid + Vec3d{0, 0, 600})).norm() < 1e-12);

    // 90 degrees about y then translate: (x,y,z) -> (z, y, -x) + t.
    RigidTransform pose;
    pose.rotation = rotation_from_ypr_deg(90.0, 0.0, 0.0);
    pose.translation = {10, 20, 700};
    const Vec3d expect = Vec3d{centroid.z(), centroid.y(), -centroid.x()} + pose.translation;
    CHECK((face_center(pose, m) - expect).norm() < 1e-9);
}

TEST_CASE("estimate_head_pose recovers a frontal pose exactly") {
    const CameraIntrinsics cam = test_camera();
    const FaceModel3D model = default_face_model();

    RigidTransform truth;
    truth.translation = {0, 0, 600};
    const LandmarkSet lm = project_model(model, truth, cam);

    const PoseEstimate est = estimate_head_pose(lm, model, cam);
    CHECK(rotation_angle_deg(est.pose.rotation, truth.rotation) < 0.1);
    CHECK((est.pose.translation - truth.translation).norm() < 1.0);
    CHECK(est.mean_reprojection_error_px < 1e-6);
}

TEST_CASE("estimate_head_pose over random poses: planar and non-planar models") {
    const CameraIntrinsics cam = test_camera();
    SplitMix64 rng(1234);

    for (const FaceModel3D& model : {default_face_model(), nonplanar_face_model()}) {
        for (int i = 0; i < 100; ++i) {
            const RigidTransform truth = random_head_pose(rng);
            const LandmarkSet lm = project_model(model, truth, cam);
            const PoseEstimate est = estimate_head_pose(lm, model, cam);

            CHECK(rotation_angle_deg(est.pose.rotation, truth.rotation) < 0.1);
            CHECK((est.pose.translation - truth.translation).norm() < 1.0);
            CHECK(est.mean_reprojection_error_px <= est.initial_reprojection_error_px + 1e-12);
            CHECK(est.pose.is_rigid(1e-9));

            // Noiseless consistency: solving again from the reprojection of the
            // estimate reproduces it.
            const LandmarkSet lm2 = project_model(model, est.pose, cam);
            for (int k = 0; k < kNumLandmarks; ++k)
                CHECK((lm2.points[k] - lm.points[k]).norm() < 1e-6);
        }
    }
}

TEST_CASE("estimate_head_pose under landmark noise: frozen regression bound") {
    const CameraIntrinsics cam = test_camera();
    const FaceModel3D model = default_face_model();
    SplitMix64 rng(2024);

    RigidTransform truth;
    truth.translation = {0, 0, 600};

    double sum_rot_err = 0.0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
        LandmarkSet lm = project_model(model, truth, cam);
        for (auto& p : lm.points) p += Vec2d{rng.gaussian(1.0), rng.gaussian(1.0)};
        const PoseEstimate est = estimate_head_pose(lm, model, cam);
        sum_rot_err += rotation_angle_deg(est.pose.rotation, truth.rotation);
    }
    // Regression bound frozen from the first run of this Monte-Carlo setup
    // (measured mean 7.8 deg; the planar model viewed fronto-parallel is the
    // weakly-constrained case for out-of-plane tilt, ~0.12 px per degree at
    // this distance). Guards against solver regressions, not accuracy.
    CHECK(sum_rot_err / trials < 12.0);
}

TEST_CASE("estimate_head_pose rejects degenerate input") {
    const CameraIntrinsics cam = test_camera();
    FaceModel3D collinear = default_face_model();
    for (int i = 0; i < kNumLandmarks; ++i) collinear.points[i] = {double(i) * 10.0, 0.0, 0.0};

    RigidTransform pose;
    pose.translation = {0, 0, 600};
    const LandmarkSet lm = project_model(collinear, pose, cam);
    CHECK_THROWS_AS(estimate_head_pose(lm, collinear, cam), GazeError);

    CHECK_THROWS_AS(collinear.validate(), GazeError);
}

TEST_CASE("epnp handles generic non-planar correspondences") {
    const CameraIntrinsics cam = test_camera();
    SplitMix64 rng(555);

    for (int i = 0; i < 50; ++i) {
        std::vector<Vec3d> world;
        for (int k = 0; k < 8; ++k)
            world.push_back({rng.uniform(-80, 80), rng.uniform(-80, 80), rng.uniform(-40, 40)});

        RigidTransform truth;
        truth.rotation = exp_so3(Vec3d(0.4 * gazekit::testing::random_unit_vector(rng)));
        truth.translation = {rng.uniform(-100, 100), rng.uniform(-100, 100),
                             rng.uniform(500, 1200)};

        std::vector<Vec2d> image;
        for (const auto& p : world) image.push_back(project_point(Vec3d(truth * p), cam));

        const RigidTransform est = detail::solve_epnp(world, image, cam);
        CHECK(rotation_angle_deg(est.rotation, truth.rotation) < 0.5);
        CHECK((est.translation - truth.translation).norm() < 5.0);
    }
}
