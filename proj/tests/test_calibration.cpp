#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gazekit/calibration.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/random.hpp"
#include "gazekit/rotation.hpp"
#include "gazekit/synthlab.hpp"
#include "test_helpers.hpp"

using namespace gazekit;
using gazekit::testing::test_camera;
using gazekit::testing::test_screen;

namespace {

ScreenDims test_dims() { return dims_of(test_screen()); }

CalibrationProfile cubic_ground_truth() {
    CalibrationProfile gt = CalibrationProfile::identity(1920.0, 1080.0);
    // A mild cubic distortion on top of the identity, normalized coordinates.
    gt.coeffs(0, 0) += 0.02;
    gt.coeffs(0, 3) += 0.05;   // x^2
    gt.coeffs(0, 6) += -0.03;  // x^3
    gt.coeffs(0, 4) += 0.01;   // xy
    gt.coeffs(1, 0) += -0.015;
    gt.coeffs(1, 5) += 0.04;   // y^2
    gt.coeffs(1, 9) += 0.02;   // y^3
    gt.coeffs(1, 7) += -0.02;  // x^2 y
    return gt;
}

std::vector<CalibrationPair> pairs_from_profile(const CalibrationProfile& map, int n,
                                                SplitMix64& rng) {
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < n; ++i) {
        const Vec2d est{rng.uniform(100, 1820), rng.uniform(100, 980)};
        pairs.emplace_back(est, apply_calibration(map, est).px);
    }
    return pairs;
}

}  // namespace

TEST_CASE("fit_personal_calibration reproduces the identity") {
    SplitMix64 rng(1);
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < 20; ++i) {
        const Vec2d p{rng.uniform(0, 1920), rng.uniform(0, 1080)};
        pairs.emplace_back(p, p);
    }
    const CalibrationProfile profile = fit_personal_calibration(pairs, test_dims());
    for (int i = 0; i < 50; ++i) {
        const Vec2d p{rng.uniform(0, 1920), rng.uniform(0, 1080)};
        CHECK((apply_calibration(profile, p).px - p).norm() < 1e-9);
    }
    CHECK(profile.rms_residual_px < 1e-9);
}

TEST_CASE("fit_personal_calibration recovers a known cubic distortion") {
    SplitMix64 rng(2);
    const CalibrationProfile gt = cubic_ground_truth();

    const auto pairs = pairs_from_profile(gt, 15, rng);
    const CalibrationProfile fit = fit_personal_calibration(pairs, test_dims());
    CHECK((fit.coeffs - gt.coeffs).cwiseAbs().maxCoeff() < 1e-6);

    // Held-out evaluation, n >= 10 exactness.
    for (int i = 0; i < 100; ++i) {
        const Vec2d p{rng.uniform(100, 1820), rng.uniform(100, 980)};
        CHECK((apply_calibration(fit, p).px - apply_calibration(gt, p).px).norm() < 1e-5);
    }
}

TEST_CASE("in-sample rms never exceeds the best affine fit") {
    SplitMix64 rng(3);
    const CalibrationProfile gt = cubic_ground_truth();
    auto pairs = pairs_from_profile(gt, 40, rng);
    for (auto& [est, truth] : pairs) truth += Vec2d{rng.gaussian(3.0), rng.gaussian(3.0)};

    const CalibrationProfile fit = fit_personal_calibration(pairs, test_dims());

    // Reference affine fit per axis on the same normalized coordinates.
    Eigen::MatrixXd a(int(pairs.size()), 3);
    Eigen::MatrixXd rhs(int(pairs.size()), 2);
    for (size_t i = 0; i < pairs.size(); ++i) {
        const Vec2d en = fit.to_normalized(pairs[i].first);
        a.row(int(i)) << 1.0, en.x(), en.y();
        rhs.row(int(i)) = fit.to_normalized(pairs[i].second).transpose();
    }
    const Eigen::MatrixXd sol = a.colPivHouseholderQr().solve(rhs);
    double sq = 0.0;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const Vec2d en = fit.to_normalized(pairs[i].first);
        const Eigen::Vector3d basis{1.0, en.x(), en.y()};
        const Vec2d fitted = fit.from_normalized(Vec2d(sol.transpose() * basis));
        sq += (fitted - pairs[i].second).squaredNorm();
    }
    const double affine_rms = std::sqrt(sq / double(pairs.size()));
    CHECK(fit.rms_residual_px <= affine_rms + 1e-12);
}

TEST_CASE("rms_residual matches its definition exactly") {
    SplitMix64 rng(4);
    auto pairs = pairs_from_profile(cubic_ground_truth(), 25, rng);
    for (auto& [est, truth] : pairs) truth += Vec2d{rng.gaussian(2.0), rng.gaussian(2.0)};
    const CalibrationProfile fit = fit_personal_calibration(pairs, test_dims());

    double sq_sum = 0.0;
    for (const auto& [est, truth] : pairs)
        sq_sum += (apply_calibration(fit, est).px - truth).squaredNorm();
    CHECK(fit.rms_residual_px == std::sqrt(sq_sum / double(pairs.size())));
}

TEST_CASE("one calibration sample makes corrections worse than raw") {
    // The cubic map is underdetermined from a single pair: the minimum-norm
    // interpolant pulls every point towards the lone calibration target.
    SplitMix64 rng(5);
    const Vec2d bias{25.0, -15.0};
    const Vec2d cal_est{400.0, 300.0};
    const CalibrationProfile one =
        fit_personal_calibration({{cal_est, cal_est - bias}}, test_dims());

    double raw_err = 0.0, corrected_err = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Vec2d truth{rng.uniform(200, 1720), rng.uniform(150, 930)};
        const Vec2d est = truth + bias;
        raw_err += (est - truth).norm();
        corrected_err += (apply_calibration(one, est).px - truth).norm();
    }
    CHECK(corrected_err > raw_err);
}

TEST_CASE("apply_calibration corner cases") {
    const CalibrationProfile ident = CalibrationProfile::identity(1920.0, 1080.0);
    CHECK((apply_calibration(ident, Vec2d{321.5, 654.25}).px - Vec2d{321.5, 654.25}).norm() <
          1e-12);

    CHECK_THROWS_AS(fit_personal_calibration({}, test_dims()), GazeError);

    // Extrapolation flag: fitted region is the bounding box of the inputs.
    SplitMix64 rng(6);
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < 15; ++i) {
        const Vec2d p{rng.uniform(400, 800), rng.uniform(300, 600)};
        pairs.emplace_back(p, p);
    }
    const CalibrationProfile fit = fit_personal_calibration(pairs, test_dims());
    CHECK_FALSE(apply_calibration(fit, Vec2d{600, 450}).extrapolated);
    CHECK(apply_calibration(fit, Vec2d{1600, 900}).extrapolated);
}

// ---------------------------------------------------------------------------
// Mirror calibration
// ---------------------------------------------------------------------------

namespace {

ScreenModel truth_screen() {
    ScreenModel s = test_screen();
    s.pose.rotation = rotation_from_ypr_deg(3.0, -2.0, 1.0);
    s.pose.translation = {-280.0, -160.0, -25.0};
    return s;
}

MirrorPlane tilted_mirror(double tilt_deg, double azimuth_deg, double distance) {
    const double t = deg_to_rad(tilt_deg);
    const double a = deg_to_rad(azimuth_deg);
    return {{std::sin(t) * std::cos(a), std::sin(t) * std::sin(a), std::cos(t)}, distance};
}

}  // namespace

TEST_CASE("reflect_scene involution and axis-aligned translation") {
    const ScreenModel s = truth_screen();
    const MirrorPlane m{{0, 0, 1}, 500.0};

    const VirtualScreen v = reflect_scene(s, m);
    CHECK(v.mirrored);
    // z reflects about the plane z = 500.
    CHECK(v.screen.pose.translation.z() ==
          doctest::Approx(2 * 500.0 - s.pose.translation.z()).epsilon(1e-12));
    CHECK(v.screen.pose.translation.x() == doctest::Approx(s.pose.translation.x()));

    const VirtualScreen back = reflect_scene(v, m);
    CHECK_FALSE(back.mirrored);
    CHECK((back.screen.pose.rotation - s.pose.rotation).norm() < 1e-12);
    CHECK((back.screen.pose.translation - s.pose.translation).norm() < 1e-12);

    CHECK_THROWS_AS(reflect_point(MirrorPlane{Vec3d::Zero(), 1.0}, Vec3d::Zero()), GazeError);
}

TEST_CASE("solve_reflected_pose matches the analytically reflected screen") {
    const CameraIntrinsics cam = test_camera();
    const ScreenModel s = truth_screen();
    const auto pattern = default_pattern_geometry(dims_of(s));

    for (const MirrorPlane& m :
         {tilted_mirror(8, 0, 500), tilted_mirror(16, 120, 550), tilted_mirror(24, 240, 600)}) {
        const MirrorObservation obs = observe_pattern_via_mirror(s, m, pattern, cam);
        const RigidTransform pose = solve_reflected_pose(obs, cam, dims_of(s));

        const VirtualScreen expect = reflect_scene(s, m);
        CHECK(rotation_angle_deg(pose.rotation, expect.screen.pose.rotation) < 0.1);
        CHECK((pose.translation - expect.screen.pose.translation).norm() < 1.0);

        // Loop closure: reprojecting the pattern through the solved pose
        // reproduces the observed corners.
        for (size_t i = 0; i < pattern.size(); ++i) {
            const Vec2d mm = dims_of(s).px_to_mm(pattern[i]);
            const Vec3d p = pose * Vec3d{-mm.x(), mm.y(), 0.0};
            CHECK((project_point(p, cam) - obs.pattern_corners_px[i]).norm() < 1e-9);
        }
    }
}

TEST_CASE("solve_reflected_pose depth for a fronto-parallel mirror") {
    const CameraIntrinsics cam = test_camera();
    ScreenModel s = test_screen();
    s.pose.translation = {-275.0, -155.0, -20.0};
    const MirrorPlane m{{0, 0, 1}, 400.0};

    const MirrorObservation obs =
        observe_pattern_via_mirror(s, m, default_pattern_geometry(dims_of(s)), cam);
    const RigidTransform pose = solve_reflected_pose(obs, cam, dims_of(s));
    // Reflected depth of the screen origin: 2d - z.
    CHECK(pose.translation.z() == doctest::Approx(2 * 400.0 + 20.0).epsilon(1e-9));
}

TEST_CASE("solve_reflected_pose degeneracy errors") {
    const CameraIntrinsics cam = test_camera();
    MirrorObservation obs;
    obs.pattern_geometry_px = {{0, 0}, {100, 0}, {200, 0}};
    obs.pattern_corners_px = {{10, 10}, {20, 10}, {30, 10}};
    CHECK_THROWS_AS(solve_reflected_pose(obs, cam, test_dims()), GazeError);  // < 4 corners

    obs.pattern_geometry_px = {{0, 0}, {100, 0}, {200, 0}, {300, 0}, {400, 0}};
    obs.pattern_corners_px = {{10, 10}, {20, 10}, {30, 10}, {40, 10}, {50, 10}};
    CHECK_THROWS_AS(solve_reflected_pose(obs, cam, test_dims()), GazeError);  // collinear
}

TEST_CASE("calibrate_screen_from_mirrors noiseless recovery") {
    const CameraIntrinsics cam = test_camera();
    const ScreenModel s = truth_screen();
    const auto pattern = default_pattern_geometry(dims_of(s));

    const std::vector<MirrorPlane> mirrors = {tilted_mirror(8, 0, 500),
                                              tilted_mirror(16, 120, 550),
                                              tilted_mirror(24, 240, 600)};
    std::vector<MirrorObservation> obs;
    for (const auto& m : mirrors) obs.push_back(observe_pattern_via_mirror(s, m, pattern, cam));

    const ScreenCalibrationResult res = calibrate_screen_from_mirrors(obs, cam, dims_of(s));
    CHECK(rotation_angle_deg(res.screen.pose.rotation, s.pose.rotation) < 0.5);
    CHECK((res.screen.pose.translation - s.pose.translation).norm() < 5.0);
    CHECK(res.rms_reprojection_px < 1e-6);

    // Recovered mirror planes match the ground truth.
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(res.mirrors[i].normal.dot(mirrors[i].normal)) >
              std::cos(deg_to_rad(0.5)));
        CHECK(std::abs(res.mirrors[i].distance - mirrors[i].distance) < 2.0);
    }
}

TEST_CASE("calibrate_screen_from_mirrors is invariant to observation order") {
    const CameraIntrinsics cam = test_camera();
    const ScreenModel s = truth_screen();
    const auto pattern = default_pattern_geometry(dims_of(s));

    std::vector<MirrorObservation> obs;
    for (const auto& m : {tilted_mirror(10, 30, 480), tilted_mirror(18, 150, 560),
                          tilted_mirror(25, 270, 620), tilted_mirror(14, 90, 520)})
        obs.push_back(observe_pattern_via_mirror(s, m, pattern, cam));

    const auto a = calibrate_screen_from_mirrors(obs, cam, dims_of(s));
    std::reverse(obs.begin(), obs.end());
    const auto b = calibrate_screen_from_mirrors(obs, cam, dims_of(s));

    // acos cannot resolve angles below ~1e-6 deg; compare matrices directly.
    CHECK((a.screen.pose.rotation - b.screen.pose.rotation).norm() < 1e-9);
    CHECK((a.screen.pose.translation - b.screen.pose.translation).norm() < 1e-6);
}

TEST_CASE("calibrate_screen_from_mirrors rejects degenerate setups") {
    const CameraIntrinsics cam = test_camera();
    const ScreenModel s = truth_screen();
    const auto pattern = default_pattern_geometry(dims_of(s));

    std::vector<MirrorObservation> two;
    for (const auto& m : {tilted_mirror(8, 0, 500), tilted_mirror(16, 120, 550)})
        two.push_back(observe_pattern_via_mirror(s, m, pattern, cam));
    CHECK_THROWS_AS(calibrate_screen_from_mirrors(two, cam, dims_of(s)), GazeError);

    // Three parallel mirrors: the normals cannot be separated.
    std::vector<MirrorObservation> parallel;
    for (double d : {450.0, 500.0, 550.0})
        parallel.push_back(
            observe_pattern_via_mirror(s, MirrorPlane{{0, 0, 1}, d}, pattern, cam));
    CHECK_THROWS_AS(calibrate_screen_from_mirrors(parallel, cam, dims_of(s)), GazeError);
}

TEST_CASE("calibrate_screen_from_mirrors tolerates corner noise") {
    const CameraIntrinsics cam = test_camera();
    const ScreenModel s = truth_screen();
    const auto pattern = default_pattern_geometry(dims_of(s));
    SplitMix64 rng(77);

    std::vector<MirrorObservation> obs;
    for (const auto& m : {tilted_mirror(8, 0, 500), tilted_mirror(16, 72, 540),
                          tilted_mirror(22, 144, 580), tilted_mirror(14, 216, 520),
                          tilted_mirror(20, 288, 560)})
        obs.push_back(observe_pattern_via_mirror(s, m, pattern, cam, 0.5, &rng));

    const auto res = calibrate_screen_from_mirrors(obs, cam, dims_of(s));
    CHECK(rotation_angle_deg(res.screen.pose.rotation, s.pose.rotation) < 2.0);
    CHECK((res.screen.pose.translation - s.pose.translation).norm() < 20.0);
}
