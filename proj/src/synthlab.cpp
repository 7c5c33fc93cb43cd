#include "gazekit/synthlab.hpp"

#include <cmath>

#include "gazekit/geometry.hpp"
#include "gazekit/headpose.hpp"
#include "gazekit/rotation.hpp"

namespace gazekit {

namespace {

// Stream ids for per-sample generator splitting (documented in the README).
enum Stream : std::uint64_t {
    kStreamSessionBias = 0,
    kStreamTarget = 1,
    kStreamPose = 2,
    kStreamLandmark = 3,
    kStreamIris = 4,
    kStreamDirection = 5,
};

// Unit vector orthogonal to d at azimuth phi within d's tangent plane.
Vec3d tangent_axis(const Vec3d& d, double phi) {
    const Vec3d ref = std::abs(d.z()) < 0.9 ? Vec3d::UnitZ() : Vec3d::UnitX();
    const Vec3d u = d.cross(ref).normalized();
    const Vec3d v = d.cross(u);
    return std::cos(phi) * u + std::sin(phi) * v;
}

}  // namespace

void SceneConfig::validate() const {
    if (!(distance_mm > 0.0))
        throw GazeError(errc::config_error, "distance must be positive");
    if (!(region_width_deg > 0.0) || region_width_deg >= 170.0 ||
        !(region_height_deg > 0.0) || region_height_deg >= 170.0)
        throw GazeError(errc::config_error, "target region angle out of range");
    if (n_samples <= 0)
        throw GazeError(errc::config_error, "n_samples must be positive");
    if (landmark_noise_px < 0.0 || iris_noise_px < 0.0 || direction_noise_deg < 0.0 ||
        direction_bias_deg < 0.0)
        throw GazeError(errc::config_error, "noise levels must be non-negative");
    if (jitter_yaw_deg < 0.0 || jitter_pitch_deg < 0.0 || jitter_roll_deg < 0.0)
        throw GazeError(errc::config_error, "pose jitter ranges must be non-negative");
}

CameraIntrinsics default_camera() {
    return {1400.0, 1400.0, 960.0, 540.0, 1920, 1080};
}

ScreenModel default_screen() {
    ScreenModel s;
    s.pose.rotation = Mat3d::Identity();
    s.pose.translation = {-605.0, -340.0, 0.0};  // centred on the optical axis
    s.width_mm = 1210.0;
    s.height_mm = 680.0;
    s.width_px = 1920;
    s.height_px = 1080;
    return s;
}

SyntheticSession generate_session(const SceneConfig& cfg, const FaceModel3D& model,
                                  const CameraIntrinsics& cam, const ScreenModel& screen) {
    cfg.validate();
    model.validate();
    cam.validate();
    screen.validate();

    double lm_sigma = cfg.landmark_noise_px;
    double iris_sigma = cfg.iris_noise_px;
    Vec2d lm_bias = Vec2d::Zero();
    if (cfg.condition_tag == "outdoor") {
        lm_sigma *= cfg.outdoor_noise_factor;
        iris_sigma *= cfg.outdoor_noise_factor;
    } else if (cfg.condition_tag == "glasses") {
        SplitMix64 rng = split_stream(cfg.seed, kStreamSessionBias, 0);
        const double phi = rng.uniform(0.0, 2.0 * EIGEN_PI);
        lm_bias = cfg.glasses_landmark_bias_px * Vec2d{std::cos(phi), std::sin(phi)};
        iris_sigma *= cfg.glasses_iris_noise_factor;
    }

    // Fixed per-session bias rotation for the appearance-like surrogate.
    Mat3d bias_rot = Mat3d::Identity();
    if (cfg.direction_bias_deg > 0.0) {
        SplitMix64 rng = split_stream(cfg.seed, kStreamSessionBias, 1);
        const double phi = rng.uniform(0.0, 2.0 * EIGEN_PI);
        const Vec3d axis = tangent_axis(-Vec3d::UnitZ(), phi);
        bias_rot = exp_so3(Vec3d(deg_to_rad(cfg.direction_bias_deg) * axis));
    }

    // Target region: constant visual angle from the face, so the metric size
    // scales with distance.
    const double half_w_mm = cfg.distance_mm * std::tan(deg_to_rad(cfg.region_width_deg) / 2.0);
    const double half_h_mm = cfg.distance_mm * std::tan(deg_to_rad(cfg.region_height_deg) / 2.0);
    const Vec2d center_px{double(screen.width_px) / 2.0, double(screen.height_px) / 2.0};
    const double half_w_px = half_w_mm / screen.pitch_x();
    const double half_h_px = half_h_mm / screen.pitch_y();
    if (center_px.x() - half_w_px < 0.0 || center_px.x() + half_w_px > screen.width_px ||
        center_px.y() - half_h_px < 0.0 || center_px.y() + half_h_px > screen.height_px)
        throw GazeError(errc::config_error, "target region exceeds the screen");

    SyntheticSession out;
    out.log.meta.participant_id = cfg.participant_id;
    out.log.meta.condition_tag = cfg.condition_tag;
    out.log.meta.distance_mm = cfg.distance_mm;
    out.log.meta.camera = cam;
    out.log.meta.screen = screen;

    const Vec3d face_target{0.0, 0.0, cfg.distance_mm};
    auto& dir_stream = out.log.estimates[kSimDirectionSource];
    auto& px_stream = out.log.estimates[kSimScreenSource];

    for (int i = 0; i < cfg.n_samples; ++i) {
        GroundTruthSample gt;
        gt.timestamp = Timestamp(i) * kSampleTimestepUs;

        SplitMix64 rng_t = split_stream(cfg.seed, kStreamTarget, std::uint64_t(i));
        gt.target_px = {center_px.x() + rng_t.uniform(-half_w_px, half_w_px),
                        center_px.y() + rng_t.uniform(-half_h_px, half_h_px)};
        gt.target_cam = screen_px_to_camera_3d(gt.target_px, screen);

        SplitMix64 rng_p = split_stream(cfg.seed, kStreamPose, std::uint64_t(i));
        gt.head_pose.rotation = rotation_from_ypr_deg(
            rng_p.uniform(-cfg.jitter_yaw_deg, cfg.jitter_yaw_deg),
            rng_p.uniform(-cfg.jitter_pitch_deg, cfg.jitter_pitch_deg),
            rng_p.uniform(-cfg.jitter_roll_deg, cfg.jitter_roll_deg));
        gt.head_pose.translation = face_target - gt.head_pose.rotation * model.centroid();
        gt.face_center = face_center(gt.head_pose, model);

        gt.gaze = gaze_from_target(gt.face_center, gt.target_cam, gt.timestamp);

        // Landmarks: noiseless projection plus the recorded noise draw.
        gt.landmarks.timestamp = gt.timestamp;
        gt.landmarks.points = reproject(model, gt.head_pose, cam);
        SplitMix64 rng_l = split_stream(cfg.seed, kStreamLandmark, std::uint64_t(i));
        for (int k = 0; k < kNumLandmarks; ++k) {
            gt.landmark_noise[k] =
                Vec2d{rng_l.gaussian(lm_sigma), rng_l.gaussian(lm_sigma)} + lm_bias;
            gt.landmarks.points[k] += gt.landmark_noise[k];
        }

        // Iris centres: project the pupil of an eye fixating the target.
        SplitMix64 rng_i = split_stream(cfg.seed, kStreamIris, std::uint64_t(i));
        std::array<Vec2d, 2> iris{};
        for (int eye = 0; eye < 2; ++eye) {
            const Vec3d eye_center = gt.head_pose * model.eyeball_centers[eye];
            const Vec3d eye_dir = (gt.target_cam - eye_center).normalized();
            const Vec3d pupil = eye_center + model.eyeball_radius * eye_dir;
            gt.iris_noise[eye] = {rng_i.gaussian(iris_sigma), rng_i.gaussian(iris_sigma)};
            iris[eye] = project_point(pupil, cam) + gt.iris_noise[eye];
        }
        gt.landmarks.iris_centers = iris;

        // Appearance-like surrogate: ground-truth direction with a fixed bias
        // rotation and per-sample direction noise, logged both as a 3D
        // direction and as its on-screen intersection.
        SplitMix64 rng_d = split_stream(cfg.seed, kStreamDirection, std::uint64_t(i));
        Vec3d dir = bias_rot * gt.gaze.direction;
        if (cfg.direction_noise_deg > 0.0) {
            const double angle = deg_to_rad(rng_d.gaussian(cfg.direction_noise_deg));
            const double phi = rng_d.uniform(0.0, 2.0 * EIGEN_PI);
            dir = exp_so3(Vec3d(angle * tangent_axis(dir, phi))) * dir;
        }
        dir_stream.push_back({gt.timestamp, kSimDirectionSource, dir});
        try {
            const ScreenHit hit =
                intersect_ray_screen(GazeSample{gt.face_center, dir, gt.timestamp}, screen);
            px_stream.push_back({gt.timestamp, kSimScreenSource, hit.px});
        } catch (const GazeError&) {
            // Ray deflected away from the screen plane; no 2D record.
        }

        out.log.landmarks.push_back(gt.landmarks);
        out.log.clicks.push_back({gt.timestamp, gt.target_px});
        out.truth.push_back(std::move(gt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mirror-scene oracle
// ---------------------------------------------------------------------------

Vec3d reflect_point(const MirrorPlane& mirror, const Vec3d& p) {
    mirror.validate();
    const Vec3d n = mirror.normal.normalized();
    return p - 2.0 * (n.dot(p) - mirror.distance) * n;
}

namespace {

VirtualScreen reflect_pose(const ScreenModel& s, bool mirrored, const MirrorPlane& mirror) {
    mirror.validate();
    const Vec3d n = mirror.normal.normalized();
    const Mat3d house = Mat3d::Identity() - 2.0 * n * n.transpose();
    Mat3d flip = Mat3d::Identity();
    flip(0, 0) = -1.0;

    VirtualScreen out;
    out.screen = s;
    out.screen.pose.rotation = house * s.pose.rotation * flip;
    out.screen.pose.translation = house * s.pose.translation + 2.0 * mirror.distance * n;
    out.mirrored = !mirrored;
    return out;
}

}  // namespace

VirtualScreen reflect_scene(const ScreenModel& screen, const MirrorPlane& mirror) {
    return reflect_pose(screen, false, mirror);
}

VirtualScreen reflect_scene(const VirtualScreen& vs, const MirrorPlane& mirror) {
    return reflect_pose(vs.screen, vs.mirrored, mirror);
}

Vec3d virtual_screen_point(const VirtualScreen& vs, const Vec2d& pattern_px) {
    const Vec2d mm = vs.screen.px_to_mm(pattern_px);
    const Vec3d p{vs.mirrored ? -mm.x() : mm.x(), mm.y(), 0.0};
    return vs.screen.pose * p;
}

std::vector<Vec2d> default_pattern_geometry(const ScreenDims& dims, int cols, int rows) {
    std::vector<Vec2d> corners;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            corners.push_back({dims.width_px * (0.15 + 0.7 * c / double(cols - 1)),
                               dims.height_px * (0.15 + 0.7 * r / double(rows - 1))});
    return corners;
}

MirrorObservation observe_pattern_via_mirror(const ScreenModel& screen_truth,
                                             const MirrorPlane& mirror,
                                             const std::vector<Vec2d>& pattern_px,
                                             const CameraIntrinsics& cam, double noise_px,
                                             SplitMix64* rng) {
    const VirtualScreen vs = reflect_scene(screen_truth, mirror);
    MirrorObservation obs;
    obs.pattern_geometry_px = pattern_px;
    for (const Vec2d& q : pattern_px) {
        const Vec3d p = virtual_screen_point(vs, q);
        Vec2d px = project_point(p, cam);
        if (noise_px > 0.0 && rng) px += Vec2d{rng->gaussian(noise_px), rng->gaussian(noise_px)};
        obs.pattern_corners_px.push_back(px);
    }
    return obs;
}

}  // namespace gazekit
