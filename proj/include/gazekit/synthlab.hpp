#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gazekit/calibration.hpp"
#include "gazekit/face_model.hpp"
#include "gazekit/random.hpp"
#include "gazekit/session.hpp"
#include "gazekit/types.hpp"

// Synthetic scene generator ("virtual lab"): ground-truth sessions emulating
// the desk recording protocol, the oracle for all downstream geometry.

namespace gazekit {

struct SceneConfig {
    double distance_mm = 750.0;

    // Target region, full visual angle as seen from the face. The metric
    // region size scales with distance so the view-angle range stays constant.
    double region_width_deg = 30.0;
    double region_height_deg = 18.0;

    int n_samples = 80;

    double landmark_noise_px = 0.0;   // sigma
    double iris_noise_px = 0.0;       // sigma
    double direction_noise_deg = 0.0; // sigma, appearance-like surrogate stream
    double direction_bias_deg = 0.0;  // constant rotation offset for the surrogate

    double jitter_yaw_deg = 10.0;     // head pose jitter, uniform in +-range
    double jitter_pitch_deg = 8.0;
    double jitter_roll_deg = 4.0;

    // Condition surrogates ("indoor" is the baseline): "outdoor" multiplies
    // landmark/iris noise, "glasses" adds a constant per-session landmark
    // bias plus extra iris noise.
    std::string condition_tag = "indoor";
    double outdoor_noise_factor = 1.5;
    double glasses_landmark_bias_px = 2.0;
    double glasses_iris_noise_factor = 2.0;

    std::uint64_t seed = 1;
    std::string participant_id = "sim";

    void validate() const;
};

// Fixed inter-sample timestep matching the mouse-click protocol: one target
// per video-rate frame burst, click coincident with the target-dot onset.
inline constexpr Timestamp kSampleTimestepUs = 33'333;

// Names of the estimate streams a synthetic session carries.
inline constexpr const char* kSimDirectionSource = "sim3d";  // 3D direction payloads
inline constexpr const char* kSimScreenSource = "sim2d";     // 2D on-screen payloads

struct GroundTruthSample {
    Timestamp timestamp = 0;
    Vec2d target_px = Vec2d::Zero();
    Vec3d target_cam = Vec3d::Zero();
    RigidTransform head_pose;
    Vec3d face_center = Vec3d::Zero();
    GazeSample gaze;                                    // face-anchored, exact
    LandmarkSet landmarks;                              // noisy, as logged
    std::array<Vec2d, kNumLandmarks> landmark_noise{};  // recorded draw
    std::array<Vec2d, 2> iris_noise{};
};

struct SyntheticSession {
    SessionLog log;
    std::vector<GroundTruthSample> truth;
};

// Deterministic given cfg.seed: targets uniform in the constant-visual-angle
// region, per-sample head-pose jitter, landmarks/iris projected then
// perturbed, surrogate estimate streams from the noisy ground-truth gaze.
SyntheticSession generate_session(const SceneConfig& cfg, const FaceModel3D& model,
                                  const CameraIntrinsics& cam, const ScreenModel& screen);

// Default recording rig: C910-like 1080p webcam and a 1210x680 mm display
// centred on and facing the camera axis.
CameraIntrinsics default_camera();
ScreenModel default_screen();

// ---------------------------------------------------------------------------
// Mirror-scene oracle
// ---------------------------------------------------------------------------

// A screen pose reflected through a planar mirror. `mirrored` flags the
// handedness inversion: pattern point q maps into the camera frame as
// pose * (-q.x, q.y, 0) when mirrored.
struct VirtualScreen {
    ScreenModel screen;
    bool mirrored = true;
};

Vec3d reflect_point(const MirrorPlane& mirror, const Vec3d& p);

// Householder reflection of the screen pose; reflecting twice through the
// same plane restores the original.
VirtualScreen reflect_scene(const ScreenModel& screen, const MirrorPlane& mirror);
VirtualScreen reflect_scene(const VirtualScreen& vs, const MirrorPlane& mirror);

// Camera-frame position of a pattern corner on a (possibly mirrored) screen.
Vec3d virtual_screen_point(const VirtualScreen& vs, const Vec2d& pattern_px);

// Rectangular grid of pattern corner positions on the screen, pixels.
std::vector<Vec2d> default_pattern_geometry(const ScreenDims& dims, int cols = 5, int rows = 4);

// Projects the mirrored pattern into the camera and perturbs the detected
// corners with Gaussian pixel noise (rng may be null when noise_px == 0).
MirrorObservation observe_pattern_via_mirror(const ScreenModel& screen_truth,
                                             const MirrorPlane& mirror,
                                             const std::vector<Vec2d>& pattern_px,
                                             const CameraIntrinsics& cam, double noise_px = 0.0,
                                             SplitMix64* rng = nullptr);

}  // namespace gazekit
