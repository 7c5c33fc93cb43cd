#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gazekit/face_model.hpp"
#include "gazekit/normalization.hpp"
#include "gazekit/types.hpp"

// Pluggable gaze estimators: a geometric landmark estimator (model-based
// stand-in) and a replay adapter for externally produced per-frame outputs
// (CNN logs, commercial-tracker logs).

namespace gazekit {

struct EstimatorInput {
    LandmarkSet landmarks;
    RigidTransform head_pose;                  // head -> camera
    std::optional<NormalizedFrame> normalized; // carries the face centre
    Timestamp timestamp = 0;                   // matches landmarks.timestamp
};

enum class PayloadKind { direction_3d, screen_px };

// One logged estimator output. Exactly one payload kind per record.
struct EstimateRecord {
    Timestamp timestamp = 0;
    std::string source_id;
    std::variant<Vec3d, Vec2d> payload;  // direction (camera frame) or screen pixels

    PayloadKind kind() const {
        return std::holds_alternative<Vec3d>(payload) ? PayloadKind::direction_3d
                                                      : PayloadKind::screen_px;
    }
};

class Estimator {
public:
    virtual ~Estimator() = default;
    virtual std::string_view id() const = 0;

    // One face-anchored ray, or two per-eye rays (left, right). Throws
    // GazeError(estimator_unavailable) when the frame cannot be served; the
    // caller skips and counts such frames.
    virtual std::vector<GazeSample> estimate(const EstimatorInput& input) const = 0;
};

// Model-based estimate for both eyes: the eyeball centres under the head
// pose, the pupil as the near intersection of the iris-pixel camera ray with
// the eyeball sphere, gaze along centre -> pupil.
std::pair<GazeSample, GazeSample> geometric_estimate(const EstimatorInput& input,
                                                     const FaceModel3D& model,
                                                     const CameraIntrinsics& cam);

class GeometricEstimator final : public Estimator {
public:
    GeometricEstimator(FaceModel3D model, CameraIntrinsics cam)
        : model_(std::move(model)), cam_(cam) {}

    std::string_view id() const override { return "geometric"; }
    std::vector<GazeSample> estimate(const EstimatorInput& input) const override;

private:
    FaceModel3D model_;
    CameraIntrinsics cam_;
};

// Replays logged estimates by nearest-timestamp lookup within a tolerance
// window; never interpolates. 2D records are lifted to rays through the
// screen via the frame's face centre.
class ReplayEstimator final : public Estimator {
public:
    ReplayEstimator(std::vector<EstimateRecord> records, std::string source_id,
                    std::optional<ScreenModel> screen, Timestamp window_us = 10'000);

    std::string_view id() const override { return source_id_; }
    std::vector<GazeSample> estimate(const EstimatorInput& input) const override;

    const EstimateRecord& nearest(Timestamp t) const;  // throws when outside any window
    Timestamp window_us() const { return window_us_; }

private:
    std::vector<EstimateRecord> records_;  // strictly increasing timestamps
    std::string source_id_;
    std::optional<ScreenModel> screen_;
    Timestamp window_us_;
};

// Reads a replay file (see docs/formats.md) and builds the adapter for one
// source. `screen` is required for screen_px payloads.
ReplayEstimator load_replay_estimator(const std::string& path, const std::string& source_id,
                                      std::optional<ScreenModel> screen,
                                      Timestamp window_us = 10'000);

}  // namespace gazekit
