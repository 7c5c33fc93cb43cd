#pragma once

#include <array>
#include <vector>

#include "gazekit/face_model.hpp"
#include "gazekit/types.hpp"

namespace gazekit {

struct PoseEstimate {
    RigidTransform pose;                     // head frame -> camera frame
    double mean_reprojection_error_px = 0.0; // after refinement
    double initial_reprojection_error_px = 0.0;  // EPnP solution, before refinement
    int iterations = 0;
};

// Perspective projection of the six model points under a pose.
std::array<Vec2d, kNumLandmarks> reproject(const FaceModel3D& model, const RigidTransform& pose,
                                           const CameraIntrinsics& cam);

// Head pose from six 2D-3D correspondences: EPnP initial solution (planar
// branch when the model is coplanar) refined by damped Gauss-Newton on the
// reprojection error with an so(3) local rotation update. The refined pose
// never reprojects worse than the EPnP estimate.
PoseEstimate estimate_head_pose(const LandmarkSet& lm, const FaceModel3D& model,
                                const CameraIntrinsics& cam);

// Centroid of the six model points in the camera frame; the toolkit-wide
// gaze-ray origin.
Vec3d face_center(const RigidTransform& pose, const FaceModel3D& model);

namespace detail {
// EPnP on arbitrary correspondences (n >= 4). Exposed for tests.
RigidTransform solve_epnp(const std::vector<Vec3d>& world, const std::vector<Vec2d>& image,
                          const CameraIntrinsics& cam);
}  // namespace detail

}  // namespace gazekit
