#pragma once

#include <optional>

#include "gazekit/image.hpp"
#include "gazekit/types.hpp"

// Data normalization: rotate + scale observations into a virtual camera that
// faces the face centre at a fixed distance, cancelling head-pose variability
// down to two degrees of freedom.

namespace gazekit {

struct NormalizationParams {
    double norm_distance = 600.0;  // d_n, mm
    CameraIntrinsics norm_intrinsics = {960.0, 960.0, 224.0, 224.0, 448, 448};
    int patch_size = 448;          // square output patch
};

struct NormalizedFrame {
    Mat3d rotation_n = Mat3d::Identity();  // normalizing rotation R
    double scale = 1.0;                    // d_n / ||face_center||
    Mat3d warp = Mat3d::Identity();        // pixel -> normalized pixel homography
    Vec3d face_center_cam = Vec3d::Zero();
    int patch_size = 0;
    bool gimbal_fallback = false;  // head y-axis was parallel to the view ray
    std::optional<Image> patch;
};

// Builds the normalizing rotation so that the face centre maps to
// (0, 0, ||face_center||) and the camera x-axis becomes perpendicular to the
// head y-axis, the scale d_n/d, and the combined image warp
// K_n * diag(1,1,s) * R * K^-1.
NormalizedFrame compute_normalization(const Vec3d& face_center, const RigidTransform& head_pose,
                                      const CameraIntrinsics& cam,
                                      const NormalizationParams& params);

// Projective application of the warp (resp. its inverse) to a pixel.
Vec2d warp_point(const Vec2d& p, const NormalizedFrame& frame);
Vec2d unwarp_point(const Vec2d& p, const NormalizedFrame& frame);

// Direction mapping is rotation-only; the scaling matrix does not apply to
// unit vectors.
Vec3d normalize_gaze(const Vec3d& gaze_cam, const NormalizedFrame& frame);
Vec3d denormalize_gaze(const Vec3d& gaze_norm, const NormalizedFrame& frame);

// Inverse-mapping bilinear resample into a patch_size x patch_size raster;
// samples outside the source are zero-filled.
Image warp_image(const Image& img, const NormalizedFrame& frame);

}  // namespace gazekit
