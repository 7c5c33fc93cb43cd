#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "gazekit/types.hpp"

// Personal calibration (third-order 2D polynomial correction in screen-pixel
// space) and camera-screen extrinsic calibration from planar-mirror
// observations of an on-screen pattern.

namespace gazekit {

// Physical/pixel dimensions of a screen, without a pose.
struct ScreenDims {
    double width_mm = 0.0;
    double height_mm = 0.0;
    int width_px = 0;
    int height_px = 0;

    Vec2d px_to_mm(const Vec2d& px) const {
        return {px.x() * width_mm / width_px, px.y() * height_mm / height_px};
    }
};

template <typename Scalar>
ScreenDims dims_of(const ScreenModelT<Scalar>& s) {
    return {double(s.width_mm), double(s.height_mm), s.width_px, s.height_px};
}

inline ScreenModel make_screen(const RigidTransform& pose, const ScreenDims& d) {
    return {pose, d.width_mm, d.height_mm, d.width_px, d.height_px};
}

// ---------------------------------------------------------------------------
// Personal calibration
// ---------------------------------------------------------------------------

inline constexpr int kCalibBasisSize = 10;

// Monomial basis [1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3].
Eigen::Matrix<double, kCalibBasisSize, 1> cubic_basis(double x, double y);

struct CalibrationProfile {
    // One row of 10 monomial coefficients per output axis, over pixel
    // coordinates affinely scaled to [-1, 1]^2 by the screen bounds below.
    Eigen::Matrix<double, 2, kCalibBasisSize> coeffs =
        Eigen::Matrix<double, 2, kCalibBasisSize>::Zero();
    int n_samples = 0;
    double rms_residual_px = 0.0;
    Timestamp created_at = 0;

    // Pixel -> [-1,1] normalization bounds (screen size at fit time).
    double norm_width_px = 2.0;
    double norm_height_px = 2.0;

    // Bounding box of the calibration inputs; points outside are flagged as
    // extrapolated when the profile is applied.
    Vec2d region_min = Vec2d::Zero();
    Vec2d region_max = Vec2d::Zero();

    Vec2d to_normalized(const Vec2d& px) const {
        return {2.0 * px.x() / norm_width_px - 1.0, 2.0 * px.y() / norm_height_px - 1.0};
    }
    Vec2d from_normalized(const Vec2d& n) const {
        return {(n.x() + 1.0) * 0.5 * norm_width_px, (n.y() + 1.0) * 0.5 * norm_height_px};
    }

    // The identity correction for a given screen size.
    static CalibrationProfile identity(double width_px, double height_px);
};

struct CalibratedPoint {
    Vec2d px = Vec2d::Zero();
    bool extrapolated = false;
};

using CalibrationPair = std::pair<Vec2d, Vec2d>;  // (estimated px, true px)

// Per-axis least-squares fit over the 10-term cubic basis. Underdetermined
// systems (n < 10) get the minimum-norm solution: singular values below
// 1e-10 * sigma_max are truncated.
CalibrationProfile fit_personal_calibration(const std::vector<CalibrationPair>& pairs,
                                            const ScreenDims& screen, Timestamp created_at = 0);

CalibratedPoint apply_calibration(const CalibrationProfile& profile, const Vec2d& p);

// ---------------------------------------------------------------------------
// Mirror-based camera-screen calibration
// ---------------------------------------------------------------------------

// Plane n . x = distance in the camera frame, ||n|| = 1, distance >= 0 after
// normalization (n and -n describe the same mirror).
struct MirrorPlane {
    Vec3d normal = Vec3d::UnitZ();
    double distance = 0.0;

    void validate() const {
        if (!normal.allFinite() || normal.norm() < 1e-12)
            throw GazeError(errc::invalid_vector, "mirror normal must be non-zero");
    }
};

struct MirrorObservation {
    std::vector<Vec2d> pattern_corners_px;   // detected reflection in the camera image
    std::vector<Vec2d> pattern_geometry_px;  // pattern corner positions on the screen
};

// Pose of the mirrored pattern as observed. The reflection has left-handed
// apparent orientation; the returned (proper) rotation is expressed over the
// x-flipped pattern, i.e. pattern point q maps to
//   pose * (-q_mm.x, q_mm.y, 0).
RigidTransform solve_reflected_pose(const MirrorObservation& obs, const CameraIntrinsics& cam,
                                    const ScreenDims& screen);

struct ScreenCalibrationResult {
    ScreenModel screen;
    std::vector<MirrorPlane> mirrors;
    double rms_reprojection_px = 0.0;
};

// Recovers the fixed screen pose and the K mirror planes from >= 3 mirror
// observations: per-observation reflected PnP, mirror normals from the
// relative-rotation axes (the linear reflection-consistency system), screen
// rotation by averaging H_k * C_k and projecting onto SO(3), translations and
// mirror distances from a linear least-squares system, then joint LM
// refinement of everything on the total corner reprojection error.
ScreenCalibrationResult calibrate_screen_from_mirrors(
    const std::vector<MirrorObservation>& observations, const CameraIntrinsics& cam,
    const ScreenDims& screen);

}  // namespace gazekit
